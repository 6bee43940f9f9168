#include "reqsmith/qflra.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace reqsmith::qflra {

namespace {

[[noreturn]] void internal_error(const std::string& msg) {
  throw TermError(TermError::Kind::SortError, "solver internal error: " + msg);
}

// --------------------------------------------------------------------------
// Normalization: lift real-sorted ite out of comparisons, rewrite real
// equality into a conjunction of two weak inequalities. The result contains
// only Boolean structure over {<, <=, >, >=} atoms.

bool split_real_ite(const TermPtr& t, TermPtr& cond, TermPtr& with_then, TermPtr& with_else) {
  if (t->kind == TermKind::Ite && t->sort == Sort::Real) {
    cond = t->args[0];
    with_then = t->args[1];
    with_else = t->args[2];
    return true;
  }
  if (t->kind == TermKind::Arith) {
    for (size_t i = 0; i < t->args.size(); ++i) {
      TermPtr c, a, b;
      if (!split_real_ite(t->args[i], c, a, b)) continue;
      auto rebuild = [&](TermPtr sub) {
        std::vector<TermPtr> args = t->args;
        args[i] = std::move(sub);
        switch (t->arith) {
          case ArithOp::Add: return mk_add(std::move(args));
          case ArithOp::Sub: return mk_sub(std::move(args));
          case ArithOp::Mul: return mk_mul(std::move(args));
        }
        internal_error("bad arith op");
      };
      cond = c;
      with_then = rebuild(a);
      with_else = rebuild(b);
      return true;
    }
  }
  return false;
}

TermPtr normalize_bool(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::BoolConst:
    case TermKind::Var:
      return t;
    case TermKind::Not:
      return mk_not(normalize_bool(t->args[0]));
    case TermKind::And:
    case TermKind::Or: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(normalize_bool(a));
      return t->kind == TermKind::And ? mk_and(std::move(args)) : mk_or(std::move(args));
    }
    case TermKind::Implies:
      return mk_implies(normalize_bool(t->args[0]), normalize_bool(t->args[1]));
    case TermKind::Iff:
      return mk_iff(normalize_bool(t->args[0]), normalize_bool(t->args[1]));
    case TermKind::Ite:
      return mk_ite(normalize_bool(t->args[0]), normalize_bool(t->args[1]),
                    normalize_bool(t->args[2]));
    case TermKind::Cmp: {
      for (int i = 0; i < 2; ++i) {
        TermPtr c, wt, we;
        if (!split_real_ite(t->args[i], c, wt, we)) continue;
        TermPtr other = t->args[1 - i];
        TermPtr then_cmp = i == 0 ? mk_cmp(t->cmp, wt, other) : mk_cmp(t->cmp, other, wt);
        TermPtr else_cmp = i == 0 ? mk_cmp(t->cmp, we, other) : mk_cmp(t->cmp, other, we);
        return normalize_bool(
            mk_or({mk_and({c, then_cmp}), mk_and({mk_not(c), else_cmp})}));
      }
      if (t->cmp == CmpOp::Eq)
        return mk_and({mk_cmp(CmpOp::Le, t->args[0], t->args[1]),
                       mk_cmp(CmpOp::Ge, t->args[0], t->args[1])});
      return t;
    }
    default:
      internal_error("real term in boolean position");
  }
}

// --------------------------------------------------------------------------
// Linear forms: sum(coef[v] * v) + cst, interpreted against <= 0 or < 0.

struct LinForm {
  std::map<std::string, Rat> coef;
  Rat cst{0};
};

void strip_zeros(LinForm& f) {
  for (auto it = f.coef.begin(); it != f.coef.end();)
    it = it->second == 0 ? f.coef.erase(it) : std::next(it);
}

void add_scaled(LinForm& f, const Term& t, const Rat& k) {
  switch (t.kind) {
    case TermKind::RealConst:
      f.cst += k * t.num;
      return;
    case TermKind::Var:
      f.coef[t.var] += k;
      return;
    case TermKind::Arith:
      switch (t.arith) {
        case ArithOp::Add:
          for (const auto& a : t.args) add_scaled(f, *a, k);
          return;
        case ArithOp::Sub:
          if (t.args.size() == 1) {
            add_scaled(f, *t.args[0], -k);
          } else {
            add_scaled(f, *t.args[0], k);
            for (size_t i = 1; i < t.args.size(); ++i) add_scaled(f, *t.args[i], -k);
          }
          return;
        case ArithOp::Mul: {
          Rat scale = k;
          const Term* non_const = nullptr;
          for (const auto& a : t.args) {
            if (a->kind == TermKind::RealConst)
              scale *= a->num;
            else
              non_const = a.get();
          }
          if (non_const)
            add_scaled(f, *non_const, scale);
          else
            f.cst += scale;
          return;
        }
      }
      return;
    default:
      internal_error("non-linear or unlifted term in linearization");
  }
}

LinForm negated(const LinForm& f) {
  LinForm out;
  for (const auto& [v, c] : f.coef) out.coef[v] = -c;
  out.cst = -f.cst;
  return out;
}

// --------------------------------------------------------------------------
// Tseitin encoding. Variable 1 is reserved as "true".

struct AtomRow {
  LinForm f;
  bool strict = false;  // f < 0 when true, f <= 0 otherwise
};

class CnfBuilder {
 public:
  CnfBuilder() { clauses_.push_back({kTrue}); }

  void add_assertion(const TermPtr& t) { clauses_.push_back({lit(t)}); }

  int n_vars() const { return n_; }
  std::vector<std::vector<int>>& clauses() { return clauses_; }
  const std::map<int, AtomRow>& atoms() const { return atoms_; }
  const std::map<std::string, int>& bool_vars() const { return bool_vars_; }

 private:
  static constexpr int kTrue = 1;

  int fresh() { return ++n_; }

  int lit(const TermPtr& t) {
    switch (t->kind) {
      case TermKind::BoolConst:
        return t->bval ? kTrue : -kTrue;
      case TermKind::Var: {
        auto [it, inserted] = bool_vars_.try_emplace(t->var, 0);
        if (inserted) it->second = fresh();
        return it->second;
      }
      case TermKind::Not:
        return -lit(t->args[0]);
      case TermKind::And:
      case TermKind::Or: {
        std::vector<int> xs;
        xs.reserve(t->args.size());
        for (const auto& a : t->args) xs.push_back(lit(a));
        bool conj = t->kind == TermKind::And;
        int v = fresh();
        std::vector<int> big{conj ? v : -v};
        for (int x : xs) {
          clauses_.push_back({conj ? -v : v, conj ? x : -x});
          big.push_back(conj ? -x : x);
        }
        clauses_.push_back(std::move(big));
        return v;
      }
      case TermKind::Implies: {
        int a = lit(t->args[0]);
        int b = lit(t->args[1]);
        int v = fresh();
        clauses_.push_back({-v, -a, b});
        clauses_.push_back({v, a});
        clauses_.push_back({v, -b});
        return v;
      }
      case TermKind::Iff: {
        int a = lit(t->args[0]);
        int b = lit(t->args[1]);
        int v = fresh();
        clauses_.push_back({-v, -a, b});
        clauses_.push_back({-v, a, -b});
        clauses_.push_back({v, a, b});
        clauses_.push_back({v, -a, -b});
        return v;
      }
      case TermKind::Ite: {
        int c = lit(t->args[0]);
        int a = lit(t->args[1]);
        int b = lit(t->args[2]);
        int v = fresh();
        clauses_.push_back({-v, -c, a});
        clauses_.push_back({-v, c, b});
        clauses_.push_back({v, -c, -a});
        clauses_.push_back({v, c, -b});
        return v;
      }
      case TermKind::Cmp:
        return atom_lit(t);
      default:
        internal_error("real term in boolean position");
    }
  }

  int atom_lit(const TermPtr& t) {
    LinForm f;
    bool strict = false;
    switch (t->cmp) {
      case CmpOp::Lt:
        strict = true;
        [[fallthrough]];
      case CmpOp::Le:
        add_scaled(f, *t->args[0], Rat(1));
        add_scaled(f, *t->args[1], Rat(-1));
        break;
      case CmpOp::Gt:
        strict = true;
        [[fallthrough]];
      case CmpOp::Ge:
        add_scaled(f, *t->args[0], Rat(-1));
        add_scaled(f, *t->args[1], Rat(1));
        break;
      case CmpOp::Eq:
        internal_error("equality atom escaped normalization");
    }
    strip_zeros(f);
    if (f.coef.empty()) {
      bool truth = strict ? f.cst < 0 : f.cst <= 0;
      return truth ? kTrue : -kTrue;
    }
    Rat lead = abs(f.coef.begin()->second);
    for (auto& [v, c] : f.coef) c /= lead;
    f.cst /= lead;
    std::string key;
    for (const auto& [v, c] : f.coef) key += v + " " + c.get_str() + " ";
    key += "| " + f.cst.get_str() + (strict ? " <" : " <=");
    auto it = atom_ids_.find(key);
    if (it != atom_ids_.end()) return it->second;
    int v = fresh();
    atom_ids_.emplace(std::move(key), v);
    atoms_.emplace(v, AtomRow{std::move(f), strict});
    return v;
  }

  int n_ = 1;
  std::vector<std::vector<int>> clauses_;
  std::map<std::string, int> bool_vars_;
  std::map<std::string, int> atom_ids_;
  std::map<int, AtomRow> atoms_;
};

// --------------------------------------------------------------------------
// Plain DPLL with unit propagation and chronological backtracking. Values:
// 0 unassigned, 1 true, -1 false (1-indexed).

class Dpll {
 public:
  Dpll(int n_vars, const std::vector<std::vector<int>>& clauses)
      : cls_(clauses), val_(n_vars + 1, 0) {}

  std::optional<std::vector<int8_t>> run() {
    for (;;) {
      if (!propagate()) {
        if (!backtrack()) return std::nullopt;
        continue;
      }
      int v = next_unassigned();
      if (v == 0) return val_;
      set(v, true);
    }
  }

 private:
  struct Entry {
    int var;
    bool decision;
    bool flipped;
  };

  bool lit_true(int l) const { return val_[std::abs(l)] == (l > 0 ? 1 : -1); }
  bool lit_false(int l) const { return val_[std::abs(l)] == (l > 0 ? -1 : 1); }

  void set(int lit, bool decision) {
    val_[std::abs(lit)] = lit > 0 ? 1 : -1;
    trail_.push_back({std::abs(lit), decision, false});
  }

  bool propagate() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& c : cls_) {
        int unassigned = 0;
        int last = 0;
        bool sat = false;
        for (int l : c) {
          if (lit_true(l)) {
            sat = true;
            break;
          }
          if (!lit_false(l)) {
            ++unassigned;
            last = l;
            if (unassigned > 1) break;
          }
        }
        if (sat) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          set(last, false);
          changed = true;
        }
      }
    }
    return true;
  }

  bool backtrack() {
    while (!trail_.empty()) {
      Entry e = trail_.back();
      trail_.pop_back();
      int8_t was = val_[e.var];
      val_[e.var] = 0;
      if (e.decision && !e.flipped) {
        val_[e.var] = was == 1 ? -1 : 1;
        trail_.push_back({e.var, true, true});
        return true;
      }
    }
    return false;
  }

  int next_unassigned() const {
    for (int v = 1; v < static_cast<int>(val_.size()); ++v)
      if (val_[v] == 0) return v;
    return 0;
  }

  const std::vector<std::vector<int>>& cls_;
  std::vector<int8_t> val_;
  std::vector<Entry> trail_;
};

// --------------------------------------------------------------------------
// Fourier-Motzkin elimination with provenance. Each row carries the SAT
// literals it descends from, so a derived contradiction names the exact
// literal subset to block.

struct Row {
  LinForm f;
  bool strict = false;
  std::set<int> src;
};

struct FmOut {
  bool sat = false;
  std::map<std::string, Rat> model;
  std::set<int> conflict;
};

FmOut fm_solve(std::vector<Row> rows) {
  std::vector<std::pair<std::string, std::vector<Row>>> hist;

  for (;;) {
    // Constant rows either contradict or can be dropped.
    std::vector<Row> live;
    for (Row& r : rows) {
      strip_zeros(r.f);
      if (r.f.coef.empty()) {
        if (r.f.cst > 0 || (r.strict && r.f.cst == 0)) return {false, {}, r.src};
        continue;
      }
      live.push_back(std::move(r));
    }
    rows = std::move(live);
    if (rows.empty()) break;

    // Pick the variable with the smallest upper*lower product to limit the
    // number of derived rows.
    std::map<std::string, std::pair<size_t, size_t>> occ;
    for (const Row& r : rows)
      for (const auto& [v, c] : r.f.coef)
        (c > 0 ? occ[v].first : occ[v].second)++;
    std::string x;
    size_t best = SIZE_MAX;
    for (const auto& [v, pn] : occ) {
      size_t score = pn.first * pn.second;
      if (score < best) {
        best = score;
        x = v;
      }
    }

    std::vector<Row> with_x, rest;
    for (Row& r : rows)
      (r.f.coef.count(x) ? with_x : rest).push_back(std::move(r));
    for (const Row& u : with_x) {
      if (u.f.coef.at(x) <= 0) continue;  // upper bounds have positive coef
      for (const Row& l : with_x) {
        Rat b = l.f.coef.at(x);
        if (b >= 0) continue;
        Rat a = u.f.coef.at(x);
        Row nr;
        nr.strict = u.strict || l.strict;
        nr.src = u.src;
        nr.src.insert(l.src.begin(), l.src.end());
        for (const auto& [v, c] : u.f.coef) nr.f.coef[v] += -b * c;
        nr.f.cst += -b * u.f.cst;
        for (const auto& [v, c] : l.f.coef) nr.f.coef[v] += a * c;
        nr.f.cst += a * l.f.cst;
        rest.push_back(std::move(nr));
      }
    }
    hist.emplace_back(x, std::move(with_x));
    rows = std::move(rest);
  }

  // Back-substitution: assign variables in reverse elimination order, keeping
  // each inside the numeric bounds induced by the rows snapshotted when it
  // was eliminated.
  std::map<std::string, Rat> assign;
  for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
    const std::string& x = it->first;
    bool has_lo = false, has_hi = false;
    Rat lo{0}, hi{0};
    for (const Row& r : it->second) {
      Rat a = r.f.coef.at(x);
      Rat rest = r.f.cst;
      for (const auto& [v, c] : r.f.coef) {
        if (v == x) continue;
        // Variables that only ever bounded others from one side are free:
        // fix them at 0 the first time they are needed.
        auto [slot, inserted] = assign.try_emplace(v, Rat(0));
        rest += c * slot->second;
      }
      Rat bound = -rest / a;
      if (a > 0) {
        if (!has_hi || bound < hi) {
          hi = bound;
          has_hi = true;
        }
      } else {
        if (!has_lo || bound > lo) {
          lo = bound;
          has_lo = true;
        }
      }
    }
    Rat v{0};
    if (has_lo && has_hi)
      v = lo == hi ? lo : Rat((lo + hi) / 2);
    else if (has_lo)
      v = lo + 1;
    else if (has_hi)
      v = hi - 1;
    v.canonicalize();
    assign[x] = v;
  }
  return {true, std::move(assign), {}};
}

}  // namespace

// --------------------------------------------------------------------------

SolveResult solve(const std::vector<TermPtr>& assertions, const Schema& schema) {
  CnfBuilder cnf;
  for (const auto& a : assertions) {
    if (a->sort != Sort::Bool) internal_error("assertion is not Bool-sorted");
    cnf.add_assertion(normalize_bool(a));
  }

  for (;;) {
    Dpll sat(cnf.n_vars(), cnf.clauses());
    auto assignment = sat.run();
    if (!assignment) return {};

    std::vector<Row> rows;
    for (const auto& [v, atom] : cnf.atoms()) {
      if ((*assignment)[v] == 1)
        rows.push_back({atom.f, atom.strict, {v}});
      else
        rows.push_back({negated(atom.f), !atom.strict, {-v}});
    }
    FmOut theory = fm_solve(std::move(rows));
    if (!theory.sat) {
      std::vector<int> blocking;
      blocking.reserve(theory.conflict.size());
      for (int l : theory.conflict) blocking.push_back(-l);
      cnf.clauses().push_back(std::move(blocking));
      continue;
    }

    SolveResult out;
    out.sat = true;
    for (const VarDecl& d : schema.vars()) {
      if (d.sort == Sort::Bool) {
        auto it = cnf.bool_vars().find(d.name);
        bool val = it != cnf.bool_vars().end() && (*assignment)[it->second] == 1;
        out.model.set_bool(d.name, val);
      } else {
        auto it = theory.model.find(d.name);
        out.model.set_real(d.name, it != theory.model.end() ? it->second : Rat(0));
      }
    }
    return out;
  }
}

std::vector<size_t> minimize_core(const std::vector<TermPtr>& assertions,
                                  const Schema& schema,
                                  const std::vector<size_t>& named) {
  std::set<size_t> removed;
  for (size_t i : named) {
    removed.insert(i);
    std::vector<TermPtr> subset;
    for (size_t j = 0; j < assertions.size(); ++j)
      if (!removed.count(j)) subset.push_back(assertions[j]);
    if (solve(subset, schema).sat) removed.erase(i);
  }
  std::vector<size_t> core;
  for (size_t i : named)
    if (!removed.count(i)) core.push_back(i);
  std::sort(core.begin(), core.end());
  return core;
}

}  // namespace reqsmith::qflra
