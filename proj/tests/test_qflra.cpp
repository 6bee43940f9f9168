#include "reqsmith/qflra.hpp"

#include <doctest.h>

#include <random>

#include "reqsmith/parser.hpp"

using namespace reqsmith;

namespace {

Schema xy_schema() {
  Schema s;
  s.add({"x", Sort::Real, ""});
  s.add({"y", Sort::Real, ""});
  s.add({"z", Sort::Real, ""});
  s.add({"p", Sort::Bool, ""});
  s.add({"q", Sort::Bool, ""});
  return s;
}

std::vector<TermPtr> parse_all(const Schema& s, const std::vector<std::string>& texts) {
  std::vector<TermPtr> out;
  for (const auto& t : texts) out.push_back(parse_term(t, s));
  return out;
}

bool model_satisfies(const std::vector<TermPtr>& asserts, const Assignment& m) {
  for (const auto& a : asserts)
    if (!evaluate_bool(a, m)) return false;
  return true;
}

}  // namespace

TEST_CASE("empty assertion set is satisfiable with defaults") {
  Schema s = xy_schema();
  auto res = qflra::solve({}, s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x") == Value::of_real(Rat(0)));
  CHECK(res.model.values.at("p") == Value::of_bool(false));
}

TEST_CASE("boolean contradiction and disjunction") {
  Schema s = xy_schema();
  CHECK(!qflra::solve(parse_all(s, {"p", "(not p)"}), s).sat);

  auto asserts = parse_all(s, {"(or p q)", "(not p)"});
  auto res = qflra::solve(asserts, s);
  REQUIRE(res.sat);
  CHECK(model_satisfies(asserts, res.model));
  CHECK(res.model.values.at("q") == Value::of_bool(true));
}

TEST_CASE("strict versus weak bounds") {
  Schema s = xy_schema();
  CHECK(!qflra::solve(parse_all(s, {"(> x 400.0)", "(< x 400.0)"}), s).sat);

  auto res = qflra::solve(parse_all(s, {"(>= x 400.0)", "(<= x 400.0)"}), s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x") == Value::of_real(Rat(400)));

  auto open = qflra::solve(parse_all(s, {"(< 0.0 x)", "(< x 1.0)"}), s);
  REQUIRE(open.sat);
  Rat v = open.model.values.at("x").r;
  CHECK(v > 0);
  CHECK(v < 1);
}

TEST_CASE("cyclic strict chain is unsat") {
  Schema s = xy_schema();
  CHECK(!qflra::solve(parse_all(s, {"(< x y)", "(< y z)", "(< z x)"}), s).sat);
  auto res = qflra::solve(parse_all(s, {"(< x y)", "(< y z)"}), s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x").r < res.model.values.at("y").r);
  CHECK(res.model.values.at("y").r < res.model.values.at("z").r);
}

TEST_CASE("real equality splits into both inequalities") {
  Schema s = xy_schema();
  CHECK(!qflra::solve(parse_all(s, {"(= x 5.0)", "(= x 6.0)"}), s).sat);

  auto ne = parse_all(s, {"(not (= x 5.0))", "(>= x 4.9)", "(<= x 5.1)"});
  auto res = qflra::solve(ne, s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x").r != Rat(5));
  CHECK(model_satisfies(ne, res.model));
}

TEST_CASE("exact rational witness for a scaled equality") {
  Schema s = xy_schema();
  auto res = qflra::solve(parse_all(s, {"(= (* 3.0 x) 1.0)"}), s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x") == Value::of_real(Rat(1, 3)));
}

TEST_CASE("real ite is lifted by case split") {
  Schema s = xy_schema();
  CHECK(!qflra::solve(parse_all(s, {"(> (ite p x 0.0) 3.0)", "(not p)"}), s).sat);

  auto asserts = parse_all(s, {"(> (ite p x 0.0) 3.0)"});
  auto res = qflra::solve(asserts, s);
  REQUIRE(res.sat);
  CHECK(model_satisfies(asserts, res.model));
  CHECK(res.model.values.at("p") == Value::of_bool(true));
  CHECK(res.model.values.at("x").r > Rat(3));
}

TEST_CASE("implication forces the consequent") {
  Schema s;
  s.add({"bolus_active", Sort::Bool, ""});
  s.add({"alarm_active", Sort::Bool, ""});
  s.add({"volume", Sort::Real, ""});
  auto asserts = parse_all(
      s, {"(=> (and bolus_active (> volume 400.0)) alarm_active)", "bolus_active",
          "(= volume 401.0)"});
  auto res = qflra::solve(asserts, s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("alarm_active") == Value::of_bool(true));
  CHECK(res.model.values.at("volume") == Value::of_real(Rat(401)));
}

TEST_CASE("entailment via negated consequence") {
  Schema s = xy_schema();
  // x >= 10 entails x >= 5
  CHECK(!qflra::solve(parse_all(s, {"(>= x 10.0)", "(not (>= x 5.0))"}), s).sat);
  // but not x >= 20
  CHECK(qflra::solve(parse_all(s, {"(>= x 10.0)", "(not (>= x 20.0))"}), s).sat);
}

TEST_CASE("mixed boolean and theory reasoning") {
  Schema s = xy_schema();
  auto asserts = parse_all(s, {"(or (< x 1.0) (> x 9.0))", "(>= x 2.0)", "(<= x 8.0)"});
  CHECK(!qflra::solve(asserts, s).sat);

  auto relaxed = parse_all(s, {"(or (< x 1.0) (> x 9.0))", "(>= x 2.0)"});
  auto res = qflra::solve(relaxed, s);
  REQUIRE(res.sat);
  CHECK(res.model.values.at("x").r > Rat(9));
}

TEST_CASE("unsat core minimization keeps only the conflicting pair") {
  Schema s = xy_schema();
  auto asserts = parse_all(s, {"(> x 5.0)", "(< x 3.0)", "(> y 0.0)"});
  REQUIRE(!qflra::solve(asserts, s).sat);
  CHECK(qflra::minimize_core(asserts, s, {0, 1, 2}) == std::vector<size_t>{0, 1});
}

TEST_CASE("core is empty when the background alone is unsat") {
  Schema s = xy_schema();
  auto asserts = parse_all(s, {"(> x 5.0)", "(< x 3.0)", "(> y 0.0)"});
  CHECK(qflra::minimize_core(asserts, s, {2}).empty());
}

TEST_CASE("core interacts with unnamed background") {
  Schema s = xy_schema();
  auto asserts = parse_all(s, {"(> x 5.0)", "(< x 3.0)", "(> y 0.0)"});
  CHECK(qflra::minimize_core(asserts, s, {1, 2}) == std::vector<size_t>{1});
}

// ---------------------------------------------------------------------------
// Property: boolean-only formulas against truth-table enumeration.

namespace {

class BoolGen {
 public:
  explicit BoolGen(uint32_t seed) : rng_(seed) {}

  TermPtr gen(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(7)) {
      case 0: return leaf();
      case 1: return mk_not(gen(depth - 1));
      case 2: return mk_and({gen(depth - 1), gen(depth - 1)});
      case 3: return mk_or({gen(depth - 1), gen(depth - 1)});
      case 4: return mk_implies(gen(depth - 1), gen(depth - 1));
      case 5: return mk_iff(gen(depth - 1), gen(depth - 1));
      default: return mk_ite(gen(depth - 1), gen(depth - 1), gen(depth - 1));
    }
  }

 private:
  TermPtr leaf() {
    switch (pick(5)) {
      case 0: return mk_true();
      case 1: return mk_false();
      case 2: return mk_var("p", Sort::Bool);
      case 3: return mk_var("q", Sort::Bool);
      default: return mk_var("r", Sort::Bool);
    }
  }
  int pick(int n) { return static_cast<int>(rng_() % static_cast<uint32_t>(n)); }
  std::mt19937 rng_;
};

}  // namespace

TEST_CASE("boolean fragment agrees with truth-table enumeration") {
  Schema s;
  s.add({"p", Sort::Bool, ""});
  s.add({"q", Sort::Bool, ""});
  s.add({"r", Sort::Bool, ""});
  BoolGen gen(2026);
  for (int i = 0; i < 300; ++i) {
    TermPtr f = gen.gen(4);
    bool table_sat = false;
    for (int bits = 0; bits < 8 && !table_sat; ++bits) {
      Assignment a;
      a.set_bool("p", bits & 1);
      a.set_bool("q", bits & 2);
      a.set_bool("r", bits & 4);
      table_sat = evaluate_bool(f, a);
    }
    auto res = qflra::solve({f}, s);
    CAPTURE(print_term(f));
    CHECK(res.sat == table_sat);
    if (res.sat) CHECK(evaluate_bool(f, res.model));
  }
}

// ---------------------------------------------------------------------------
// Property: arithmetic formulas. Sat answers must come with a model that
// evaluates to true; unsat answers must leave no solution on a half-integer
// grid (a necessary condition that catches unsound unsat verdicts).

namespace {

class LraGen {
 public:
  explicit LraGen(uint32_t seed) : rng_(seed) {}

  TermPtr formula(int depth) {
    if (depth <= 0) return atom();
    switch (pick(6)) {
      case 0: return atom();
      case 1: return mk_not(formula(depth - 1));
      case 2: return mk_and({formula(depth - 1), formula(depth - 1)});
      case 3: return mk_or({formula(depth - 1), formula(depth - 1)});
      case 4: return mk_implies(formula(depth - 1), formula(depth - 1));
      default: return mk_var("p", Sort::Bool);
    }
  }

 private:
  TermPtr atom() {
    CmpOp op = static_cast<CmpOp>(pick(5));
    return mk_cmp(op, expr(), expr());
  }
  TermPtr expr() {
    // c0 + c1*x + c2*y with small integer coefficients
    std::vector<TermPtr> parts{mk_real(Rat(pick(7) - 3))};
    int c1 = pick(5) - 2;
    int c2 = pick(5) - 2;
    if (c1) parts.push_back(mk_mul({mk_real(Rat(c1)), mk_var("x", Sort::Real)}));
    if (c2) parts.push_back(mk_mul({mk_real(Rat(c2)), mk_var("y", Sort::Real)}));
    return parts.size() == 1 ? parts[0] : mk_add(std::move(parts));
  }
  int pick(int n) { return static_cast<int>(rng_() % static_cast<uint32_t>(n)); }
  std::mt19937 rng_;
};

}  // namespace

TEST_CASE("arithmetic fragment: sound models, no grid witnesses for unsat") {
  Schema s;
  s.add({"x", Sort::Real, ""});
  s.add({"y", Sort::Real, ""});
  s.add({"p", Sort::Bool, ""});
  LraGen gen(975);
  for (int i = 0; i < 250; ++i) {
    TermPtr f = gen.formula(3);
    auto res = qflra::solve({f}, s);
    CAPTURE(print_term(f));
    if (res.sat) {
      CHECK(evaluate_bool(f, res.model));
    } else {
      bool grid_sat = false;
      for (int xi = -6; xi <= 6 && !grid_sat; ++xi)
        for (int yi = -6; yi <= 6 && !grid_sat; ++yi)
          for (int pb = 0; pb < 2 && !grid_sat; ++pb) {
            Assignment a;
            a.set_real("x", Rat(xi, 2));
            a.set_real("y", Rat(yi, 2));
            a.set_bool("p", pb);
            grid_sat = evaluate_bool(f, a);
          }
      CHECK(!grid_sat);
    }
  }
}
