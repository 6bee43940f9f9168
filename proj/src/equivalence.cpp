#include "reqsmith/equivalence.hpp"

#include <algorithm>

#include "reqsmith/parser.hpp"

namespace reqsmith {

namespace {

using Labeled = std::vector<std::pair<std::string, TermPtr>>;

// One direction: is there a state under C that `holds` permits but `broken`
// forbids?
CheckResult directional_check(const DomainConstraints& c, const TermPtr& holds,
                              const TermPtr& broken, SessionPool& pool) {
  Labeled q = c.items();
  q.emplace_back("probe_holds", holds);
  q.emplace_back("probe_broken", mk_not(broken));
  auto lease = pool.acquire();
  return lease->check_under(q);
}

}  // namespace

AgreementVerdict check_agreement(const DomainConstraints& c, const Encoding& a,
                                 const Encoding& b, SessionPool& pool) {
  TermPtr ra = whole(a);
  TermPtr rb = whole(b);
  CheckResult fwd = directional_check(c, ra, rb, pool);
  CheckResult bwd = directional_check(c, rb, ra, pool);

  AgreementVerdict v;
  if (fwd.verdict == Verdict::Sat) v.a_not_b = fwd.model;
  if (bwd.verdict == Verdict::Sat) v.b_not_a = bwd.model;
  v.inconclusive = fwd.verdict == Verdict::Unknown || bwd.verdict == Verdict::Unknown;
  // Agreement requires both directions proven empty; anything else is treated
  // as a disagreement so that ambiguity is never hidden by a timeout.
  v.status = (fwd.verdict == Verdict::Unsat && bwd.verdict == Verdict::Unsat)
                 ? AgreementVerdict::Status::Agree
                 : AgreementVerdict::Status::Disagree;
  return v;
}

namespace {

// Clustering from a full pairwise agreement matrix: connected components of
// the Agree relation. Only used when the greedy post-pass finds the relation
// misbehaving (a solver artifact).
EncodingClusters cluster_pairwise(const DomainConstraints& c,
                                  const std::vector<Encoding>& samples,
                                  SessionPool& pool) {
  size_t n = samples.size();
  std::vector<std::vector<AgreementVerdict>> verdicts(n, std::vector<AgreementVerdict>(n));
  EncodingClusters out;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      verdicts[i][j] = check_agreement(c, samples[i], samples[j], pool);
      out.inconclusive = out.inconclusive || verdicts[i][j].inconclusive;
    }

  std::vector<size_t> component(n, SIZE_MAX);
  for (size_t i = 0; i < n; ++i) {
    if (component[i] != SIZE_MAX) continue;
    size_t id = out.classes.size();
    out.classes.push_back({i, {}});
    std::vector<size_t> frontier = {i};
    component[i] = id;
    while (!frontier.empty()) {
      size_t u = frontier.back();
      frontier.pop_back();
      out.classes[id].members.push_back(u);
      for (size_t w = 0; w < n; ++w) {
        if (component[w] != SIZE_MAX) continue;
        const AgreementVerdict& v = u < w ? verdicts[u][w] : verdicts[w][u];
        if (v.status == AgreementVerdict::Status::Agree) {
          component[w] = id;
          frontier.push_back(w);
        }
      }
    }
    std::sort(out.classes[id].members.begin(), out.classes[id].members.end());
  }

  for (size_t a = 0; a < out.classes.size(); ++a)
    for (size_t b = a + 1; b < out.classes.size(); ++b) {
      size_t i = out.classes[a].representative;
      size_t j = out.classes[b].representative;
      const AgreementVerdict& v = i < j ? verdicts[i][j] : verdicts[j][i];
      const std::optional<Witness>& w = v.a_not_b ? v.a_not_b : v.b_not_a;
      if (w) out.witnesses.push_back({a, b, *w});
    }
  return out;
}

}  // namespace

EncodingClusters cluster_samples(const DomainConstraints& c,
                                 const std::vector<Encoding>& samples, SessionPool& pool) {
  EncodingClusters out;
  if (!samples.empty()) out.req_id = samples.front().req_id;

  for (size_t i = 0; i < samples.size(); ++i) {
    bool placed = false;
    std::vector<std::pair<size_t, AgreementVerdict>> disagreements;
    for (size_t k = 0; k < out.classes.size(); ++k) {
      AgreementVerdict v =
          check_agreement(c, samples[i], samples[out.classes[k].representative], pool);
      out.inconclusive = out.inconclusive || v.inconclusive;
      if (v.status == AgreementVerdict::Status::Agree) {
        out.classes[k].members.push_back(i);
        placed = true;
        break;
      }
      disagreements.emplace_back(k, std::move(v));
    }
    if (!placed) {
      // Founding a new class: the disagreements with every existing
      // representative become the inter-class witnesses.
      size_t id = out.classes.size();
      out.classes.push_back({i, {i}});
      for (auto& [k, v] : disagreements) {
        // a = samples[i] (the new representative), b = class k's.
        if (v.a_not_b)
          out.witnesses.push_back({k, id, *v.a_not_b});
        else if (v.b_not_a)
          out.witnesses.push_back({k, id, *v.b_not_a});
      }
    }
  }

  // Post-pass: every member must still agree with its representative.
  for (const auto& cls : out.classes)
    for (size_t member : cls.members) {
      if (member == cls.representative) continue;
      AgreementVerdict v =
          check_agreement(c, samples[member], samples[cls.representative], pool);
      if (v.status != AgreementVerdict::Status::Agree)
        return cluster_pairwise(c, samples, pool);
    }

  std::sort(out.witnesses.begin(), out.witnesses.end(),
            [](const auto& x, const auto& y) {
              return std::tie(x.class_a, x.class_b) < std::tie(y.class_a, y.class_b);
            });
  return out;
}

MutationVerdict detect_mutation(const AssembledModel& m, const Encoding& mutant,
                                SessionPool& pool) {
  MutationVerdict out;
  out.req_id = mutant.req_id;
  auto it = m.encodings.find(mutant.req_id);
  if (it == m.encodings.end())
    throw ModelError(ModelError::Kind::MissingEncoding,
                     "mutation targets unknown requirement '" + mutant.req_id + "'");
  const Encoding& original = it->second;

  // Leg 1: does the swapped-in mutant make the whole model inconsistent?
  Labeled swapped = lower(m);
  for (auto& [label, t] : swapped)
    if (label == "req_" + mutant.req_id) t = whole(mutant);
  bool saw_unknown = false;
  {
    auto lease = pool.acquire();
    CheckResult r = lease->check_under(swapped);
    if (r.verdict == Verdict::Unsat) {
      out.detected = true;
      out.via = MutationVerdict::Via::GlobalInconsistency;
      return out;
    }
    saw_unknown = r.verdict == Verdict::Unknown;
  }

  // Leg 2: is the mutant semantically distinguishable in either direction?
  AgreementVerdict v = check_agreement(m.constraints, mutant, original, pool);
  if (v.a_not_b) {
    out.detected = true;
    out.via = MutationVerdict::Via::Distinguishable;
    out.direction = MutationVerdict::Direction::MutantPermits;
    out.witness = v.a_not_b;
    return out;
  }
  if (v.b_not_a) {
    out.detected = true;
    out.via = MutationVerdict::Via::Distinguishable;
    out.direction = MutationVerdict::Direction::OriginalPermits;
    out.witness = v.b_not_a;
    return out;
  }
  out.inconclusive = saw_unknown || v.inconclusive;
  return out;
}

std::vector<MutationSpec> load_mutations_json(const nlohmann::json& j, const Schema& schema) {
  if (!j.is_array())
    throw ModelError(ModelError::Kind::Invalid, "mutations file must be a JSON array");
  static const std::vector<std::string> kCategories = {
      "false_alarm", "mode_transition", "value_mismatch", "limit_violation"};

  std::vector<MutationSpec> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const nlohmann::json& entry = j[i];
    auto str = [&](const char* key) -> std::string {
      auto it = entry.find(key);
      if (it == entry.end() || !it->is_string())
        throw ModelError(ModelError::Kind::Invalid,
                         std::string("mutation entry ") + std::to_string(i) +
                             ": missing or non-string field '" + key + "'");
      return it->get<std::string>();
    };
    MutationSpec spec;
    spec.req_id = str("req_id");
    spec.category = str("category");
    if (std::find(kCategories.begin(), kCategories.end(), spec.category) == kCategories.end())
      throw ModelError(ModelError::Kind::Invalid,
                       "mutation entry " + std::to_string(i) + ": unknown category '" +
                           spec.category + "'");
    spec.mutated_text = str("mutated_text");

    auto enc_it = entry.find("mutated_encoding");
    if (enc_it == entry.end() || !enc_it->is_object())
      throw ModelError(ModelError::Kind::Invalid,
                       "mutation entry " + std::to_string(i) + ": missing mutated_encoding");
    nlohmann::json one = nlohmann::json::array();
    nlohmann::json enc = *enc_it;
    enc["req_id"] = spec.req_id;
    one.push_back(enc);
    spec.encoding = load_encodings_json(one, schema).front();
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace reqsmith
