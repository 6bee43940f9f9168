// The three generation loops: autoformalization with bounded syntactic
// repair, ambiguity screening with clarification, and round-trip
// informalize / re-formalize checking. All provider interactions are
// stateless: every call reconstructs its full prompt, with at most the
// latest rejection appended.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reqsmith/equivalence.hpp"
#include "reqsmith/model.hpp"
#include "reqsmith/provider.hpp"
#include "reqsmith/session.hpp"

namespace reqsmith {

class PipelineError : public std::runtime_error {
 public:
  enum class Kind {
    Precondition,          // caller violated an op precondition
    RetryBudgetExhausted,  // every attempt rejected; message holds the last error
    CoverageGap,           // budget exhausted with requirements still unencoded
    SampleShortfall,       // fewer than two screening samples survived
    MalformedResponse,     // provider output unusable outside a retry loop
  };
  Kind kind;
  std::vector<std::string> missing_ids;  // CoverageGap only

  PipelineError(Kind k, const std::string& msg,
                std::vector<std::string> missing = {})
      : std::runtime_error(msg), kind(k), missing_ids(std::move(missing)) {}
};

// Shared plumbing for every pipeline op. max_retries bounds the re-prompts
// after the first attempt, so a loop issues at most max_retries + 1 calls.
// Screening samples at temp_screen, clarification rewrites at temp_clarify,
// everything else at temp_base.
struct PipelineContext {
  Provider& provider;
  SessionPool& pool;
  ProviderTranscript& transcript;
  const TemplateRegistry& registry = TemplateRegistry::builtin();
  std::uint32_t max_retries = 5;
  double temp_screen = 1.0;
  double temp_clarify = 0.2;
  double temp_base = 0.0;
};

// Prompt-block renderers, shared with the reporter.
std::string render_schema_block(const Schema& schema);
std::string render_schema_variable_list(const Schema& schema);
std::string render_witness(const Witness& w);
std::string requirements_to_json(const std::vector<Requirement>& reqs);

// Formalizes the batch at temperature 0. On any rejection (unreadable
// s-exprs, unknown symbols, a conditional whose encoding is not an
// implication, coverage gaps, assembly failures) the full prompt is re-sent
// with the latest error text appended, up to max_retries re-prompts.
// Successful output is exactly the encodings of an assembled model.
std::map<std::string, Encoding> formalize(const std::vector<Requirement>& reqs,
                                          const Schema& schema,
                                          const DomainConstraints& constraints,
                                          PipelineContext& ctx);

struct AmbiguityScreen {
  EncodingClusters clusters;      // indices refer to `samples`
  std::vector<Encoding> samples;  // survivors; provenance keeps the original index
  std::vector<size_t> dropped;    // sample indices whose retry budget exhausted
  bool flagged = false;           // |classes| > 1 or any pair inconclusive
};

// Draws n independent formalizations of one requirement at temperature 1.0
// (each sample retry-bounded on parse failures), then clusters them up to
// solver-checked equivalence under the domain constraints.
AmbiguityScreen screen_ambiguity(const Requirement& req, const Schema& schema,
                                 const DomainConstraints& constraints,
                                 PipelineContext& ctx, size_t n_samples);

struct ClarificationRound {
  size_t index;        // < max_rounds
  std::string text_in;
  size_t classes_in;   // class count that prompted this rewrite
  std::vector<std::string> witnesses_shown;
  std::string text_out;  // non-empty
  size_t classes_out;    // class count after re-screening text_out
};

struct ClarifyResult {
  Requirement clarified;  // id and kind preserved, text possibly rewritten
  std::vector<ClarificationRound> rounds;
  AmbiguityScreen final_screen;
  bool converged = false;  // false is NonConvergence: reported, not fatal
};

// Iteratively rewrites a flagged requirement (rewrite calls at temperature
// 0.2, re-screens at 1.0 with the same sample count) until its samples fall
// into a single class or max_rounds rewrites have been spent.
ClarifyResult clarify(const Requirement& req, const AmbiguityScreen& screen,
                      const Schema& schema, const DomainConstraints& constraints,
                      PipelineContext& ctx, size_t n_samples,
                      size_t max_rounds = 5);

using SimilarityFn =
    std::function<double(const std::string&, const std::string&)>;

// Jaccard overlap of lowercased word sets; 1.0 when both texts are empty.
double jaccard_token_similarity(const std::string& a, const std::string& b);

struct RoundTripOutcome {
  std::string req_id;
  std::string reconstructed_text;
  std::optional<Encoding> reconstructed;      // absent when re-formalization failed
  std::optional<AgreementVerdict> equivalent;  // vs the original encoding
  double text_similarity = 0.0;
  size_t repair_rounds = 0;
  std::optional<std::string> failure;
};

// Informalizes each encoding, re-formalizes the reconstructed text under the
// same schema, and solver-checks agreement with the original; on disagreement
// re-prompts with the separating witnesses, up to max_retries repairs.
// Per-requirement failures are recorded and the batch continues.
std::vector<RoundTripOutcome> round_trip(
    const AssembledModel& m, PipelineContext& ctx,
    SimilarityFn similarity = jaccard_token_similarity);

}  // namespace reqsmith
