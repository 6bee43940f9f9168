// Scenario entailment checking M ∧ s ∧ ¬a, violated-requirement
// localization, and the counterexample-guided repair loop over a provider.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "reqsmith/audit.hpp"
#include "reqsmith/model.hpp"
#include "reqsmith/pipeline.hpp"
#include "reqsmith/session.hpp"

namespace reqsmith {

struct Scenario {
  std::string question_id;
  std::string description;
  Assignment state;  // partial: only the variables the scenario mentions
};

struct CandidateAnswer {
  std::string question_id;
  Assignment actions;
};

struct AnswerVerdict {
  enum class Label { Safe, Violation, Unknown };
  Label label = Label::Unknown;
  // SAT model of M ∧ s ∧ ¬a: a state that respects every requirement and the
  // scenario while contradicting at least one answer literal.
  std::optional<Witness> counterexample;
  // The counterexample with the answer's own values forced back in: the state
  // the machine reaches if it follows the answer. Localization runs on this.
  std::optional<Witness> answer_world;
  std::vector<std::string> violated_reqs;  // falsified in answer_world, sorted
  // An empty answer is the trivial conjunction: ¬⊤ is unsatisfiable, so the
  // verdict is SAFE for a vacuous reason and the report must say so.
  bool degenerate_answer = false;
};

const char* verdict_label_name(AnswerVerdict::Label l);

enum class FeedbackMode { Baseline, SelfRepair, RequirementsOnly, FullCEGR };
const char* feedback_mode_name(FeedbackMode m);

struct Question {
  enum class Type { Single, Multi, None };
  std::string question_id;
  Type type = Type::Single;
  Scenario scenario;
  std::vector<std::string> relevant_vars;
  std::vector<std::string> relevant_req_ids;
  std::map<std::string, std::string> response_schema;  // action name -> "Bool"
  std::string question_text;  // defaults to the scenario description
};

std::vector<Question> load_questions_json(const nlohmann::json& j,
                                          const Schema& schema);

// Asserts lower(m), one scn_<var> equality per scenario variable, and the
// negated conjunction of answer literals, then reads the verdict off a single
// check. Scenario variables the question does not mention stay free.
AnswerVerdict verify_answer(const AssembledModel& m, const Scenario& s,
                            const CandidateAnswer& a, SessionPool& pool);

// Ids of every requirement whose encoding evaluates to false under w,
// sorted. w must be total over the schema.
std::vector<std::string> localize_violations(const AssembledModel& m,
                                             const Witness& w);

class TranslationError : public std::runtime_error {
 public:
  explicit TranslationError(std::string raw);
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

// JSON-first: the first {...} span is parsed and relevant boolean fields are
// taken. Falls back to scanning for "name: true/false" over relevant_vars.
// Throws TranslationError when neither route yields an answer.
CandidateAnswer translate_answer(const std::string& text,
                                 const std::vector<std::string>& relevant_vars,
                                 const Schema& schema,
                                 const std::string& question_id);

struct CegrAttempt {
  size_t index;
  std::string raw_response;
  std::optional<CandidateAnswer> answer;  // absent when translation failed
  std::optional<AnswerVerdict> verdict;   // absent when translation failed
  std::string feedback;  // appended to the next prompt; "" when terminal
};

struct CegrResult {
  std::string question_id;
  FeedbackMode mode = FeedbackMode::Baseline;
  AnswerVerdict final_verdict;
  std::vector<CegrAttempt> attempts;  // length = iterations_used + 1
  size_t iterations_used = 0;         // ≤ max_iters
};

// One initial attempt plus up to max_iters regenerations. Only a VIOLATION
// triggers mode-specific feedback; SAFE and UNKNOWN are terminal. A response
// that cannot be translated burns an attempt and earns the parse-feedback
// block in every mode.
CegrResult cegr_run(const AssembledModel& m, const Question& q,
                    FeedbackMode mode, PipelineContext& ctx,
                    size_t max_iters = 5);

}  // namespace reqsmith
