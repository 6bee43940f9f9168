#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "reqsmith/audit.hpp"
#include "reqsmith/parser.hpp"
#include "reqsmith/pipeline.hpp"

using namespace reqsmith;

namespace {

SolverConfig solver_config() {
  SolverConfig cfg;
  cfg.command = {SOLVER_BIN};
  return cfg;
}

Schema pump_schema() {
  Schema s;
  s.add({"bolus", Sort::Bool, "bolus delivery active"});
  s.add({"volume", Sort::Real, "cumulative delivered volume in ml"});
  s.add({"occlusion_alarm", Sort::Bool, "occlusion alarm raised"});
  return s;
}

Requirement pump_req() {
  return {"r7",
          "If bolus delivery is active and the cumulative delivered volume "
          "exceeds 400 ml, the occlusion alarm shall be raised.",
          ReqKind::Conditional};
}

constexpr const char* kPumpSmt = R"(
; SECTION 1: DECLARATIONS
(declare-const bolus Bool)
(declare-const volume Real)
(declare-const occlusion_alarm Bool)
; SECTION 3: REQUIREMENTS AS NAMED PREDICATES
(define-fun req_r7 () Bool (=> (and bolus (> volume 400.0)) occlusion_alarm))
; SECTION 4: PER-REQUIREMENT CHECKS
(echo "GUARD-SAT:r7")
(check-sat)
(echo "VIOLATABLE:r7")
(assert (not req_r7))
(check-sat)
; SECTION 5: GLOBAL CONSISTENCY
(echo "GLOBAL-CONSISTENCY")
(check-sat)
)";

Schema temp_schema() {
  Schema s;
  s.add({"water_temp", Sort::Real, "dialysate temperature in celsius"});
  return s;
}

Requirement temp_req() {
  return {"r23", "The dialysate temperature shall stay between 33 and 40 degrees.",
          ReqKind::Invariant};
}

std::string assert_strict =
    "(assert (and (> water_temp 33.0) (< water_temp 40.0)))";
std::string assert_inclusive =
    "(assert (and (>= water_temp 33.0) (<= water_temp 40.0)))";
std::string assert_half_open =
    "(assert (and (>= water_temp 33.0) (< water_temp 40.0)))";

using Entry = ScriptedProvider::PlaybookEntry;

}  // namespace

TEST_CASE("formalize parses a valid response on the first attempt") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  ScriptedProvider provider({{"formalize", std::nullopt, std::nullopt, kPumpSmt}});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto encodings = formalize({pump_req()}, schema, {}, ctx);
  REQUIRE(encodings.size() == 1);
  const Encoding& enc = encodings.at("r7");
  REQUIRE(enc.guard.has_value());
  CHECK(term_eq(*enc.guard, parse_term("(and bolus (> volume 400.0))", schema)));
  CHECK(term_eq(enc.body, parse_term("occlusion_alarm", schema)));
  CHECK(enc.provenance.kind == Provenance::Kind::Generated);
  CHECK(enc.provenance.sample_index == 0);
  CHECK(enc.provenance.provider_tag == "scripted");

  REQUIRE(transcript.records().size() == 1);
  CHECK(transcript.records()[0].outcome == "accepted");
  CHECK(transcript.records()[0].template_id == "formalize");
  CHECK(transcript.records()[0].rendered_prompt.user.find(pump_req().text) !=
        std::string::npos);

  Assignment violating;
  violating.set_bool("bolus", true);
  violating.set_real("volume", Rat{401});
  violating.set_bool("occlusion_alarm", false);
  CHECK_FALSE(evaluate_bool(whole(enc), violating));
}

TEST_CASE("formalize embeds the prior error and succeeds on attempt 3") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  ScriptedProvider provider({
      {"formalize", 0, std::nullopt, "((("},
      {"formalize", 1, std::nullopt, "(define-fun req_r9 () Bool bolus)"},
      {"formalize", 2, std::nullopt, kPumpSmt},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto encodings = formalize({pump_req()}, schema, {}, ctx);
  CHECK(encodings.count("r7") == 1);
  REQUIRE(transcript.records().size() == 3);
  CHECK(transcript.records()[0].outcome.find("rejected") == 0);
  CHECK(transcript.records()[1].outcome.find("rejected") == 0);
  CHECK(transcript.records()[2].outcome == "accepted");

  const std::string& second = transcript.records()[1].rendered_prompt.user;
  CHECK(second.find("REJECTED") != std::string::npos);
  CHECK(second.find("unreadable SMT-LIB") != std::string::npos);
  const std::string& third = transcript.records()[2].rendered_prompt.user;
  CHECK(third.find("req_r9") != std::string::npos);
  CHECK(third.find("unreadable SMT-LIB") == std::string::npos);
  CHECK(transcript.records()[0].rendered_prompt.user.find("REJECTED") ==
        std::string::npos);
}

TEST_CASE("formalize exhausts the retry budget after six rejections") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  ScriptedProvider provider({{"formalize", std::nullopt, std::nullopt, "nonsense ("}});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  CHECK_THROWS_WITH_AS(formalize({pump_req()}, schema, {}, ctx),
                       doctest::Contains("retry budget exhausted"),
                       PipelineError);
  CHECK(transcript.records().size() == 6);
  try {
    formalize({pump_req()}, schema, {}, ctx);
  } catch (const PipelineError& e) {
    CHECK(e.kind == PipelineError::Kind::RetryBudgetExhausted);
  }
}

TEST_CASE("formalize reports a coverage gap with the missing ids") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  std::vector<Requirement> reqs = {
      pump_req(),
      {"r8", "The occlusion alarm shall imply that bolus delivery stops.",
       ReqKind::Invariant}};
  ScriptedProvider provider({{"formalize", std::nullopt, std::nullopt, kPumpSmt}});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  try {
    formalize(reqs, schema, {}, ctx);
    FAIL("expected CoverageGap");
  } catch (const PipelineError& e) {
    CHECK(e.kind == PipelineError::Kind::CoverageGap);
    REQUIRE(e.missing_ids.size() == 1);
    CHECK(e.missing_ids[0] == "r8");
  }
  CHECK(transcript.records().size() == 6);
  CHECK(transcript.records()[1].rendered_prompt.user.find(
            "no encoding produced for: r8") != std::string::npos);
}

TEST_CASE("conditional requirements must come back as implications") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  ScriptedProvider provider({
      {"formalize", 0, std::nullopt,
       "(define-fun req_r7 () Bool occlusion_alarm)"},
      {"formalize", 1, std::nullopt, kPumpSmt},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto encodings = formalize({pump_req()}, schema, {}, ctx);
  CHECK(encodings.at("r7").guard.has_value());
  REQUIRE(transcript.records().size() == 2);
  CHECK(transcript.records()[0].outcome.find("not an implication") !=
        std::string::npos);
  CHECK(transcript.records()[1].rendered_prompt.user.find("not an implication") !=
        std::string::npos);
}

TEST_CASE("zero-arity define-funs act as macros for later definitions") {
  Schema s;
  s.add({"cond", Sort::Real, "dialysate conductivity in mS/cm"});
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider({{"formalize", std::nullopt, std::nullopt, R"(
(define-fun lo () Real 12.5)
(define-fun hi () Real 16.0)
(define-fun in_band () Bool (and (>= cond lo) (<= cond hi)))
(define-fun req_r42 () Bool in_band)
)"}});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  Requirement r42{"r42", "Conductivity shall stay within the prescribed band.",
                  ReqKind::Invariant};
  auto encodings = formalize({r42}, s, {}, ctx);
  CHECK(term_eq(encodings.at("r42").body,
                parse_term("(and (>= cond 12.5) (<= cond 16.0))", s)));
}

TEST_CASE("formalize rejects duplicate and parameterized definitions") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  ScriptedProvider provider({
      {"formalize", 0, std::nullopt,
       "(define-fun req_r7 () Bool (=> bolus occlusion_alarm))\n"
       "(define-fun req_r7 () Bool (=> bolus occlusion_alarm))"},
      {"formalize", 1, std::nullopt,
       "(define-fun f ((x Real)) Bool (> x 0.0))"},
      {"formalize", 2, std::nullopt, kPumpSmt},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};
  auto encodings = formalize({pump_req()}, schema, {}, ctx);
  CHECK(encodings.size() == 1);
  CHECK(transcript.records()[0].outcome.find("duplicate definition") !=
        std::string::npos);
  CHECK(transcript.records()[1].outcome.find("parameters") != std::string::npos);
}

TEST_CASE("screening three boundary variants yields three classes") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider({
      {"ambiguity_sample", 0, std::nullopt, assert_strict},
      {"ambiguity_sample", 1, std::nullopt, assert_inclusive},
      {"ambiguity_sample", 2, std::nullopt, assert_half_open},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 3);
  CHECK(screen.flagged);
  CHECK(screen.clusters.classes.size() == 3);
  CHECK(screen.clusters.req_id == "r23");
  CHECK(screen.dropped.empty());
  REQUIRE(screen.samples.size() == 3);
  CHECK(screen.samples[1].provenance.sample_index == 1);
  // Every witness separates the two classes it names.
  REQUIRE(!screen.clusters.witnesses.empty());
  for (const auto& d : screen.clusters.witnesses) {
    size_t rep_a = screen.clusters.classes[d.class_a].representative;
    size_t rep_b = screen.clusters.classes[d.class_b].representative;
    bool va = evaluate_bool(whole(screen.samples[rep_a]), d.witness);
    bool vb = evaluate_bool(whole(screen.samples[rep_b]), d.witness);
    CHECK(va != vb);
  }
}

TEST_CASE("five syntactic variants of one meaning form a single class") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider({
      {"ambiguity_sample", 0, std::nullopt, "(assert (>= water_temp 33.0))"},
      {"ambiguity_sample", 1, std::nullopt, "(assert (not (< water_temp 33.0)))"},
      {"ambiguity_sample", 2, std::nullopt, "(assert (<= 33.0 water_temp))"},
      {"ambiguity_sample", 3, std::nullopt,
       "(assert (>= (+ water_temp 0.0) 33.0))"},
      {"ambiguity_sample", 4, std::nullopt,
       "(assert (>= water_temp 33.0))\n(assert (>= water_temp 20.0))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  Requirement req{"r30", "Temperature shall not fall below 33.", ReqKind::Invariant};
  AmbiguityScreen screen = screen_ambiguity(req, s, {}, ctx, 5);
  CHECK_FALSE(screen.flagged);
  REQUIRE(screen.clusters.classes.size() == 1);
  CHECK(screen.clusters.classes[0].members.size() == 5);
  CHECK(screen.clusters.witnesses.empty());
}

TEST_CASE("screening requires at least two samples") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider({});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};
  try {
    screen_ambiguity(temp_req(), s, {}, ctx, 1);
    FAIL("expected Precondition");
  } catch (const PipelineError& e) {
    CHECK(e.kind == PipelineError::Kind::Precondition);
  }
}

TEST_CASE("a sample that exhausts its retries is dropped and noted") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  std::vector<Entry> playbook;
  // Sample 0 burns attempts 0..5 on rejected output, samples 1 and 2 succeed.
  for (std::uint32_t a = 0; a < 6; ++a)
    playbook.push_back({"ambiguity_sample", a, std::nullopt, "(check-sat)"});
  playbook.push_back({"ambiguity_sample", 6, std::nullopt, assert_strict});
  playbook.push_back({"ambiguity_sample", 7, std::nullopt, assert_strict});
  ScriptedProvider provider(std::move(playbook));
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 3);
  REQUIRE(screen.dropped.size() == 1);
  CHECK(screen.dropped[0] == 0);
  CHECK(screen.samples.size() == 2);
  CHECK(screen.samples[0].provenance.sample_index == 1);
  CHECK_FALSE(screen.flagged);
  CHECK(transcript.records().size() == 8);
}

TEST_CASE("fewer than two surviving samples is a shortfall") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  std::vector<Entry> playbook;
  for (std::uint32_t a = 0; a < 6; ++a)
    playbook.push_back({"ambiguity_sample", a, std::nullopt, "garbage ("});
  playbook.push_back(
      {"ambiguity_sample", std::nullopt, std::nullopt, assert_strict});
  ScriptedProvider provider(std::move(playbook));
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};
  try {
    screen_ambiguity(temp_req(), s, {}, ctx, 2);
    FAIL("expected SampleShortfall");
  } catch (const PipelineError& e) {
    CHECK(e.kind == PipelineError::Kind::SampleShortfall);
  }
}

TEST_CASE("sample retries append the rejection to a fresh prompt") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider({
      {"ambiguity_sample", 0, std::nullopt, "(frobnicate)"},
      {"ambiguity_sample", std::nullopt, std::nullopt, assert_strict},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};
  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 2);
  CHECK(screen.samples.size() == 2);
  REQUIRE(transcript.records().size() == 3);
  CHECK(transcript.records()[1].rendered_prompt.user.find("REJECTED") !=
        std::string::npos);
  CHECK(transcript.records()[1].rendered_prompt.user.find(
            "expected only (assert") != std::string::npos);
  // The third call belongs to sample 1 and starts clean again.
  CHECK(transcript.records()[2].rendered_prompt.user.find("REJECTED") ==
        std::string::npos);
}

TEST_CASE("clarification converges in one round on the range requirement") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  std::string clarified_text =
      "The dialysate temperature shall be greater than or equal to 33 and "
      "less than or equal to 40 degrees.";
  ScriptedProvider provider({
      {"ambiguity_sample", std::nullopt, std::string("greater than or equal"),
       assert_inclusive},
      {"ambiguity_sample", 0, std::nullopt, assert_strict},
      {"ambiguity_sample", 1, std::nullopt, assert_inclusive},
      {"clarify", std::nullopt, std::nullopt, clarified_text + "\n"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 2);
  REQUIRE(screen.flagged);
  REQUIRE(screen.clusters.classes.size() == 2);

  ClarifyResult result = clarify(temp_req(), screen, s, {}, ctx, 2);
  CHECK(result.converged);
  CHECK(result.clarified.id == "r23");
  CHECK(result.clarified.kind == ReqKind::Invariant);
  CHECK(result.clarified.text == clarified_text);
  REQUIRE(result.rounds.size() == 1);
  CHECK(result.rounds[0].index == 0);
  CHECK(result.rounds[0].classes_in == 2);
  CHECK(result.rounds[0].classes_out == 1);
  CHECK(result.rounds[0].text_in == temp_req().text);
  CHECK(result.rounds[0].text_out == clarified_text);
  CHECK_FALSE(result.rounds[0].witnesses_shown.empty());
  CHECK(result.final_screen.clusters.classes.size() == 1);

  // The rewrite prompt carried both class formulas and a witness.
  bool saw_clarify = false;
  for (const auto& rec : transcript.records()) {
    if (rec.template_id != "clarify") continue;
    saw_clarify = true;
    CHECK(rec.temperature == doctest::Approx(0.2));
    CHECK(rec.rendered_prompt.user.find("class 0") != std::string::npos);
    CHECK(rec.rendered_prompt.user.find("class 1") != std::string::npos);
    CHECK(rec.rendered_prompt.user.find("classes 0 vs 1") != std::string::npos);
  }
  CHECK(saw_clarify);
}

TEST_CASE("an already-converged screen needs no clarification rounds") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  ScriptedProvider provider(
      {{"ambiguity_sample", std::nullopt, std::nullopt, assert_inclusive}});
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};
  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 3);
  REQUIRE_FALSE(screen.flagged);

  ClarifyResult result = clarify(temp_req(), screen, s, {}, ctx, 3);
  CHECK(result.converged);
  CHECK(result.rounds.empty());
  CHECK(result.clarified.text == temp_req().text);
  // No provider traffic beyond the initial screen.
  CHECK(transcript.records().size() == 3);
}

TEST_CASE("a provider that never disambiguates hits NonConvergence") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  std::vector<Entry> playbook;
  // Screens use two samples; alternate encodings so every screen splits 2 ways.
  for (std::uint32_t a = 0; a < 12; ++a)
    playbook.push_back({"ambiguity_sample", a, std::nullopt,
                        a % 2 == 0 ? assert_strict : assert_inclusive});
  playbook.push_back({"clarify", std::nullopt, std::nullopt,
                      "Temperature shall stay between the limits."});
  ScriptedProvider provider(std::move(playbook));
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 2);
  ClarifyResult result = clarify(temp_req(), screen, s, {}, ctx, 2, 5);
  CHECK_FALSE(result.converged);
  REQUIRE(result.rounds.size() == 5);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(result.rounds[i].index == i);
    CHECK(result.rounds[i].classes_in == 2);
    CHECK(result.rounds[i].classes_out == 2);
    CHECK_FALSE(result.rounds[i].text_out.empty());
  }
  CHECK(result.final_screen.clusters.classes.size() == 2);
}

TEST_CASE("stitching the clarified encoding back keeps the model consistent") {
  Schema s;
  s.add({"water_temp", Sort::Real, "dialysate temperature in celsius"});
  s.add({"heater_on", Sort::Bool, "heater element energized"});
  SessionPool pool(solver_config(), s, 2);
  DomainConstraints c;
  c.add("dom_temp_range", parse_term("(and (>= water_temp 0.0) (<= water_temp 100.0))", s));

  std::string clarified_text =
      "The dialysate temperature shall be greater than or equal to 33 and "
      "less than or equal to 40 degrees.";
  ScriptedProvider provider({
      {"ambiguity_sample", std::nullopt, std::string("greater than or equal"),
       assert_inclusive},
      {"ambiguity_sample", 0, std::nullopt, assert_strict},
      {"ambiguity_sample", 1, std::nullopt, assert_inclusive},
      {"clarify", std::nullopt, std::nullopt, clarified_text},
      {"formalize", std::nullopt, std::nullopt,
       "(define-fun req_r23 () Bool (and (>= water_temp 33.0) (<= water_temp 40.0)))\n"
       "(define-fun req_r31 () Bool (=> (< water_temp 33.0) heater_on))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 2);
  ClarifyResult result = clarify(temp_req(), screen, s, {}, ctx, 2);
  REQUIRE(result.converged);

  std::vector<Requirement> reqs = {
      result.clarified,
      {"r31", "If the temperature falls below 33 degrees, the heater shall be on.",
       ReqKind::Conditional}};
  auto encodings = formalize(reqs, s, c, ctx);
  std::vector<Encoding> encs;
  for (const auto& [_, e] : encodings) encs.push_back(e);
  AssembledModel m = assemble(s, c, reqs, std::move(encs));
  ConsistencyOutcome consistency = audit_consistency(m, pool);
  CHECK(consistency.status == ConsistencyOutcome::Status::Yes);
}

TEST_CASE("round trip with identity reconstruction agrees at similarity 1") {
  Schema schema = pump_schema();
  SessionPool pool(solver_config(), schema, 2);
  Requirement req = pump_req();
  std::vector<Encoding> encs =
      {{"r7", parse_term("(and bolus (> volume 400.0))", schema),
        parse_term("occlusion_alarm", schema), Provenance::manual()}};
  AssembledModel m = assemble(schema, {}, {req}, std::move(encs));

  nlohmann::json reconstruction = {
      {"id", "r7"}, {"text", req.text}, {"kind", "conditional"}};
  ScriptedProvider provider({
      {"informalize", std::nullopt, std::nullopt, reconstruction.dump()},
      {"formalize", std::nullopt, std::nullopt, kPumpSmt},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto outcomes = round_trip(m, ctx);
  REQUIRE(outcomes.size() == 1);
  const RoundTripOutcome& out = outcomes[0];
  CHECK(out.req_id == "r7");
  CHECK(out.reconstructed_text == req.text);
  CHECK(out.text_similarity == doctest::Approx(1.0));
  CHECK(out.repair_rounds == 0);
  CHECK_FALSE(out.failure.has_value());
  REQUIRE(out.equivalent.has_value());
  CHECK(out.equivalent->status == AgreementVerdict::Status::Agree);
  CHECK_FALSE(out.equivalent->inconclusive);
}

TEST_CASE("a paraphrase that re-formalizes equivalently still agrees") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  Requirement req{"r30", "Temperature shall not fall below 33 degrees.",
                  ReqKind::Invariant};
  std::vector<Encoding> encs = {
      {"r30", std::nullopt, parse_term("(>= water_temp 33.0)", s),
       Provenance::manual()}};
  AssembledModel m = assemble(s, {}, {req}, std::move(encs));

  ScriptedProvider provider({
      {"informalize", std::nullopt, std::nullopt,
       R"({"id": "r30", "text": "It is never the case that the temperature is under 33 degrees.", "kind": "invariant"})"},
      {"formalize", std::nullopt, std::nullopt,
       "(define-fun req_r30 () Bool (not (< water_temp 33.0)))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto outcomes = round_trip(m, ctx);
  REQUIRE(outcomes.size() == 1);
  REQUIRE(outcomes[0].equivalent.has_value());
  CHECK(outcomes[0].equivalent->status == AgreementVerdict::Status::Agree);
  CHECK(outcomes[0].text_similarity < 1.0);
  CHECK(outcomes[0].text_similarity > 0.0);
  // Syntactically different from the original, so only the solver can tell.
  REQUIRE(outcomes[0].reconstructed.has_value());
  CHECK_FALSE(term_eq(whole(*outcomes[0].reconstructed),
                      whole(m.encodings.at("r30"))));
}

TEST_CASE("dropped conjunct is repaired in one round with the witness shown") {
  Schema s;
  s.add({"water_temp", Sort::Real, "dialysate temperature in celsius"});
  SessionPool pool(solver_config(), s, 2);
  Requirement req{"r23", "Temperature shall stay between 33 and 40 degrees.",
                  ReqKind::Invariant};
  std::vector<Encoding> encs = {
      {"r23", std::nullopt,
       parse_term("(and (>= water_temp 33.0) (<= water_temp 40.0))", s),
       Provenance::manual()}};
  AssembledModel m = assemble(s, {}, {req}, std::move(encs));

  ScriptedProvider provider({
      {"informalize", std::nullopt, std::nullopt,
       R"({"id": "r23", "text": "Temperature shall be at least 33 and at most 40 degrees.", "kind": "invariant"})"},
      {"formalize", std::nullopt, std::string("semantically equivalent"),
       "(define-fun req_r23 () Bool (and (>= water_temp 33.0) (<= water_temp 40.0)))"},
      {"formalize", std::nullopt, std::nullopt,
       "(define-fun req_r23 () Bool (>= water_temp 33.0))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto outcomes = round_trip(m, ctx);
  REQUIRE(outcomes.size() == 1);
  const RoundTripOutcome& out = outcomes[0];
  CHECK(out.repair_rounds == 1);
  REQUIRE(out.equivalent.has_value());
  CHECK(out.equivalent->status == AgreementVerdict::Status::Agree);

  // The repair prompt embedded a state the drifted encoding wrongly permits.
  bool saw_repair = false;
  for (const auto& rec : transcript.records()) {
    if (rec.template_id != "formalize") continue;
    if (rec.rendered_prompt.user.find("semantically equivalent") ==
        std::string::npos)
      continue;
    saw_repair = true;
    CHECK(rec.rendered_prompt.user.find(
              "reconstruction permits, original forbids") != std::string::npos);
    CHECK(rec.rendered_prompt.user.find("water_temp") != std::string::npos);
  }
  CHECK(saw_repair);

}

TEST_CASE("a permanently drifting reconstruction stops after five repairs") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  Requirement req{"r23", "Temperature shall stay between 33 and 40 degrees.",
                  ReqKind::Invariant};
  std::vector<Encoding> encs = {
      {"r23", std::nullopt,
       parse_term("(and (>= water_temp 33.0) (<= water_temp 40.0))", s),
       Provenance::manual()}};
  AssembledModel m = assemble(s, {}, {req}, std::move(encs));

  ScriptedProvider provider({
      {"informalize", std::nullopt, std::nullopt, "Temperature stays at least 33."},
      {"formalize", std::nullopt, std::nullopt,
       "(define-fun req_r23 () Bool (>= water_temp 33.0))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto outcomes = round_trip(m, ctx);
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].repair_rounds == 5);
  REQUIRE(outcomes[0].equivalent.has_value());
  CHECK(outcomes[0].equivalent->status == AgreementVerdict::Status::Disagree);
  CHECK_FALSE(outcomes[0].failure.has_value());
  // Raw-text fallback: the informalize response was not JSON.
  CHECK(outcomes[0].reconstructed_text == "Temperature stays at least 33.");
}

TEST_CASE("a re-formalization failure is recorded and the batch continues") {
  Schema s = temp_schema();
  SessionPool pool(solver_config(), s, 2);
  std::vector<Requirement> reqs = {
      {"r1", "Temperature shall be at least 33.", ReqKind::Invariant},
      {"r2", "Temperature shall be at most 40.", ReqKind::Invariant}};
  std::vector<Encoding> encs = {
      {"r1", std::nullopt, parse_term("(>= water_temp 33.0)", s),
       Provenance::manual()},
      {"r2", std::nullopt, parse_term("(<= water_temp 40.0)", s),
       Provenance::manual()}};
  AssembledModel m = assemble(s, {}, reqs, std::move(encs));

  ScriptedProvider provider({
      {"informalize", std::nullopt, std::string("(>= water_temp 33.0)"),
       R"({"id": "r1", "text": "Temperature shall be at least 33.", "kind": "invariant"})"},
      {"informalize", std::nullopt, std::nullopt,
       R"({"id": "r2", "text": "Temperature shall be at most 40.", "kind": "invariant"})"},
      {"formalize", std::nullopt, std::string("at least 33"), "((("},
      {"formalize", std::nullopt, std::nullopt,
       "(define-fun req_r2 () Bool (<= water_temp 40.0))"},
  });
  ProviderTranscript transcript;
  PipelineContext ctx{provider, pool, transcript};

  auto outcomes = round_trip(m, ctx);
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].req_id == "r1");
  REQUIRE(outcomes[0].failure.has_value());
  CHECK(outcomes[0].failure->find("retry budget") != std::string::npos);
  CHECK_FALSE(outcomes[0].equivalent.has_value());
  CHECK(outcomes[1].req_id == "r2");
  REQUIRE(outcomes[1].equivalent.has_value());
  CHECK(outcomes[1].equivalent->status == AgreementVerdict::Status::Agree);
}

TEST_CASE("jaccard similarity over lowercased word sets") {
  CHECK(jaccard_token_similarity("", "") == doctest::Approx(1.0));
  CHECK(jaccard_token_similarity("alarm", "") == doctest::Approx(0.0));
  CHECK(jaccard_token_similarity("The Alarm sounds!", "the alarm sounds") ==
        doctest::Approx(1.0));
  CHECK(jaccard_token_similarity("a b c d", "a b c e") ==
        doctest::Approx(3.0 / 5.0));
  CHECK(jaccard_token_similarity("alpha beta", "gamma delta") ==
        doctest::Approx(0.0));
}

TEST_CASE("identical playbooks replay to identical transcripts and outcomes") {
  Schema s = temp_schema();
  auto run = [&](std::string& transcript_json, std::string& summary) {
    SessionPool pool(solver_config(), s, 2);
    std::string clarified_text =
        "Temperature shall be greater than or equal to 33 and less than or "
        "equal to 40 degrees.";
    ScriptedProvider provider({
        {"ambiguity_sample", std::nullopt, std::string("greater than or equal"),
         assert_inclusive},
        {"ambiguity_sample", 0, std::nullopt, assert_strict},
        {"ambiguity_sample", 1, std::nullopt, assert_half_open},
        {"ambiguity_sample", 2, std::nullopt, assert_inclusive},
        {"clarify", std::nullopt, std::nullopt, clarified_text},
    });
    ProviderTranscript transcript;
    PipelineContext ctx{provider, pool, transcript};
    AmbiguityScreen screen = screen_ambiguity(temp_req(), s, {}, ctx, 3);
    ClarifyResult result = clarify(temp_req(), screen, s, {}, ctx, 3);
    transcript_json = transcript.to_json();
    summary = result.clarified.text + "|" +
              std::to_string(result.rounds.size()) + "|" +
              (result.converged ? "yes" : "no");
  };
  std::string t1, s1, t2, s2;
  run(t1, s1);
  run(t2, s2);
  CHECK(t1 == t2);
  CHECK(s1 == s2);
  CHECK(s1.find("|1|yes") != std::string::npos);
}
