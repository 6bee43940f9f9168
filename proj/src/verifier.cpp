#include "reqsmith/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <set>

namespace reqsmith {

namespace {

using Labeled = std::vector<std::pair<std::string, TermPtr>>;

TermPtr value_equality(const std::string& name, const Value& v) {
  TermPtr var = mk_var(name, v.sort);
  if (v.sort == Sort::Bool) return v.b ? var : mk_not(var);
  return mk_cmp(CmpOp::Eq, var, mk_real(v.r));
}

bool is_symbol_char(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  return std::string("~!@$%^&*_-+=<>.?/").find(c) != std::string::npos;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool matches_word(const std::string& text, size_t pos, const char* word) {
  size_t n = std::strlen(word);
  if (pos + n > text.size()) return false;
  for (size_t i = 0; i < n; ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i])
      return false;
  return pos + n == text.size() || !is_word_char(text[pos + n]);
}

std::string join_ids(const std::vector<std::string>& ids) {
  if (ids.empty()) return "(none)";
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

std::string witness_block(const Witness& w) {
  std::string out;
  for (const auto& [name, value] : w.values) {
    if (!out.empty()) out += "\n";
    out += "(" + name + " " + value_to_display(value) + ")";
  }
  return out.empty() ? "(empty)" : out;
}

void transcript_record(PipelineContext& ctx, const ProviderRequest& request,
                       const std::string& response_text,
                       const std::string& outcome) {
  ctx.transcript.append({request.template_id,
                         ctx.registry.hash_hex(request.template_id),
                         request.rendered, request.temperature, response_text,
                         outcome});
}

std::string build_feedback(FeedbackMode mode, const AnswerVerdict& verdict,
                           const CandidateAnswer& answer,
                           const TemplateRegistry& registry) {
  switch (mode) {
    case FeedbackMode::Baseline:
      return "";
    case FeedbackMode::SelfRepair:
      return registry.render("cegr_repair_self", {}).user;
    case FeedbackMode::RequirementsOnly:
      return registry
          .render("cegr_repair_reqs",
                  {{"req_ids", join_ids(verdict.violated_reqs)}})
          .user;
    case FeedbackMode::FullCEGR: {
      std::string conflicts;
      if (verdict.counterexample) {
        for (const auto& [name, value] : answer.actions.values) {
          auto it = verdict.counterexample->values.find(name);
          if (it == verdict.counterexample->values.end() || it->second == value)
            continue;
          if (!conflicts.empty()) conflicts += "\n";
          conflicts += name + ": you answered " + value_to_display(value) +
                       ", the counterexample has " +
                       value_to_display(it->second);
        }
      }
      if (conflicts.empty()) conflicts = "(none)";
      return registry
          .render("cegr_repair_full",
                  {{"req_ids", join_ids(verdict.violated_reqs)},
                   {"counterexample_assignments",
                    verdict.counterexample ? witness_block(*verdict.counterexample)
                                           : "(none)"},
                   {"conflict_lines", conflicts}})
          .user;
    }
  }
  return "";
}

}  // namespace

const char* verdict_label_name(AnswerVerdict::Label l) {
  switch (l) {
    case AnswerVerdict::Label::Safe: return "SAFE";
    case AnswerVerdict::Label::Violation: return "VIOLATION";
    case AnswerVerdict::Label::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

const char* feedback_mode_name(FeedbackMode m) {
  switch (m) {
    case FeedbackMode::Baseline: return "baseline";
    case FeedbackMode::SelfRepair: return "self_repair";
    case FeedbackMode::RequirementsOnly: return "requirements_only";
    case FeedbackMode::FullCEGR: return "full_cegr";
  }
  return "baseline";
}

std::vector<std::string> localize_violations(const AssembledModel& m,
                                             const Witness& w) {
  std::vector<std::string> out;
  for (const auto& [id, enc] : m.encodings)
    if (!evaluate_bool(whole(enc), w)) out.push_back(id);
  return out;
}

AnswerVerdict verify_answer(const AssembledModel& m, const Scenario& s,
                            const CandidateAnswer& a, SessionPool& pool) {
  s.state.validate_against(m.schema);
  a.actions.validate_against(m.schema);

  AnswerVerdict out;
  Labeled q = lower(m);
  for (const auto& [name, value] : s.state.values)
    q.emplace_back("scn_" + name, value_equality(name, value));

  std::vector<TermPtr> literals;
  for (const auto& [name, value] : a.actions.values)
    literals.push_back(value_equality(name, value));
  TermPtr negated;
  if (literals.empty()) {
    out.degenerate_answer = true;
    negated = mk_false();
  } else {
    negated = mk_not(literals.size() == 1 ? literals[0] : mk_and(literals));
  }
  q.emplace_back("neg_answer", negated);

  auto lease = pool.acquire();
  CheckResult r = lease->check_under(q);
  switch (r.verdict) {
    case Verdict::Unsat:
      out.label = AnswerVerdict::Label::Safe;
      break;
    case Verdict::Sat: {
      out.label = AnswerVerdict::Label::Violation;
      out.counterexample = r.model;
      if (r.model) {
        Witness world = *r.model;
        for (const auto& [name, value] : a.actions.values)
          world.values[name] = value;
        out.answer_world = world;
        out.violated_reqs = localize_violations(m, world);
      }
      break;
    }
    default:
      out.label = AnswerVerdict::Label::Unknown;
      break;
  }
  return out;
}

TranslationError::TranslationError(std::string raw)
    : std::runtime_error("could not translate provider output into an answer"),
      raw_(std::move(raw)) {}

CandidateAnswer translate_answer(const std::string& text,
                                 const std::vector<std::string>& relevant_vars,
                                 const Schema& schema,
                                 const std::string& question_id) {
  CandidateAnswer out;
  out.question_id = question_id;

  size_t open = text.find('{');
  size_t close = text.rfind('}');
  if (open != std::string::npos && close != std::string::npos && open < close) {
    auto doc = nlohmann::json::parse(text.substr(open, close - open + 1),
                                     nullptr, false);
    if (doc.is_object()) {
      size_t hits = 0;
      for (const auto& name : relevant_vars) {
        if (!doc.contains(name)) continue;
        const auto& v = doc[name];
        if (v.is_boolean()) {
          out.actions.set_bool(name, v.get<bool>());
          ++hits;
        } else if (v.is_string() && (v == "true" || v == "false")) {
          out.actions.set_bool(name, v == "true");
          ++hits;
        }
      }
      if (hits > 0 || doc.empty()) {
        out.actions.validate_against(schema);
        return out;
      }
    }
  }

  // Rule-based fallback: "name: true" / "name = false" with word boundaries.
  size_t found = 0;
  for (const auto& name : relevant_vars) {
    size_t pos = 0;
    while ((pos = text.find(name, pos)) != std::string::npos) {
      bool left_ok = pos == 0 || !is_symbol_char(text[pos - 1]);
      size_t end = pos + name.size();
      bool right_ok = end >= text.size() || !is_symbol_char(text[end]);
      if (!left_ok || !right_ok) {
        pos = end;
        continue;
      }
      size_t c = end;
      auto skip = [&](const char* chars) {
        while (c < text.size() && std::strchr(chars, text[c])) ++c;
      };
      skip(" \t\"'");
      skip(":=");
      skip(" \t\"'");
      if (matches_word(text, c, "true")) {
        out.actions.set_bool(name, true);
        ++found;
        break;
      }
      if (matches_word(text, c, "false")) {
        out.actions.set_bool(name, false);
        ++found;
        break;
      }
      pos = end;
    }
  }
  if (found == 0) throw TranslationError(text);
  out.actions.validate_against(schema);
  return out;
}

CegrResult cegr_run(const AssembledModel& m, const Question& q,
                    FeedbackMode mode, PipelineContext& ctx,
                    size_t max_iters) {
  CegrResult result;
  result.question_id = q.question_id;
  result.mode = mode;

  std::string var_defs;
  for (const auto& name : q.relevant_vars) {
    const VarDecl* decl = m.schema.find(name);
    if (!decl)
      throw ModelError(ModelError::Kind::UnknownSymbol,
                       "question '" + q.question_id +
                           "' references unknown variable '" + name + "'");
    var_defs += decl->name + " : " + sort_name(decl->sort);
    if (!decl->description.empty()) var_defs += " (" + decl->description + ")";
    var_defs += "\n";
  }

  std::string req_block;
  for (const auto& id : q.relevant_req_ids) {
    auto it = m.requirements.find(id);
    if (it == m.requirements.end())
      throw ModelError(ModelError::Kind::MissingEncoding,
                       "question '" + q.question_id +
                           "' references unknown requirement '" + id + "'");
    req_block += "- [" + id + "] " + it->second.text + "\n";
  }
  if (req_block.empty()) req_block = "(no specific requirements cited)\n";

  nlohmann::json schema_obj = nlohmann::json::object();
  for (const auto& [name, _] : q.response_schema) schema_obj[name] = "true|false";
  std::string schema_json = schema_obj.dump();

  std::vector<std::string> fields;
  for (const auto& [name, _] : q.response_schema) fields.push_back(name);

  std::string feedback;
  for (size_t attempt = 0; attempt <= max_iters; ++attempt) {
    auto request = make_request(
        ctx.registry, "cegr_answer",
        {{"variable_definitions", var_defs},
         {"relevant_requirements", req_block},
         {"scenario_description", q.scenario.description},
         {"question", q.question_text},
         {"response_schema", schema_json},
         {"feedback_block", feedback}},
        ctx.temp_base);
    auto response = ctx.provider.complete(request);

    CegrAttempt rec;
    rec.index = attempt;
    rec.raw_response = response.text;

    CandidateAnswer answer;
    try {
      answer = translate_answer(response.text, fields, m.schema, q.question_id);
    } catch (const TranslationError&) {
      transcript_record(ctx, request, response.text,
                        "rejected: unparseable answer");
      if (attempt < max_iters) {
        rec.feedback = ctx.registry.render("cegr_parse_feedback", {}).user;
        feedback = "\n\n" + rec.feedback;
      }
      result.attempts.push_back(std::move(rec));
      continue;
    }

    rec.answer = answer;
    AnswerVerdict verdict = verify_answer(m, q.scenario, answer, ctx.pool);
    rec.verdict = verdict;
    transcript_record(ctx, request, response.text,
                      std::string("verdict: ") +
                          verdict_label_name(verdict.label));
    result.final_verdict = verdict;

    bool violation = verdict.label == AnswerVerdict::Label::Violation;
    if (violation && attempt < max_iters) {
      rec.feedback = build_feedback(mode, verdict, answer, ctx.registry);
      feedback = rec.feedback.empty() ? "" : "\n\n" + rec.feedback;
    }
    result.attempts.push_back(std::move(rec));
    if (!violation) break;
  }
  result.iterations_used = result.attempts.empty() ? 0 : result.attempts.size() - 1;
  return result;
}

std::vector<Question> load_questions_json(const nlohmann::json& j,
                                          const Schema& schema) {
  auto bad = [](const std::string& msg, size_t i) {
    throw ModelError(ModelError::Kind::Invalid,
                     "questions[" + std::to_string(i) + "]: " + msg);
  };
  if (!j.is_array())
    throw ModelError(ModelError::Kind::Invalid,
                     "questions document must be a JSON array");
  std::vector<Question> out;
  std::set<std::string> seen;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    if (!item.is_object()) bad("expected an object", i);
    Question q;

    if (!item.contains("question_id") || !item["question_id"].is_string())
      bad("missing string field 'question_id'", i);
    q.question_id = item["question_id"].get<std::string>();
    if (q.question_id.empty()) bad("'question_id' must be non-empty", i);
    if (!seen.insert(q.question_id).second)
      bad("duplicate question_id '" + q.question_id + "'", i);

    if (!item.contains("type") || !item["type"].is_string())
      bad("missing string field 'type'", i);
    std::string type = item["type"].get<std::string>();
    if (type == "single")
      q.type = Question::Type::Single;
    else if (type == "multi")
      q.type = Question::Type::Multi;
    else if (type == "none")
      q.type = Question::Type::None;
    else
      bad("'type' must be one of \"single\", \"multi\", \"none\"", i);

    if (!item.contains("scenario") || !item["scenario"].is_object())
      bad("missing object field 'scenario'", i);
    const auto& sc = item["scenario"];
    if (!sc.contains("description") || !sc["description"].is_string())
      bad("scenario is missing string field 'description'", i);
    q.scenario.question_id = q.question_id;
    q.scenario.description = sc["description"].get<std::string>();
    if (!sc.contains("state") || !sc["state"].is_object())
      bad("scenario is missing object field 'state'", i);
    for (const auto& [name, value] : sc["state"].items()) {
      const VarDecl* decl = schema.find(name);
      if (!decl) bad("scenario state names unknown variable '" + name + "'", i);
      if (value.is_boolean()) {
        if (decl->sort != Sort::Bool)
          bad("scenario state gives a boolean to Real variable '" + name + "'", i);
        q.scenario.state.set_bool(name, value.get<bool>());
      } else if (value.is_number_integer()) {
        if (decl->sort != Sort::Real)
          bad("scenario state gives a number to Bool variable '" + name + "'", i);
        mpz_class n(std::to_string(value.get<long long>()), 10);
        q.scenario.state.set_real(name, Rat(n));
      } else if (value.is_string()) {
        if (decl->sort != Sort::Real)
          bad("scenario state gives a numeral to Bool variable '" + name + "'", i);
        std::string lit = value.get<std::string>();
        bool negative = !lit.empty() && lit[0] == '-';
        auto r = rat_from_literal(negative ? lit.substr(1) : lit);
        if (!r)
          bad("scenario state value for '" + name + "' is not a decimal numeral", i);
        if (negative) *r = -*r;
        q.scenario.state.set_real(name, *r);
      } else {
        bad("scenario state value for '" + name +
            "' must be a boolean, an integer, or a decimal string", i);
      }
    }

    if (!item.contains("relevant_vars") || !item["relevant_vars"].is_array())
      bad("missing array field 'relevant_vars'", i);
    std::set<std::string> var_set;
    for (const auto& v : item["relevant_vars"]) {
      if (!v.is_string()) bad("'relevant_vars' entries must be strings", i);
      std::string name = v.get<std::string>();
      if (!schema.find(name))
        bad("'relevant_vars' names unknown variable '" + name + "'", i);
      if (!var_set.insert(name).second)
        bad("'relevant_vars' repeats '" + name + "'", i);
      q.relevant_vars.push_back(name);
    }

    if (!item.contains("relevant_req_ids") ||
        !item["relevant_req_ids"].is_array())
      bad("missing array field 'relevant_req_ids'", i);
    for (const auto& v : item["relevant_req_ids"]) {
      if (!v.is_string()) bad("'relevant_req_ids' entries must be strings", i);
      q.relevant_req_ids.push_back(v.get<std::string>());
    }

    if (!item.contains("response_schema") ||
        !item["response_schema"].is_object())
      bad("missing object field 'response_schema'", i);
    for (const auto& [name, value] : item["response_schema"].items()) {
      const VarDecl* decl = schema.find(name);
      if (!decl)
        bad("response_schema names unknown variable '" + name + "'", i);
      if (decl->sort != Sort::Bool)
        bad("response_schema variable '" + name + "' must be Bool", i);
      if (!value.is_string() || value.get<std::string>() != "Bool")
        bad("response_schema values must be the string \"Bool\"", i);
      if (!var_set.count(name))
        bad("response_schema variable '" + name +
            "' is not in relevant_vars", i);
      q.response_schema[name] = "Bool";
    }

    if (item.contains("question")) {
      if (!item["question"].is_string())
        bad("'question' must be a string", i);
      q.question_text = item["question"].get<std::string>();
    } else {
      q.question_text = q.scenario.description;
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace reqsmith
