#include "reqsmith/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "json.hpp"
#include "reqsmith/parser.hpp"
#include "reqsmith/sexpr.hpp"

namespace reqsmith {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void record(PipelineContext& ctx, const ProviderRequest& request,
            const std::string& response_text, const std::string& outcome) {
  ctx.transcript.append({request.template_id,
                         ctx.registry.hash_hex(request.template_id),
                         request.rendered, request.temperature, response_text,
                         outcome});
}

ProviderResponse call(PipelineContext& ctx, ProviderRequest& request,
                      const std::string& appended_feedback) {
  if (!appended_feedback.empty()) request.rendered.user += appended_feedback;
  return ctx.provider.complete(request);
}

struct ParsedBatch {
  std::map<std::string, Encoding> encodings;
  std::optional<std::string> error;
  std::vector<std::string> missing;  // set when the error is a coverage gap
};

// Reads a full SMT-LIB response, keeping only zero-arity define-funs.
// Definitions act as macros for later ones; those named req_<id> become the
// candidate encodings. Everything else (declarations, asserts, echo/check-sat
// scaffolding) is scaffolding the prompt asks for and is skipped.
ParsedBatch parse_formalize_response(const std::string& text,
                                     const Schema& schema,
                                     const DomainConstraints& constraints,
                                     const std::vector<Requirement>& reqs,
                                     const Provenance& provenance) {
  ParsedBatch out;
  std::map<std::string, TermPtr> defs;
  std::map<std::string, const Requirement*> by_id;
  for (const auto& r : reqs) by_id[r.id] = &r;
  try {
    SexprReader reader(text);
    Sexpr e;
    bool saw_any = false;
    while (reader.next(e)) {
      saw_any = true;
      if (!e.is_list() || e.items.empty() || !e.items[0].is_atom("define-fun"))
        continue;
      if (e.items.size() != 5) {
        out.error = "define-fun must have the shape (define-fun name () Sort body)";
        return out;
      }
      if (e.items[1].kind != Sexpr::Kind::Atom) {
        out.error = "define-fun name must be a symbol";
        return out;
      }
      const std::string& name = e.items[1].atom;
      if (!e.items[2].is_list() || !e.items[2].items.empty()) {
        out.error = "define-fun '" + name + "' takes parameters; only zero-arity definitions are accepted";
        return out;
      }
      TermPtr body = parse_term_sexpr(e.items[4], schema, defs);
      Sort declared;
      if (e.items[3].is_atom("Bool")) {
        declared = Sort::Bool;
      } else if (e.items[3].is_atom("Real")) {
        declared = Sort::Real;
      } else {
        out.error = "define-fun '" + name + "' has unsupported sort";
        return out;
      }
      if (body->sort != declared) {
        out.error = "define-fun '" + name + "' body sort does not match its declared sort";
        return out;
      }
      if (!defs.emplace(name, body).second) {
        out.error = "duplicate definition of '" + name + "'";
        return out;
      }
      if (name.rfind("req_", 0) != 0) continue;
      std::string id = name.substr(4);
      auto req = by_id.find(id);
      if (req == by_id.end()) {
        out.error = "define-fun '" + name + "' does not match any requirement id";
        return out;
      }
      if (body->sort != Sort::Bool) {
        out.error = "encoding of '" + id + "' is not Bool-sorted";
        return out;
      }
      Encoding enc;
      enc.req_id = id;
      enc.provenance = provenance;
      if (req->second->kind == ReqKind::Conditional) {
        if (body->kind != TermKind::Implies) {
          out.error = "requirement '" + id + "' is conditional but its encoding is not an implication (=> guard body)";
          return out;
        }
        enc.guard = body->args[0];
        enc.body = body->args[1];
      } else {
        enc.body = body;
      }
      if (!out.encodings.emplace(id, std::move(enc)).second) {
        out.error = "requirement '" + id + "' encoded more than once";
        return out;
      }
    }
    if (!saw_any) {
      out.error = "response contains no s-expressions";
      return out;
    }
  } catch (const SexprError& e) {
    out.error = std::string("unreadable SMT-LIB: ") + e.what();
    return out;
  } catch (const TermError& e) {
    out.error = e.what();
    return out;
  }

  for (const auto& r : reqs)
    if (!out.encodings.count(r.id)) out.missing.push_back(r.id);
  if (!out.missing.empty()) {
    std::string joined;
    for (const auto& id : out.missing)
      joined += (joined.empty() ? "" : ", ") + id;
    out.error = "no encoding produced for: " + joined;
    return out;
  }

  try {
    std::vector<Encoding> encs;
    for (const auto& [_, enc] : out.encodings) encs.push_back(enc);
    AssembledModel m = assemble(schema, constraints, reqs, std::move(encs));
    out.encodings = std::move(m.encodings);
  } catch (const ModelError& e) {
    out.error = e.what();
    out.encodings.clear();
  }
  return out;
}

// One bounded formalize loop; `seed_rejection` pre-loads the rejection block
// of the first attempt (used by the round-trip repair loop).
std::map<std::string, Encoding> formalize_loop(
    const std::vector<Requirement>& reqs, const Schema& schema,
    const DomainConstraints& constraints, PipelineContext& ctx,
    std::string seed_rejection) {
  std::string schema_block = render_schema_block(schema);
  std::string reqs_json = requirements_to_json(reqs);
  std::string rejection = std::move(seed_rejection);
  std::optional<std::string> last_error;
  std::vector<std::string> last_missing;
  for (std::uint32_t attempt = 0; attempt <= ctx.max_retries; ++attempt) {
    auto request = make_request(ctx.registry, "formalize",
                                {{"requirements_json", reqs_json},
                                 {"schema_block", schema_block},
                                 {"rejection_block", rejection}},
                                ctx.temp_base);
    auto response = ctx.provider.complete(request);
    ParsedBatch batch = parse_formalize_response(
        response.text, schema, constraints, reqs,
        Provenance::generated(static_cast<int>(attempt), ctx.provider.tag()));
    record(ctx, request, response.text,
           batch.error ? "rejected: " + *batch.error : "accepted");
    if (!batch.error) return std::move(batch.encodings);
    last_error = batch.error;
    last_missing = batch.missing;
    rejection = "\n\n" + ctx.registry
                             .render("formalize_retry_suffix",
                                     {{"error_text", *batch.error}})
                             .user;
  }
  if (!last_missing.empty())
    throw PipelineError(PipelineError::Kind::CoverageGap,
                        "retry budget exhausted; " + *last_error, last_missing);
  throw PipelineError(PipelineError::Kind::RetryBudgetExhausted,
                      "retry budget exhausted; last error: " + *last_error);
}

struct SampleResult {
  std::optional<Encoding> encoding;
};

// One screening sample: bare (assert ...) statements conjoined into a
// guardless encoding. Retries append the latest rejection to the prompt.
SampleResult draw_sample(const Requirement& req, const Schema& schema,
                         PipelineContext& ctx, size_t sample_index) {
  std::string rejection;
  for (std::uint32_t attempt = 0; attempt <= ctx.max_retries; ++attempt) {
    auto request = make_request(
        ctx.registry, "ambiguity_sample",
        {{"schema_variable_list", render_schema_variable_list(schema)},
         {"requirement_text", req.text}},
        ctx.temp_screen);
    auto response = call(ctx, request, rejection);
    std::string error;
    std::vector<TermPtr> asserted;
    try {
      SexprReader reader(response.text);
      Sexpr e;
      while (reader.next(e)) {
        if (!e.is_list() || e.items.size() != 2 || !e.items[0].is_atom("assert")) {
          error = "expected only (assert ...) statements";
          break;
        }
        TermPtr t = parse_term_sexpr(e.items[1], schema);
        if (t->sort != Sort::Bool) {
          error = "asserted term is not Bool-sorted";
          break;
        }
        asserted.push_back(t);
      }
      if (error.empty() && asserted.empty())
        error = "no (assert ...) statements found";
    } catch (const SexprError& ex) {
      error = std::string("unreadable SMT-LIB: ") + ex.what();
    } catch (const TermError& ex) {
      error = ex.what();
    }
    record(ctx, request, response.text,
           error.empty() ? "accepted" : "rejected: " + error);
    if (error.empty()) {
      Encoding enc;
      enc.req_id = req.id;
      enc.body = asserted.size() == 1 ? asserted[0] : mk_and(asserted);
      enc.provenance = Provenance::generated(static_cast<int>(sample_index),
                                             ctx.provider.tag());
      return {enc};
    }
    rejection = "\n\n" + ctx.registry
                             .render("formalize_retry_suffix",
                                     {{"error_text", error}})
                             .user;
  }
  return {std::nullopt};
}

std::vector<std::string> witness_lines(const AmbiguityScreen& screen) {
  std::vector<std::string> lines;
  for (const auto& d : screen.clusters.witnesses)
    lines.push_back("classes " + std::to_string(d.class_a) + " vs " +
                    std::to_string(d.class_b) + ": " + render_witness(d.witness));
  if (lines.empty() && screen.clusters.inconclusive)
    lines.push_back("(solver inconclusive; no witness available)");
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& line : lines) {
    if (!out.empty()) out += "\n";
    out += line;
  }
  return out;
}

bool screen_converged(const AmbiguityScreen& screen) {
  return screen.clusters.classes.size() <= 1 && !screen.clusters.inconclusive;
}

}  // namespace

std::string render_schema_block(const Schema& schema) {
  std::string out;
  for (const auto& v : schema.vars()) {
    out += "(declare-const " + v.name + " " + sort_name(v.sort) + ")";
    if (!v.description.empty()) out += " ; " + v.description;
    out += "\n";
  }
  return out;
}

std::string render_schema_variable_list(const Schema& schema) {
  std::string out;
  for (const auto& v : schema.vars()) {
    out += v.name + " : " + sort_name(v.sort);
    if (!v.description.empty()) out += " (" + v.description + ")";
    out += "\n";
  }
  return out;
}

std::string render_witness(const Witness& w) {
  std::string out;
  for (const auto& [name, value] : w.values) {
    if (!out.empty()) out += " ";
    out += "(" + name + " " + value_to_display(value) + ")";
  }
  return out.empty() ? "(empty)" : out;
}

std::string requirements_to_json(const std::vector<Requirement>& reqs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reqs)
    arr.push_back({{"id", r.id}, {"text", r.text}, {"kind", req_kind_name(r.kind)}});
  return arr.dump();
}

std::map<std::string, Encoding> formalize(const std::vector<Requirement>& reqs,
                                          const Schema& schema,
                                          const DomainConstraints& constraints,
                                          PipelineContext& ctx) {
  if (reqs.empty())
    throw PipelineError(PipelineError::Kind::Precondition,
                        "formalize requires at least one requirement");
  return formalize_loop(reqs, schema, constraints, ctx, "");
}

AmbiguityScreen screen_ambiguity(const Requirement& req, const Schema& schema,
                                 const DomainConstraints& constraints,
                                 PipelineContext& ctx, size_t n_samples) {
  if (n_samples < 2)
    throw PipelineError(PipelineError::Kind::Precondition,
                        "ambiguity screening requires at least 2 samples");
  AmbiguityScreen screen;
  for (size_t s = 0; s < n_samples; ++s) {
    SampleResult result = draw_sample(req, schema, ctx, s);
    if (result.encoding)
      screen.samples.push_back(std::move(*result.encoding));
    else
      screen.dropped.push_back(s);
  }
  if (screen.samples.size() < 2)
    throw PipelineError(PipelineError::Kind::SampleShortfall,
                        "only " + std::to_string(screen.samples.size()) +
                            " of " + std::to_string(n_samples) +
                            " samples survived for '" + req.id + "'");
  screen.clusters = cluster_samples(constraints, screen.samples, ctx.pool);
  screen.clusters.req_id = req.id;
  screen.flagged =
      screen.clusters.classes.size() > 1 || screen.clusters.inconclusive;
  return screen;
}

ClarifyResult clarify(const Requirement& req, const AmbiguityScreen& screen,
                      const Schema& schema, const DomainConstraints& constraints,
                      PipelineContext& ctx, size_t n_samples,
                      size_t max_rounds) {
  ClarifyResult result;
  result.clarified = req;
  result.final_screen = screen;
  if (screen_converged(screen)) {
    result.converged = true;
    return result;
  }
  std::string current_text = req.text;
  AmbiguityScreen current = screen;
  for (size_t round = 0; round < max_rounds; ++round) {
    std::string class_formulas;
    for (size_t k = 0; k < current.clusters.classes.size(); ++k) {
      const auto& cls = current.clusters.classes[k];
      class_formulas += "class " + std::to_string(k) + " (" +
                        std::to_string(cls.members.size()) + " of " +
                        std::to_string(current.samples.size()) + " samples): " +
                        print_term(whole(current.samples[cls.representative])) +
                        "\n";
    }
    std::vector<std::string> witnesses = witness_lines(current);
    auto request = make_request(
        ctx.registry, "clarify",
        {{"schema_variable_list", render_schema_variable_list(schema)},
         {"requirement_text", current_text},
         {"class_count", std::to_string(current.clusters.classes.size())},
         {"class_formulas", class_formulas},
         {"witness_block", join_lines(witnesses)}},
        ctx.temp_clarify);
    auto response = ctx.provider.complete(request);
    std::string rewritten = trim(response.text);
    record(ctx, request, response.text,
           rewritten.empty() ? "rejected: empty rewrite" : "accepted");
    if (rewritten.empty())
      throw PipelineError(PipelineError::Kind::MalformedResponse,
                          "clarification round " + std::to_string(round) +
                              " produced empty text for '" + req.id + "'");
    Requirement rewritten_req{req.id, rewritten, req.kind};
    AmbiguityScreen next =
        screen_ambiguity(rewritten_req, schema, constraints, ctx, n_samples);
    result.rounds.push_back({round, current_text,
                             current.clusters.classes.size(), witnesses,
                             rewritten, next.clusters.classes.size()});
    current_text = rewritten;
    current = std::move(next);
    if (screen_converged(current)) break;
  }
  result.clarified.text = current_text;
  result.final_screen = current;
  result.converged = screen_converged(current);
  return result;
}

double jaccard_token_similarity(const std::string& a, const std::string& b) {
  auto tokens = [](const std::string& s) {
    std::set<std::string> out;
    std::string word;
    for (char c : s) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!word.empty()) {
        out.insert(word);
        word.clear();
      }
    }
    if (!word.empty()) out.insert(word);
    return out;
  };
  std::set<std::string> ta = tokens(a), tb = tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  size_t both = 0;
  for (const auto& t : ta) both += tb.count(t);
  size_t all = ta.size() + tb.size() - both;
  return static_cast<double>(both) / static_cast<double>(all);
}

std::vector<RoundTripOutcome> round_trip(const AssembledModel& m,
                                         PipelineContext& ctx,
                                         SimilarityFn similarity) {
  std::vector<RoundTripOutcome> outcomes;
  std::string schema_block = render_schema_block(m.schema);
  for (const auto& [id, req] : m.requirements) {
    const Encoding& original = m.encodings.at(id);
    RoundTripOutcome outcome;
    outcome.req_id = id;

    auto request = make_request(ctx.registry, "informalize",
                                {{"schema_block", schema_block},
                                 {"req_id", id},
                                 {"kind", req_kind_name(req.kind)},
                                 {"formula", print_term(whole(original))}},
                                ctx.temp_base);
    auto response = ctx.provider.complete(request);
    std::string reconstructed_text;
    size_t open = response.text.find('{');
    size_t close = response.text.rfind('}');
    if (open != std::string::npos && close != std::string::npos && open < close) {
      auto doc = nlohmann::json::parse(
          response.text.substr(open, close - open + 1), nullptr, false);
      if (doc.is_object() && doc.contains("text") && doc["text"].is_string())
        reconstructed_text = doc["text"].get<std::string>();
    }
    if (reconstructed_text.empty()) reconstructed_text = trim(response.text);
    record(ctx, request, response.text,
           reconstructed_text.empty() ? "rejected: empty reconstruction"
                                      : "accepted");
    if (reconstructed_text.empty()) {
      outcome.failure = "informalization returned no text";
      outcomes.push_back(std::move(outcome));
      continue;
    }
    outcome.reconstructed_text = reconstructed_text;
    outcome.text_similarity = similarity(req.text, reconstructed_text);

    Requirement reconstructed_req{id, reconstructed_text, req.kind};
    std::string seed;
    for (std::uint32_t repair = 0; repair <= ctx.max_retries; ++repair) {
      std::map<std::string, Encoding> encs;
      try {
        encs = formalize_loop({reconstructed_req}, m.schema, m.constraints,
                              ctx, seed);
      } catch (const PipelineError& e) {
        outcome.failure = e.what();
        break;
      }
      outcome.reconstructed = encs.at(id);
      AgreementVerdict verdict =
          check_agreement(m.constraints, original, *outcome.reconstructed,
                          ctx.pool);
      outcome.equivalent = verdict;
      outcome.repair_rounds = repair;
      if (verdict.status == AgreementVerdict::Status::Agree &&
          !verdict.inconclusive)
        break;
      if (repair == ctx.max_retries) break;
      std::vector<std::string> lines;
      if (verdict.a_not_b)
        lines.push_back("original permits, reconstruction forbids: " +
                        render_witness(*verdict.a_not_b));
      if (verdict.b_not_a)
        lines.push_back("reconstruction permits, original forbids: " +
                        render_witness(*verdict.b_not_a));
      if (lines.empty())
        lines.push_back("(solver inconclusive; no witness available)");
      seed = "\n\n" + ctx.registry
                          .render("roundtrip_repair_suffix",
                                  {{"witness_block", join_lines(lines)}})
                          .user;
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace reqsmith
