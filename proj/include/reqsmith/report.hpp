// Command entry points, run configuration, Wilson-interval statistics, and
// JSON / Markdown report emission. The Markdown rendering is a pure function
// of the JSON report, never of internal state.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reqsmith/provider.hpp"
#include "reqsmith/session.hpp"

namespace reqsmith {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

// z such that the two-sided normal mass within [-z, z] equals `confidence`,
// found by Newton inversion of std::erf. z(0.95) = 1.9599639845400545.
double wilson_z(double confidence);

// Wilson score interval for `successes` out of `trials`, as fractions in
// [0, 1]. Throws std::domain_error when trials = 0 or successes > trials.
std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t trials,
                                          double confidence = 0.95);

// {"successes", "trials"} plus "rate", "ci95_lo", "ci95_hi" when trials > 0;
// zero-trial stats carry no rate and no interval.
nlohmann::json ci_stat(std::uint64_t successes, std::uint64_t trials);

struct Finding {
  std::string severity;  // "FAIL" | "WARN"
  std::string category;  // inconsistency, vacuousness, redundancy, ambiguity,
                         // roundtrip, undetected_mutant, unsafe_answer
  std::string subject;   // requirement / question / model element
  std::string detail;
};

struct Report {
  std::string command;
  std::string config_hash;
  std::vector<Finding> findings;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json sections = nlohmann::json::object();
  nlohmann::json statistics = nlohmann::json::object();

  nlohmann::json to_json() const;  // schema-versioned, with generated_at
};

// Markdown rendering of a report JSON document.
std::string report_markdown(const nlohmann::json& report);

// Strips volatile fields for byte-comparison of consecutive runs: the
// generated_at timestamp and every key ending in "_ms", recursively.
nlohmann::json scrub_for_comparison(nlohmann::json doc);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
  SolverConfig solver;  // command + per-query timeout
  std::size_t pool_capacity = 4;
  std::string provider = "scripted";  // "scripted" | "http"
  std::string playbook;               // scripted only

  std::string schema_path;
  std::string constraints_path;  // optional; empty means no constraints
  std::string requirements_path;
  std::string encodings_path;
  std::string questions_path;
  std::string mutations_path;
  std::string out_dir = "reqsmith-out";

  std::size_t samples = 5;
  std::uint32_t formalize_retries = 5;
  std::uint32_t clarify_rounds = 5;
  std::uint32_t max_iters = 5;
  double temp_screen = 1.0;
  double temp_clarify = 0.2;
  double temp_base = 0.0;
  std::uint64_t seed = 0;  // orders randomized test-data generation only

  // Canonical JSON echo of the configuration; its dump is what config_hash
  // fingerprints.
  nlohmann::json canonical() const;
  std::string hash() const { return fnv1a_hex(canonical().dump()); }
};

// Parses a config document. Relative paths resolve against base_dir. Enforces
// caps >= 1, samples >= 2, pool >= 1, and existence of every referenced file.
RunConfig load_run_config(const nlohmann::json& j, const std::string& base_dir);

// Re-checks the invariants after flag overrides.
void validate_config(const RunConfig& cfg);

std::unique_ptr<Provider> make_provider(const RunConfig& cfg);

struct CommandOutcome {
  int exit_code = 0;  // 0 clean, 1 findings; operational errors throw
  nlohmann::json report;
};

// Each command runs its pipeline stage over the configured inputs, writes
// report.json, report.md, and transcripts.json into cfg.out_dir, and returns
// the exit code with the report document. Configuration and I/O problems
// throw (ConfigError, ModelError, ...); the CLI maps those to exit 2.
CommandOutcome cmd_audit(const RunConfig& cfg);
CommandOutcome cmd_ambiguity(const RunConfig& cfg);
CommandOutcome cmd_roundtrip(const RunConfig& cfg);
CommandOutcome cmd_mutate(const RunConfig& cfg);
CommandOutcome cmd_cegr(const RunConfig& cfg);

}  // namespace reqsmith
