#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reqsmith {

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct ProviderResponse {
  std::string text;
  Usage usage;
};

struct RenderedPrompt {
  std::string system;
  std::string user;
};

struct ProviderRequest {
  std::string template_id;
  std::map<std::string, std::string> variables;
  double temperature = 0.0;
  std::uint32_t max_output_tokens = 16384;
  RenderedPrompt rendered;
};

class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

// FNV-1a 64-bit digest as 16 lowercase hex digits; used for template and
// config fingerprints carried in transcripts and reports.
std::string fnv1a_hex(std::string_view data);

// Prompt templates are stored as plain text with a single "---" line
// separating the system part from the user part; a template without the
// separator is all user text. Placeholders are written between U+27E8 and
// U+27E9 angle brackets and must all be supplied at render time.
class TemplateRegistry {
 public:
  static const TemplateRegistry& builtin();

  TemplateRegistry() = default;
  void add(const std::string& id, const std::string& source);

  bool has(const std::string& id) const;
  const std::string& raw(const std::string& id) const;
  std::vector<std::string> ids() const;

  RenderedPrompt render(const std::string& id,
                        const std::map<std::string, std::string>& vars) const;

  // FNV-1a 64-bit over the raw template source, as 16 lowercase hex digits.
  std::string hash_hex(const std::string& id) const;

 private:
  std::map<std::string, std::string> sources_;
};

ProviderRequest make_request(const TemplateRegistry& registry,
                             const std::string& template_id,
                             const std::map<std::string, std::string>& vars,
                             double temperature);

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderResponse complete(const ProviderRequest& request) = 0;
  virtual std::string tag() const = 0;
};

// Deterministic provider driven by a playbook. Each entry names the template
// it answers; `when_contains` entries match when the rendered user prompt
// contains the needle, `attempt` entries match the Nth call for that template
// (0-based), and entries with neither act as wildcards. Lookup prefers
// when_contains matches, then attempt matches, then wildcards, scanning the
// playbook in order within each tier.
class ScriptedProvider : public Provider {
 public:
  struct PlaybookEntry {
    std::string template_id;
    std::optional<std::uint32_t> attempt;
    std::optional<std::string> when_contains;
    std::string response_text;
  };

  explicit ScriptedProvider(std::vector<PlaybookEntry> playbook);
  static ScriptedProvider from_json(const std::string& text);
  static std::vector<PlaybookEntry> parse_playbook(const std::string& text);

  ProviderResponse complete(const ProviderRequest& request) override;
  std::string tag() const override { return "scripted"; }

 private:
  std::vector<PlaybookEntry> playbook_;
  std::map<std::string, std::uint32_t> attempts_;
  std::mutex mutex_;
};

// Minimal JSON-over-HTTP provider: POSTs {model, system, user, temperature,
// max_tokens} and expects {text} back. Configured from the environment.
class HttpProvider : public Provider {
 public:
  HttpProvider(std::string endpoint, std::string model, std::string api_key);
  static HttpProvider from_env();

  ProviderResponse complete(const ProviderRequest& request) override;
  std::string tag() const override { return "http:" + model_; }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
};

struct TranscriptRecord {
  std::string template_id;
  std::string template_hash_hex;
  RenderedPrompt rendered_prompt;
  double temperature = 0.0;
  std::string response_text;
  std::string outcome;
};

// Append-only log of every provider exchange, serializable for the report.
class ProviderTranscript {
 public:
  void append(TranscriptRecord record);
  const std::vector<TranscriptRecord>& records() const { return records_; }
  std::string to_json() const;

 private:
  std::vector<TranscriptRecord> records_;
  mutable std::mutex mutex_;
};

}  // namespace reqsmith
