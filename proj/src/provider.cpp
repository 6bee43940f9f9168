#include "reqsmith/provider.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

namespace reqsmith {

namespace detail {
const std::map<std::string, std::string>& builtin_template_sources();
}

namespace {

constexpr char kPlaceholderOpen[] = "\xE2\x9F\xA8";   // U+27E8
constexpr char kPlaceholderClose[] = "\xE2\x9F\xA9";  // U+27E9

std::string substitute(const std::string& id, const std::string& text,
                       const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (true) {
    size_t open = text.find(kPlaceholderOpen, pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      return out;
    }
    size_t name_start = open + 3;
    size_t close = text.find(kPlaceholderClose, name_start);
    if (close == std::string::npos)
      throw ProviderError("template '" + id + "': unterminated placeholder");
    std::string name = text.substr(name_start, close - name_start);
    auto it = vars.find(name);
    if (it == vars.end())
      throw ProviderError("template '" + id + "': no value for placeholder '" +
                          name + "'");
    out.append(text, pos, open - pos);
    out.append(it->second);
    pos = close + 3;
  }
}

}  // namespace

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    for (const auto& [id, source] : detail::builtin_template_sources())
      r.add(id, source);
    return r;
  }();
  return registry;
}

void TemplateRegistry::add(const std::string& id, const std::string& source) {
  sources_[id] = source;
}

bool TemplateRegistry::has(const std::string& id) const {
  return sources_.count(id) > 0;
}

const std::string& TemplateRegistry::raw(const std::string& id) const {
  auto it = sources_.find(id);
  if (it == sources_.end())
    throw ProviderError("unknown template '" + id + "'");
  return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(sources_.size());
  for (const auto& [id, _] : sources_) out.push_back(id);
  return out;
}

RenderedPrompt TemplateRegistry::render(
    const std::string& id, const std::map<std::string, std::string>& vars) const {
  const std::string& source = raw(id);
  std::string system_part, user_part;
  const std::string sep = "\n---\n";
  size_t cut = source.find(sep);
  if (cut == std::string::npos) {
    user_part = source;
  } else {
    system_part = source.substr(0, cut);
    user_part = source.substr(cut + sep.size());
  }
  return RenderedPrompt{substitute(id, system_part, vars),
                        substitute(id, user_part, vars)};
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string TemplateRegistry::hash_hex(const std::string& id) const {
  return fnv1a_hex(raw(id));
}

ProviderRequest make_request(const TemplateRegistry& registry,
                             const std::string& template_id,
                             const std::map<std::string, std::string>& vars,
                             double temperature) {
  ProviderRequest request;
  request.template_id = template_id;
  request.variables = vars;
  request.temperature = temperature;
  request.rendered = registry.render(template_id, vars);
  return request;
}

ScriptedProvider::ScriptedProvider(std::vector<PlaybookEntry> playbook)
    : playbook_(std::move(playbook)) {}

ScriptedProvider ScriptedProvider::from_json(const std::string& text) {
  return ScriptedProvider(parse_playbook(text));
}

std::vector<ScriptedProvider::PlaybookEntry> ScriptedProvider::parse_playbook(
    const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("playbook: ") + e.what());
  }
  const nlohmann::json* entries = &doc;
  if (doc.is_object()) {
    if (!doc.contains("playbook") || !doc["playbook"].is_array())
      throw ProviderError("playbook: expected an array or {\"playbook\": [...]}");
    entries = &doc["playbook"];
  } else if (!doc.is_array()) {
    throw ProviderError("playbook: expected an array or {\"playbook\": [...]}");
  }
  std::vector<PlaybookEntry> playbook;
  size_t index = 0;
  for (const auto& item : *entries) {
    std::string where = "playbook[" + std::to_string(index++) + "]";
    if (!item.is_object()) throw ProviderError(where + ": expected an object");
    if (!item.contains("template_id") || !item["template_id"].is_string())
      throw ProviderError(where + ": missing string field 'template_id'");
    if (!item.contains("response_text") || !item["response_text"].is_string())
      throw ProviderError(where + ": missing string field 'response_text'");
    PlaybookEntry entry;
    entry.template_id = item["template_id"].get<std::string>();
    entry.response_text = item["response_text"].get<std::string>();
    if (item.contains("attempt")) {
      if (!item["attempt"].is_number_unsigned())
        throw ProviderError(where + ": 'attempt' must be a non-negative integer");
      entry.attempt = item["attempt"].get<std::uint32_t>();
    }
    if (item.contains("when_contains")) {
      if (!item["when_contains"].is_string())
        throw ProviderError(where + ": 'when_contains' must be a string");
      entry.when_contains = item["when_contains"].get<std::string>();
    }
    playbook.push_back(std::move(entry));
  }
  return playbook;
}

ProviderResponse ScriptedProvider::complete(const ProviderRequest& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::uint32_t attempt = attempts_[request.template_id]++;
  const PlaybookEntry* chosen = nullptr;
  for (const auto& entry : playbook_) {
    if (entry.template_id != request.template_id || !entry.when_contains)
      continue;
    if (request.rendered.user.find(*entry.when_contains) != std::string::npos) {
      chosen = &entry;
      break;
    }
  }
  if (!chosen) {
    for (const auto& entry : playbook_) {
      if (entry.template_id != request.template_id || entry.when_contains)
        continue;
      if (entry.attempt && *entry.attempt == attempt) {
        chosen = &entry;
        break;
      }
    }
  }
  if (!chosen) {
    for (const auto& entry : playbook_) {
      if (entry.template_id != request.template_id) continue;
      if (!entry.attempt && !entry.when_contains) {
        chosen = &entry;
        break;
      }
    }
  }
  if (!chosen)
    throw ProviderError("playbook has no entry for template '" +
                        request.template_id + "' attempt " +
                        std::to_string(attempt));
  ProviderResponse response;
  response.text = chosen->response_text;
  response.usage.prompt_tokens =
      request.rendered.system.size() + request.rendered.user.size();
  response.usage.completion_tokens = response.text.size();
  return response;
}

HttpProvider::HttpProvider(std::string endpoint, std::string model,
                           std::string api_key)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)) {}

HttpProvider HttpProvider::from_env() {
  const char* endpoint = std::getenv("REQSMITH_LLM_ENDPOINT");
  const char* model = std::getenv("REQSMITH_LLM_MODEL");
  const char* key = std::getenv("REQSMITH_LLM_KEY");
  if (!endpoint || !*endpoint)
    throw ProviderError("REQSMITH_LLM_ENDPOINT is not set");
  if (!model || !*model) throw ProviderError("REQSMITH_LLM_MODEL is not set");
  return HttpProvider(endpoint, model, key ? key : "");
}

ProviderResponse HttpProvider::complete(const ProviderRequest& request) {
  size_t scheme = endpoint_.find("://");
  if (scheme == std::string::npos)
    throw ProviderError("endpoint '" + endpoint_ + "' has no scheme");
  size_t path_start = endpoint_.find('/', scheme + 3);
  std::string base = path_start == std::string::npos
                         ? endpoint_
                         : endpoint_.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  nlohmann::json body = {{"model", model_},
                         {"system", request.rendered.system},
                         {"user", request.rendered.user},
                         {"temperature", request.temperature},
                         {"max_tokens", request.max_output_tokens}};

  httplib::Client client(base);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(300, 0);
  httplib::Headers headers;
  if (!api_key_.empty())
    headers.emplace("Authorization", "Bearer " + api_key_);
  auto result = client.Post(path, headers, body.dump(), "application/json");
  if (!result)
    throw ProviderError("request to " + endpoint_ + " failed: " +
                        httplib::to_string(result.error()));
  if (result->status != 200)
    throw ProviderError("request to " + endpoint_ + " returned status " +
                        std::to_string(result->status));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed response body: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string())
    throw ProviderError("response body has no string field 'text'");
  ProviderResponse response;
  response.text = doc["text"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& usage = doc["usage"];
    if (usage.contains("prompt_tokens") &&
        usage["prompt_tokens"].is_number_unsigned())
      response.usage.prompt_tokens = usage["prompt_tokens"].get<std::uint64_t>();
    if (usage.contains("completion_tokens") &&
        usage["completion_tokens"].is_number_unsigned())
      response.usage.completion_tokens =
          usage["completion_tokens"].get<std::uint64_t>();
  }
  return response;
}

void ProviderTranscript::append(TranscriptRecord record) {
  std::lock_guard<std::mutex> lock(mutex_);
  records_.push_back(std::move(record));
}

std::string ProviderTranscript::to_json() const {
  std::lock_guard<std::mutex> lock(mutex_);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& record : records_) {
    out.push_back({{"template_id", record.template_id},
                   {"template_hash", record.template_hash_hex},
                   {"system", record.rendered_prompt.system},
                   {"user", record.rendered_prompt.user},
                   {"temperature", record.temperature},
                   {"response_text", record.response_text},
                   {"outcome", record.outcome}});
  }
  return out.dump(2);
}

}  // namespace reqsmith
