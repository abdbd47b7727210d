#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "molalign/prompt/markers.hpp"
#include "molalign/util/errors.hpp"
#include "molalign/util/sha256.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"
#include "json.hpp"

namespace molalign::llm {

struct PromptRequest {
  std::string system_text;
  std::string user_text;
  std::string model_id;
  int max_tokens = 1024;
  double temperature = 0.0; // 0 = greedy
  std::optional<long long> seed;
};

enum class Source { kLive, kCache, kMock };

inline const char *source_name(Source s) {
  switch (s) {
  case Source::kLive: return "live";
  case Source::kCache: return "cache";
  case Source::kMock: return "mock";
  }
  return "live";
}

inline Source source_from_name(const std::string &name) {
  if (name == "live")
    return Source::kLive;
  if (name == "cache")
    return Source::kCache;
  if (name == "mock")
    return Source::kMock;
  throw ValueError("unknown completion source '" + name + "'");
}

struct CompletionResult {
  std::string text;
  Source source = Source::kMock;
  std::optional<double> latency_ms;
};

inline void validate_request(const PromptRequest &req) {
  if (req.user_text.empty())
    throw ValueError("prompt user_text must be non-empty");
  if (req.max_tokens <= 0)
    throw ValueError("prompt max_tokens must be positive, got " +
                     std::to_string(req.max_tokens));
  if (req.temperature < 0.0)
    throw ValueError("prompt temperature must be >= 0");
}

// Digest of the canonical request serialization. Every keyed field is
// delimited so no two distinct requests can collide by concatenation.
inline std::string request_key(const PromptRequest &req) {
  char temp[40];
  std::snprintf(temp, sizeof(temp), "%.17g", req.temperature);
  std::string canonical;
  canonical += "model=" + req.model_id;
  canonical += '\x1f';
  canonical += "system=" + req.system_text;
  canonical += '\x1f';
  canonical += "user=" + req.user_text;
  canonical += '\x1f';
  canonical += "max_tokens=" + std::to_string(req.max_tokens);
  canonical += '\x1f';
  canonical += "temperature=";
  canonical += temp;
  canonical += '\x1f';
  canonical += "seed=" + (req.seed ? std::to_string(*req.seed) : std::string("none"));
  return util::sha256_hex(canonical);
}

namespace detail {

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  return line;
}

inline std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      lines.push_back(strip_cr(text.substr(start)));
      break;
    }
    lines.push_back(strip_cr(text.substr(start, end - start)));
    start = end + 1;
  }
  return lines;
}

// Fixed template answer; must stay parseable into exactly three properties.
inline std::string mock_template_answer() {
  return "1. Lipophilicity: governs membrane permeability and distribution.\n"
         "2. Molecular weight: lighter molecules cross biological barriers more readily.\n"
         "3. Hydrogen bond donors and acceptors: polar contacts shape binding and transport.\n";
}

// Reads the structured sections of a stage-2 prompt and restates them: every
// calibrated line verbatim, then one sentence per listed property.
inline std::string mock_md_text(const std::string &user_text) {
  std::vector<std::string> properties;
  std::vector<std::string> calibrated;
  std::string smiles = "this molecule";
  enum class Section { kNone, kProperties, kCalibrated } section = Section::kNone;
  for (const std::string &line : split_lines(user_text)) {
    if (line == prompting::kPropertiesHeading) {
      section = Section::kProperties;
      continue;
    }
    if (line == prompting::kCalibratedHeading) {
      section = Section::kCalibrated;
      continue;
    }
    if (line.empty()) {
      section = Section::kNone;
      continue;
    }
    if (line.rfind(prompting::kSmilesPrefix, 0) == 0) {
      smiles = line.substr(std::string(prompting::kSmilesPrefix).size());
      section = Section::kNone;
      continue;
    }
    if (section == Section::kProperties && line.rfind("- ", 0) == 0)
      properties.push_back(line.substr(2));
    else if (section == Section::kCalibrated)
      calibrated.push_back(line);
  }
  std::string body = "Deterministic description of " + smiles + ".\n";
  for (const std::string &line : calibrated)
    body += line + "\n";
  for (const std::string &prop : properties)
    body += "Considering " + prop +
            ", this molecule behaves consistently with the values reported above.\n";
  return body;
}

} // namespace detail

// Offline deterministic stand-in for the live endpoint. Output depends only
// on the request content.
inline CompletionResult mock_complete(const PromptRequest &req) {
  validate_request(req);
  CompletionResult out;
  out.source = Source::kMock;
  if (req.user_text.find(prompting::kStage1Marker) != std::string::npos)
    out.text = detail::mock_template_answer();
  else if (req.user_text.find(prompting::kStage2Marker) != std::string::npos)
    out.text = detail::mock_md_text(req.user_text);
  else
    out.text = "Mock completion " + request_key(req).substr(0, 16) + ".";
  return out;
}

// POST an OpenAI-style chat completion, retrying 429/5xx/transport failures
// with exponential backoff. Other statuses fail immediately.
inline CompletionResult complete(const PromptRequest &req, const std::string &endpoint,
                                 const std::string &api_key, int timeout_seconds = 60) {
  validate_request(req);
  std::size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("endpoint must include a scheme, got '" + endpoint + "'");
  std::size_t path_start = endpoint.find('/', scheme + 3);
  std::string root = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/')
    base.pop_back();

  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_text.empty())
    messages.push_back({{"role", "system"}, {"content", req.system_text}});
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  nlohmann::json body = {{"model", req.model_id},
                         {"messages", messages},
                         {"max_tokens", req.max_tokens},
                         {"temperature", req.temperature}};
  if (req.seed)
    body["seed"] = *req.seed;
  std::string payload = body.dump();

  const int max_attempts = 3;
  std::string last_failure;
  auto started = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(250LL << attempt));
    httplib::Client client(root);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key.empty())
      headers.emplace("Authorization", "Bearer " + api_key);
    httplib::Result res =
        client.Post(base + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "http status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw LlmError("completion rejected with http status " + std::to_string(res->status));

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &e) {
      throw LlmError(std::string("malformed completion body: ") + e.what());
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
      throw LlmError("completion body has no choices");
    const nlohmann::json &message = reply["choices"][0];
    if (!message.contains("message") || !message["message"].contains("content") ||
        !message["message"]["content"].is_string())
      throw LlmError("completion body has no message content");
    CompletionResult out;
    out.text = message["message"]["content"].get<std::string>();
    if (out.text.empty())
      throw LlmError("completion text is empty");
    out.source = Source::kLive;
    out.latency_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    return out;
  }
  throw LlmError("completion failed after " + std::to_string(max_attempts) +
                 " attempts; last error: " + last_failure);
}

using Backend = std::function<CompletionResult(const PromptRequest &)>;

// JSON-lines replay cache: look the key up, else delegate and persist the
// fresh entry before returning it.
inline CompletionResult cached_complete(const PromptRequest &req, const Backend &backend,
                                        const std::string &cache_path) {
  validate_request(req);
  std::string key = request_key(req);
  {
    std::ifstream in(cache_path);
    if (in) {
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
          continue;
        nlohmann::json entry;
        try {
          entry = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception &e) {
          throw IoError("llm cache " + cache_path + " line " + std::to_string(line_no) +
                        ": " + e.what());
        }
        if (!entry.is_object() || !entry.contains("key") || !entry["key"].is_string() ||
            !entry.contains("value") || !entry["value"].is_string())
          throw IoError("llm cache " + cache_path + " line " + std::to_string(line_no) +
                        ": entry must be an object with string 'key' and 'value'");
        if (entry["key"].get<std::string>() == key) {
          CompletionResult out;
          out.text = entry["value"].get<std::string>();
          out.source = Source::kCache;
          return out;
        }
      }
    }
  }

  CompletionResult fresh = backend(req);
  nlohmann::json entry = {{"key", key},
                          {"value", fresh.text},
                          {"created_at", static_cast<long long>(std::time(nullptr))}};
  {
    // appends from concurrent callers must not interleave
    static std::mutex append_mutex;
    std::lock_guard<std::mutex> lock(append_mutex);
    std::ofstream out(cache_path, std::ios::app);
    if (!out)
      throw IoError("cannot open llm cache for append: " + cache_path);
    out << entry.dump() << '\n';
    if (!out)
      throw IoError("write to llm cache failed: " + cache_path);
  }
  return fresh;
}

struct LlmConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1";
  std::string model_id = "mistral-7b-instruct";
  std::string api_key_env = "MOLALIGN_API_KEY";
  bool use_mock = true;
  std::string cache_path; // empty disables the replay cache
  int max_in_flight = 4;
  int timeout_seconds = 60;
};

// Single entry point used by the pipeline: stamps the configured model id,
// consults the cache, and limits concurrent live requests.
class Gateway {
public:
  explicit Gateway(LlmConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.max_in_flight <= 0)
      throw ConfigError("max_in_flight must be positive");
  }

  CompletionResult run(const PromptRequest &req) {
    PromptRequest stamped = req;
    if (stamped.model_id.empty())
      stamped.model_id = cfg_.model_id;
    if (!cfg_.cache_path.empty()) {
      return cached_complete(
          stamped, [this](const PromptRequest &r) { return backend_call(r); },
          cfg_.cache_path);
    }
    return backend_call(stamped);
  }

  const LlmConfig &config() const { return cfg_; }

  // number of requests that actually reached the backend (cache misses)
  std::size_t backend_calls() const { return backend_calls_.load(); }

private:
  CompletionResult backend_call(const PromptRequest &req) {
    backend_calls_.fetch_add(1);
    if (cfg_.use_mock)
      return mock_complete(req);
    {
      std::unique_lock<std::mutex> lock(slot_mutex_);
      slot_free_.wait(lock, [this] { return in_flight_ < cfg_.max_in_flight; });
      ++in_flight_;
    }
    std::string api_key;
    if (const char *env = std::getenv(cfg_.api_key_env.c_str()))
      api_key = env;
    try {
      CompletionResult out = complete(req, cfg_.endpoint, api_key, cfg_.timeout_seconds);
      release_slot();
      return out;
    } catch (...) {
      release_slot();
      throw;
    }
  }

  void release_slot() {
    {
      std::lock_guard<std::mutex> lock(slot_mutex_);
      --in_flight_;
    }
    slot_free_.notify_one();
  }

  LlmConfig cfg_;
  std::atomic<std::size_t> backend_calls_{0};
  std::mutex slot_mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

} // namespace molalign::llm
