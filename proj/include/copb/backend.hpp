#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "copb/core.hpp"
#include "copb/io.hpp"

// Chat-completion backends behind one interface: a live HTTP client with
// retry/backoff and a transcript-driven scripted backend for offline runs.
// Every call is accounted into a shared token-usage total.

namespace copb {

struct BackendError : Error { using Error::Error; };
struct TransportError : BackendError { using BackendError::BackendError; };

enum class Role { System, User, Assistant };

constexpr std::string_view role_name(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

inline std::optional<Role> role_from_name(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  return std::nullopt;
}

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionParams {
  std::string model = "gpt-4-turbo";
  double temperature = 1.0;  // [0, 2]
  int max_tokens = 512;
  std::vector<std::string> stop;
};

struct TokenUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  bool estimated = false;  // true when counts were derived from text length

  long long total() const { return prompt_tokens + completion_tokens; }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

inline TokenUsage aggregate_usage(std::span<const TokenUsage> usages) {
  TokenUsage sum;
  for (const TokenUsage& u : usages) {
    sum.prompt_tokens += u.prompt_tokens;
    sum.completion_tokens += u.completion_tokens;
    sum.estimated = sum.estimated || u.estimated;
  }
  return sum;
}

inline TokenUsage aggregate_usage(const std::vector<TokenUsage>& usages) {
  return aggregate_usage(std::span<const TokenUsage>(usages));
}

/// Average token cost of one physical trajectory when each generated
/// sequence is grounded into `trajectories_per_sequence` replicas.
inline double tokens_per_trajectory(const TokenUsage& total, long long n_sequences,
                                    long long trajectories_per_sequence) {
  if (n_sequences < 1 || trajectories_per_sequence < 1) {
    throw Error("tokens_per_trajectory: sequence and replica counts must be >= 1");
  }
  return static_cast<double>(total.total()) /
         static_cast<double>(n_sequences * trajectories_per_sequence);
}

/// Fallback token estimate when a server reply omits usage: ceil(chars / 4).
inline long long estimate_tokens(std::string_view text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_initial_ms = 200;
  double backoff_factor = 2.0;
};

struct BackendConfig {
  std::string kind = "scripted";  // "http" or "scripted"
  std::string base_url;           // http: scheme://host[:port][/prefix]
  std::string api_key;
  std::string model = "gpt-4-turbo";
  std::string transcript_path;    // scripted
  RetryPolicy retry;
  int max_in_flight = 4;
};

// Identifies one workflow step so the scripted backend can key its replies
// by (tag, persona, turn) instead of the full prompt text.
struct RequestContext {
  std::string tag;
  std::string persona_id;
  int turn = 0;
};

struct Completion {
  std::string text;
  TokenUsage usage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  Completion complete(const std::vector<ChatMessage>& messages, const CompletionParams& params,
                      const RequestContext& ctx = {}) {
    if (messages.empty()) throw BackendError("complete: empty message list");
    if (messages.back().role != Role::User) {
      throw BackendError("complete: message list must end with a user message");
    }
    if (params.temperature < 0.0 || params.temperature > 2.0) {
      throw BackendError("complete: temperature outside [0, 2]");
    }
    for (const ChatMessage& m : messages) {
      if (m.role != Role::System && m.content.empty()) {
        throw BackendError("complete: empty content in non-system message");
      }
    }
    Completion c = do_complete(messages, params, ctx);
    {
      std::lock_guard lock(usage_mutex_);
      total_.prompt_tokens += c.usage.prompt_tokens;
      total_.completion_tokens += c.usage.completion_tokens;
      total_.estimated = total_.estimated || c.usage.estimated;
      ++calls_;
    }
    return c;
  }

  TokenUsage total_usage() const {
    std::lock_guard lock(usage_mutex_);
    return total_;
  }

  long long call_count() const {
    std::lock_guard lock(usage_mutex_);
    return calls_;
  }

 protected:
  virtual Completion do_complete(const std::vector<ChatMessage>& messages,
                                 const CompletionParams& params, const RequestContext& ctx) = 0;

 private:
  mutable std::mutex usage_mutex_;
  TokenUsage total_;
  long long calls_ = 0;
};

// ------------------------------------------------------------------ scripted

// Replays canned replies from a JSON Lines transcript:
// {"tag","persona_id","turn","response","prompt_tokens","completion_tokens"}.
// Pure: the same key always yields the same completion.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(const std::filesystem::path& transcript_path) {
    std::size_t line_no = 0;
    for (const std::string& line : read_lines(transcript_path)) {
      ++line_no;
      try {
        const Json j = Json::parse(line);
        const Key key{j.at("tag").get<std::string>(), j.at("persona_id").get<std::string>(),
                      j.at("turn").get<int>()};
        entries_[key] = Completion{
            j.at("response").get<std::string>(),
            TokenUsage{j.value("prompt_tokens", 0LL), j.value("completion_tokens", 0LL), false}};
      } catch (const Json::exception& e) {
        throw ParseError(transcript_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  std::size_t size() const { return entries_.size(); }

 protected:
  Completion do_complete(const std::vector<ChatMessage>&, const CompletionParams&,
                         const RequestContext& ctx) override {
    const auto it = entries_.find(Key{ctx.tag, ctx.persona_id, ctx.turn});
    if (it == entries_.end()) {
      throw BackendError("no transcript entry for tag '" + ctx.tag + "', persona '" +
                         ctx.persona_id + "', turn " + std::to_string(ctx.turn));
    }
    return it->second;
  }

 private:
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, Completion> entries_;
};

// ---------------------------------------------------------------- http

struct HttpResponse {
  int status = 0;
  std::string body;
  bool transport_ok = false;
};

// POSTs JSON to a URL and returns status/body. Swappable so the retry and
// parse logic is testable without sockets; the default uses cpp-httplib.
using HttpPostFn = std::function<HttpResponse(const std::string& url, const std::string& api_key,
                                              const std::string& body)>;

inline HttpResponse default_http_post(const std::string& url, const std::string& api_key,
                                      const std::string& body) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url missing scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto result = client.Post(path, headers, body, "application/json");
  if (!result) return HttpResponse{0, {}, false};
  return HttpResponse{result->status, result->body, true};
}

// Client for the de-facto chat-completions endpoint. Retries transient
// failures (transport errors, 429, 5xx) with exponential backoff; concurrent
// callers are admitted up to max_in_flight at a time.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config, HttpPostFn post = {})
      : config_(std::move(config)),
        post_(post ? std::move(post) : HttpPostFn(default_http_post)) {
    if (config_.base_url.empty()) throw ConfigError("http backend requires base_url");
  }

 protected:
  Completion do_complete(const std::vector<ChatMessage>& messages, const CompletionParams& params,
                         const RequestContext&) override {
    Json body{{"model", params.model.empty() ? config_.model : params.model},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
    Json msgs = Json::array();
    long long prompt_chars = 0;
    for (const ChatMessage& m : messages) {
      msgs.push_back(Json{{"role", std::string(role_name(m.role))}, {"content", m.content}});
      prompt_chars += static_cast<long long>(m.content.size());
    }
    body["messages"] = std::move(msgs);
    if (!params.stop.empty()) body["stop"] = params.stop;

    const std::string url = config_.base_url + "/chat/completions";
    const std::string payload = body.dump();

    Admission slot(*this);
    std::string last_failure = "no attempts made";
    int backoff_ms = config_.retry.backoff_initial_ms;
    for (int attempt = 1; attempt <= std::max(1, config_.retry.max_attempts); ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms = static_cast<int>(backoff_ms * std::max(1.0, config_.retry.backoff_factor));
      }
      const HttpResponse resp = post_(url, config_.api_key, payload);
      if (!resp.transport_ok) {
        last_failure = "transport failure";
        continue;
      }
      if (resp.status == 429 || resp.status >= 500) {
        last_failure = "status " + std::to_string(resp.status);
        continue;
      }
      if (resp.status != 200) {
        throw BackendError("chat completion failed with status " + std::to_string(resp.status) +
                           ": " + resp.body.substr(0, 200));
      }
      return parse_completion(resp.body, prompt_chars);
    }
    throw TransportError("chat completion failed after " +
                         std::to_string(std::max(1, config_.retry.max_attempts)) +
                         " attempts; last error: " + last_failure);
  }

 private:
  // Counting-semaphore style admission without <semaphore> so the in-flight
  // bound is adjustable at runtime from config.
  struct Admission {
    explicit Admission(HttpChatBackend& b) : backend(b) {
      std::unique_lock lock(b.slots_mutex_);
      b.slots_cv_.wait(lock, [&] { return b.slots_used_ < std::max(1, b.config_.max_in_flight); });
      ++b.slots_used_;
    }
    ~Admission() {
      {
        std::lock_guard lock(backend.slots_mutex_);
        --backend.slots_used_;
      }
      backend.slots_cv_.notify_one();
    }
    HttpChatBackend& backend;
  };

  Completion parse_completion(const std::string& body, long long prompt_chars) const {
    try {
      const Json j = Json::parse(body);
      Completion c;
      c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage") && j["usage"].contains("prompt_tokens") &&
          j["usage"].contains("completion_tokens")) {
        c.usage.prompt_tokens = j["usage"]["prompt_tokens"].get<long long>();
        c.usage.completion_tokens = j["usage"]["completion_tokens"].get<long long>();
      } else {
        c.usage.prompt_tokens = (prompt_chars + 3) / 4;
        c.usage.completion_tokens = estimate_tokens(c.text);
        c.usage.estimated = true;
      }
      return c;
    } catch (const Json::exception& e) {
      throw BackendError(std::string("malformed completion response: ") + e.what());
    }
  }

  BackendConfig config_;
  HttpPostFn post_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int slots_used_ = 0;
};

inline std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  if (config.kind == "scripted") {
    if (config.transcript_path.empty()) {
      throw ConfigError("scripted backend requires transcript_path");
    }
    return std::make_unique<ScriptedBackend>(config.transcript_path);
  }
  if (config.kind == "http") return std::make_unique<HttpChatBackend>(config);
  throw ConfigError("unknown backend kind '" + config.kind + "'");
}

}  // namespace copb
