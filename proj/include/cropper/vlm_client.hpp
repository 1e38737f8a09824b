#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "cropper/prompting.hpp"

namespace cropper {

struct GenParams {
  double temperature = 0.05;
  int max_output_tokens = 1024;
  std::string model_name = "default";
};

struct GenResult {
  std::string text;
  double latency_ms = 0;
};

// Content hash of (parts, params). Image parts hash their decoded pixels, so
// re-encoding the same content does not break replay.
std::string request_digest(const PromptBundle& bundle, const GenParams& params);

// JSON-over-HTTP envelope shared by the generation, embedding, and scorer
// endpoints: {"model","temperature","max_tokens","parts":[{"text":...}|{"image_b64":...}]}.
std::string envelope_json(const PromptBundle& bundle, const GenParams& params);

// Sliding-window limiter shared by every live endpoint client.
class RateLimiter {
 public:
  explicit RateLimiter(int max_per_window = 60,
                       std::chrono::milliseconds window = std::chrono::minutes(1));
  void acquire();  // blocks until a slot is free

 private:
  int max_;
  std::chrono::milliseconds window_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> recent_;
};

struct RetryPolicy {
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  int max_attempts = 5;
};

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  virtual GenResult generate(const PromptBundle& bundle, const GenParams& params) = 0;
};

// Live client against VLM_ENDPOINT. Retries with exponential backoff on
// timeouts, 429 and 5xx; fails fast on auth/validation 4xx.
class LiveVlmClient : public VlmClient {
 public:
  LiveVlmClient(std::string endpoint, std::string api_key,
                std::shared_ptr<RateLimiter> limiter, RetryPolicy retry = {});
  GenResult generate(const PromptBundle& bundle, const GenParams& params) override;

  static std::unique_ptr<LiveVlmClient> from_env();  // VLM_ENDPOINT / VLM_API_KEY

 private:
  std::string host_;
  std::string path_;
  std::string api_key_;
  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
};

// Append-only JSON-lines transcript store: one
// {"digest","response","latency_ms","timestamp"} record per request.
class ReplayStore {
 public:
  static ReplayStore load(const std::filesystem::path& path);
  void append(const std::filesystem::path& path, const std::string& digest,
              const std::string& response, double latency_ms);
  const std::map<std::string, std::pair<std::string, double>>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::pair<std::string, double>> entries_;  // digest -> (text, latency)
};

class ReplayClient : public VlmClient {
 public:
  explicit ReplayClient(const std::filesystem::path& store_path);
  GenResult generate(const PromptBundle& bundle, const GenParams& params) override;
  size_t hits() const { return hits_; }

 private:
  ReplayStore store_;
  size_t hits_ = 0;
};

// Wraps another client and records every (digest -> response) pair so the run
// can later be replayed bit-exactly.
class RecordingClient : public VlmClient {
 public:
  RecordingClient(VlmClient& inner, std::filesystem::path store_path);
  GenResult generate(const PromptBundle& bundle, const GenParams& params) override;

 private:
  VlmClient& inner_;
  std::filesystem::path store_path_;
  ReplayStore store_;
  std::mutex mu_;
};

// Programmable mock; the callback sees the full bundle so tests can script
// feedback-dependent behavior.
class ScriptedVlmClient : public VlmClient {
 public:
  using Script = std::function<std::string(const PromptBundle&, const GenParams&)>;
  explicit ScriptedVlmClient(Script script) : script_(std::move(script)) {}
  explicit ScriptedVlmClient(std::string fixed_response);
  GenResult generate(const PromptBundle& bundle, const GenParams& params) override;

 private:
  Script script_;
};

}  // namespace cropper
