#include "cropper/vlm_client.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cropper/digest.hpp"

namespace cropper {

namespace {

using nlohmann::json;

std::string b64_encode(const ImageBytes& data) {
  static const char* table =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    unsigned v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
  }
  if (i + 1 == data.size()) {
    unsigned v = data[i] << 16;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    unsigned v = (data[i] << 16) | (data[i + 1] << 8);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += "=";
  }
  return out;
}

std::string canonical_params(const GenParams& p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", p.temperature);
  return std::string("model=") + p.model_name + ";temperature=" + buf +
         ";max_tokens=" + std::to_string(p.max_output_tokens);
}

}  // namespace

std::string request_digest(const PromptBundle& bundle, const GenParams& params) {
  Sha256 h;
  h.update(canonical_params(params) + "\n");
  for (const auto& part : bundle.parts) {
    if (part.kind == PromptPart::Kind::Text) {
      h.update("T:" + std::to_string(part.text.size()) + ":");
      h.update(part.text);
    } else {
      h.update("I:");
      h.update(pixel_digest(part.image));
    }
  }
  return h.hex();
}

std::string envelope_json(const PromptBundle& bundle, const GenParams& params) {
  json parts = json::array();
  for (const auto& part : bundle.parts) {
    if (part.kind == PromptPart::Kind::Text)
      parts.push_back({{"text", part.text}});
    else
      parts.push_back({{"image_b64", b64_encode(part.image)}});
  }
  json envelope = {{"model", params.model_name},
                   {"temperature", params.temperature},
                   {"max_tokens", params.max_output_tokens},
                   {"parts", parts}};
  return envelope.dump();
}

RateLimiter::RateLimiter(int max_per_window, std::chrono::milliseconds window)
    : max_(max_per_window), window_(window) {}

void RateLimiter::acquire() {
  using clock = std::chrono::steady_clock;
  std::unique_lock lock(mu_);
  for (;;) {
    auto now = clock::now();
    while (!recent_.empty() && now - recent_.front() >= window_) recent_.pop_front();
    if (static_cast<int>(recent_.size()) < max_) {
      recent_.push_back(now);
      return;
    }
    auto wait = window_ - (now - recent_.front());
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

LiveVlmClient::LiveVlmClient(std::string endpoint, std::string api_key,
                             std::shared_ptr<RateLimiter> limiter, RetryPolicy retry)
    : api_key_(std::move(api_key)), limiter_(std::move(limiter)), retry_(retry) {
  auto scheme_end = endpoint.find("://");
  std::string rest = scheme_end == std::string::npos ? endpoint
                                                     : endpoint.substr(scheme_end + 3);
  auto slash = rest.find('/');
  host_ = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
}

std::unique_ptr<LiveVlmClient> LiveVlmClient::from_env() {
  const char* endpoint = std::getenv("VLM_ENDPOINT");
  if (!endpoint) throw AuthError("VLM_ENDPOINT not set");
  const char* key = std::getenv("VLM_API_KEY");
  return std::make_unique<LiveVlmClient>(endpoint, key ? key : "",
                                         std::make_shared<RateLimiter>());
}

GenResult LiveVlmClient::generate(const PromptBundle& bundle, const GenParams& params) {
  std::string body = envelope_json(bundle, params);
  auto delay = retry_.base_delay;
  std::string last_error;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(delay.count() * retry_.factor));
    }
    if (limiter_) limiter_->acquire();
    httplib::Client cli(host_);
    cli.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto t0 = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, headers, body, "application/json");
    auto ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    if (!res) {
      last_error = "transport/timeout";
      continue;  // transient
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint rejected credentials (" + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderUnavailable("endpoint returned status " + std::to_string(res->status));
    try {
      json reply = json::parse(res->body);
      return {reply.at("text").get<std::string>(), ms};
    } catch (const json::exception& e) {
      throw ProviderUnavailable(std::string("malformed endpoint reply: ") + e.what());
    }
  }
  if (last_error.find("429") != std::string::npos)
    throw RateLimited("retry budget exhausted: " + last_error);
  throw Timeout("retry budget exhausted: " + last_error);
}

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  ReplayStore store;
  std::ifstream in(path);
  if (!in) throw StorageError("cannot open replay store " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    store.entries_[rec.at("digest").get<std::string>()] = {
        rec.at("response").get<std::string>(), rec.value("latency_ms", 0.0)};
  }
  return store;
}

void ReplayStore::append(const std::filesystem::path& path, const std::string& digest,
                         const std::string& response, double latency_ms) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw StorageError("cannot append to replay store " + path.string());
  json rec = {{"digest", digest},
              {"response", response},
              {"latency_ms", latency_ms},
              {"timestamp",
               std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()}};
  out << rec.dump() << "\n";
  entries_[digest] = {response, latency_ms};
}

ReplayClient::ReplayClient(const std::filesystem::path& store_path)
    : store_(ReplayStore::load(store_path)) {}

GenResult ReplayClient::generate(const PromptBundle& bundle, const GenParams& params) {
  std::string digest = request_digest(bundle, params);
  auto it = store_.entries().find(digest);
  if (it == store_.entries().end())
    throw ReplayMiss("no recorded response for digest " + digest);
  ++hits_;
  return {it->second.first, it->second.second};
}

RecordingClient::RecordingClient(VlmClient& inner, std::filesystem::path store_path)
    : inner_(inner), store_path_(std::move(store_path)) {
  if (std::filesystem::exists(store_path_)) store_ = ReplayStore::load(store_path_);
}

GenResult RecordingClient::generate(const PromptBundle& bundle, const GenParams& params) {
  std::string digest = request_digest(bundle, params);
  {
    std::scoped_lock lock(mu_);
    auto it = store_.entries().find(digest);
    if (it != store_.entries().end()) return {it->second.first, it->second.second};
  }
  GenResult result = inner_.generate(bundle, params);
  std::scoped_lock lock(mu_);
  store_.append(store_path_, digest, result.text, result.latency_ms);
  return result;
}

ScriptedVlmClient::ScriptedVlmClient(std::string fixed_response)
    : script_([text = std::move(fixed_response)](const PromptBundle&, const GenParams&) {
        return text;
      }) {}

GenResult ScriptedVlmClient::generate(const PromptBundle& bundle, const GenParams& params) {
  return {script_(bundle, params), 0.0};
}

}  // namespace cropper
