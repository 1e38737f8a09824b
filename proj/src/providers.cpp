#include "cropper/providers.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace cropper {

namespace {

using nlohmann::json;

void split_endpoint(const std::string& endpoint, std::string& host, std::string& path) {
  auto scheme_end = endpoint.find("://");
  std::string rest =
      scheme_end == std::string::npos ? endpoint : endpoint.substr(scheme_end + 3);
  auto slash = rest.find('/');
  host = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
  path = slash == std::string::npos ? "/" : rest.substr(slash);
}

json post_envelope(const std::string& host, const std::string& path,
                   const std::string& api_key, std::shared_ptr<RateLimiter> limiter,
                   const RetryPolicy& retry, const json& body) {
  auto delay = retry.base_delay;
  std::string last_error;
  for (int attempt = 0; attempt < retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(delay.count() * retry.factor));
    }
    if (limiter) limiter->acquire();
    httplib::Client cli(host);
    cli.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport/timeout";
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint rejected credentials");
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderUnavailable("status " + std::to_string(res->status));
    return json::parse(res->body);
  }
  throw ProviderUnavailable("retry budget exhausted: " + last_error);
}

json image_envelope(const ImageBytes& image, const char* role) {
  PromptBundle b;
  b.parts.push_back(PromptPart::make_image("input", image));
  GenParams params;
  params.model_name = role;
  json envelope = json::parse(envelope_json(b, params));
  envelope["role"] = role;
  return envelope;
}

}  // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string endpoint, std::string api_key,
                                             std::shared_ptr<RateLimiter> limiter,
                                             RetryPolicy retry)
    : api_key_(std::move(api_key)), limiter_(std::move(limiter)), retry_(retry) {
  split_endpoint(endpoint, host_, path_);
}

std::unique_ptr<HttpEmbeddingProvider> HttpEmbeddingProvider::from_env() {
  const char* endpoint = std::getenv("EMBED_ENDPOINT");
  if (!endpoint) throw AuthError("EMBED_ENDPOINT not set");
  const char* key = std::getenv("EMBED_API_KEY");
  return std::make_unique<HttpEmbeddingProvider>(endpoint, key ? key : "",
                                                 std::make_shared<RateLimiter>());
}

Embedding HttpEmbeddingProvider::embed(const ImageBytes& image) {
  json reply = post_envelope(host_, path_, api_key_, limiter_, retry_,
                             image_envelope(image, "embedder"));
  Embedding e;
  try {
    e.vector = reply.at("embedding").get<std::vector<float>>();
  } catch (const json::exception& ex) {
    throw ProviderUnavailable(std::string("malformed embedding reply: ") + ex.what());
  }
  return e;
}

HttpAestheticProvider::HttpAestheticProvider(std::string endpoint, std::string api_key,
                                             std::shared_ptr<RateLimiter> limiter,
                                             RetryPolicy retry)
    : api_key_(std::move(api_key)), limiter_(std::move(limiter)), retry_(retry) {
  split_endpoint(endpoint, host_, path_);
}

double HttpAestheticProvider::score_native(const AestheticRequest& request) {
  if (!request.crop_bytes) throw ProviderUnavailable("aesthetic request lacks crop bytes");
  json reply = post_envelope(host_, path_, api_key_, limiter_, retry_,
                             image_envelope(*request.crop_bytes, "scorer"));
  try {
    if (reply.contains("range"))
      range_ = {reply["range"].at(0).get<double>(), reply["range"].at(1).get<double>()};
    return reply.at("score").get<double>();
  } catch (const json::exception& ex) {
    throw ProviderUnavailable(std::string("malformed scorer reply: ") + ex.what());
  }
}

}  // namespace cropper
