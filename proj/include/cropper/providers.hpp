#pragma once

#include <memory>
#include <string>

#include "cropper/embedding.hpp"
#include "cropper/scoring.hpp"
#include "cropper/vlm_client.hpp"

namespace cropper {

// Embedding service speaking the shared JSON envelope; response is
// {"embedding":[floats]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string endpoint, std::string api_key,
                        std::shared_ptr<RateLimiter> limiter, RetryPolicy retry = {});
  Embedding embed(const ImageBytes& image) override;

  static std::unique_ptr<HttpEmbeddingProvider> from_env();  // EMBED_ENDPOINT/_API_KEY

 private:
  std::string host_, path_, api_key_;
  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
};

// Aesthetic scorer endpoint: same envelope with role "scorer"; response is
// {"score": float, "range":[lo,hi]}.
class HttpAestheticProvider : public AestheticProvider {
 public:
  HttpAestheticProvider(std::string endpoint, std::string api_key,
                        std::shared_ptr<RateLimiter> limiter, RetryPolicy retry = {});
  double score_native(const AestheticRequest& request) override;
  std::pair<double, double> native_range() const override { return range_; }

 private:
  std::string host_, path_, api_key_;
  std::shared_ptr<RateLimiter> limiter_;
  RetryPolicy retry_;
  std::pair<double, double> range_{0.0, 1.0};
};

}  // namespace cropper
