#include "cropper/scoring.hpp"

#include <algorithm>

namespace cropper {

std::string ScorerConfig::label() const {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += "+";
    out += name;
  };
  if (use_aesthetic) add("aesthetic");
  if (use_area) add("area");
  if (use_content) add("content");
  return out.empty() ? "none" : out;
}

double ScoreBreakdown::combine(const ScoreBreakdown& b) {
  double sum = 0;
  int n = 0;
  for (const auto& c : {b.aesthetic, b.area, b.content}) {
    if (c) {
      sum += *c;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

double score_aesthetic(AestheticProvider& provider, const AestheticRequest& request) {
  // Score first: wire providers learn their declared range from the reply.
  double raw = provider.score_native(request);
  auto [lo, hi] = provider.native_range();
  if (!(hi > lo)) throw ProviderUnavailable("aesthetic provider declares empty range");
  return std::clamp((raw - lo) / (hi - lo), 0.0, 1.0);
}

double score_content(EmbeddingProvider& provider, const ImageBytes& original,
                     const ImageBytes& crop) {
  Embedding a = provider.embed(original);
  Embedding b = provider.embed(crop);
  return (cosine(a, b) + 1.0) / 2.0;
}

std::vector<ScoreBreakdown> score_candidates(const ScorerConfig& config,
                                             const ScoringInputs& inputs,
                                             const ImageBytes& original,
                                             const CoordSpace& image_px,
                                             const std::vector<CropBox>& candidates) {
  if (!config.any()) throw ProviderUnavailable("scorer config enables no scorer");
  std::vector<ScoreBreakdown> out;
  out.reserve(candidates.size());
  for (const auto& box : candidates) {
    ScoreBreakdown b;
    try {
      ImageBytes crop_bytes;
      if (config.use_aesthetic || config.use_content)
        crop_bytes = extract_crop(original, box);
      if (config.use_aesthetic) {
        if (!inputs.aesthetic) throw ProviderUnavailable("no aesthetic provider");
        AestheticRequest req;
        req.crop_bytes = &crop_bytes;
        req.box_px = convert(box, image_px);
        b.aesthetic = score_aesthetic(*inputs.aesthetic, req);
      }
      if (config.use_area) b.area = area_fraction(box, image_px);
      if (config.use_content) {
        if (!inputs.embedder) throw ProviderUnavailable("no embedding provider");
        b.content = score_content(*inputs.embedder, original, crop_bytes);
      }
      b.combined = ScoreBreakdown::combine(b);
    } catch (const Error& e) {
      b = ScoreBreakdown{};
      b.combined = 0;
      b.diagnostic = e.what();
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace cropper
