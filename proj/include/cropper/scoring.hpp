#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cropper/embedding.hpp"
#include "cropper/geometry.hpp"
#include "cropper/image_io.hpp"

namespace cropper {

struct ScorerConfig {
  bool use_aesthetic = true;
  bool use_area = true;
  bool use_content = false;

  bool any() const { return use_aesthetic || use_area || use_content; }
  std::string label() const;  // e.g. "aesthetic+area"
};

struct ScoreBreakdown {
  std::optional<double> aesthetic;
  std::optional<double> area;
  std::optional<double> content;
  double combined = 0;  // mean of present components
  std::optional<std::string> diagnostic;

  static double combine(const ScoreBreakdown& b);
};

// Request handed to an aesthetic scorer. Wire-backed scorers use the crop
// bytes; test scorers may use the pixel-space box.
struct AestheticRequest {
  const ImageBytes* crop_bytes = nullptr;
  std::optional<CropBox> box_px;
  std::string image_id;
};

class AestheticProvider {
 public:
  virtual ~AestheticProvider() = default;
  virtual double score_native(const AestheticRequest& request) = 0;
  // Declared native range; scores are mapped affinely onto [0,1].
  virtual std::pair<double, double> native_range() const { return {0.0, 1.0}; }
};

// Fixed-score mock for plumbing tests.
class ConstantAestheticProvider : public AestheticProvider {
 public:
  explicit ConstantAestheticProvider(double value = 0.5) : value_(value) {}
  double score_native(const AestheticRequest&) override { return value_; }

 private:
  double value_;
};

// Provider scalar mapped to [0,1] per its declared native range.
double score_aesthetic(AestheticProvider& provider, const AestheticRequest& request);

// (cosine(original, crop) + 1) / 2.
double score_content(EmbeddingProvider& provider, const ImageBytes& original,
                     const ImageBytes& crop);

struct ScoringInputs {
  AestheticProvider* aesthetic = nullptr;
  EmbeddingProvider* embedder = nullptr;
};

// One breakdown per candidate box, order preserved. A failing candidate gets
// combined = 0 and a diagnostic instead of aborting the batch.
std::vector<ScoreBreakdown> score_candidates(const ScorerConfig& config,
                                             const ScoringInputs& inputs,
                                             const ImageBytes& original,
                                             const CoordSpace& image_px,
                                             const std::vector<CropBox>& candidates);

}  // namespace cropper
