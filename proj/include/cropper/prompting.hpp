#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cropper/dataset.hpp"
#include "cropper/geometry.hpp"
#include "cropper/image_io.hpp"

namespace cropper {

// Label attached to a retrieved in-context example, already converted to the
// task's prompt coordinate space.
struct IclLabel {
  CropBox box;
  std::optional<double> mos;  // free-form only
};

struct IclExample {
  const AnnotatedImage* image = nullptr;
  ImageBytes bytes;  // encoded image content sent in the prompt
  std::vector<IclLabel> labels;
  double similarity = 0;
  std::optional<std::pair<double, double>> mask_center_unit;  // subject-aware
  double crop_ratio = 0;                                      // ratio-aware
};

struct PromptPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  std::string image_id;
  ImageBytes image;

  static PromptPart make_text(std::string t);
  static PromptPart make_image(std::string id, ImageBytes bytes);
};

// Ordered text/image parts plus the bookkeeping the refinement loop needs to
// keep accumulating context in place.
struct PromptBundle {
  std::vector<PromptPart> parts;
  Task task = Task::FreeForm;
  bool zero_shot = false;
  int iteration = 0;  // 0 = initial
  CoordSpace space;   // coordinate space of rendered/parsed tuples
  std::optional<AspectRatio> target_ratio;
  size_t feedback_count = 0;  // scored candidates already embedded in the text

  // Canonical text rendering; image parts appear as {image:<id>}. Golden
  // files compare against this.
  std::string render_text() const;
};

// The coordinate space each task's prompt grammar speaks.
CoordSpace prompt_space(Task task, const CoordSpace& pixel);

struct ParsedCandidate {
  CropBox box;  // prompt coordinate space, clamped and validated
  std::optional<double> predicted_mos;
};

struct ParseResult {
  std::vector<ParsedCandidate> candidates;
  std::vector<std::string> diagnostics;  // dropped tuples
};

// Scored candidate handed back into a refinement prompt.
struct RefinementFeedback {
  CropBox box_px;  // pixel space of the query image
  std::optional<double> predicted_mos;
  std::optional<double> score;  // combined scorer output; absent for ratio task
  ImageBytes crop_bytes;
  std::string image_id;
};

// Builds the per-task initial prompt around the retrieved examples. `r` is the
// number of crops the ratio-aware grammar asks for; the other grammars leave
// the candidate count to the model, as their templates do.
PromptBundle build_initial(const QueryInstance& query, const ImageBytes& query_bytes,
                           const std::vector<IclExample>& examples, int r);

// Example-free prompt for the zero-shot ablation.
PromptBundle build_zero_shot(const QueryInstance& query, const ImageBytes& query_bytes);

// Appends the newly scored candidates (those beyond prior.feedback_count) and
// the task's refinement ask to the accumulated context.
PromptBundle build_refinement(const PromptBundle& prior,
                              const std::vector<RefinementFeedback>& scored,
                              int iteration);

// Scans free text for tuples matching the task grammar (5 reals for free-form,
// 4 otherwise), tolerating prose, whitespace, and code fences. Coordinates are
// clamped into `space` then validated; invalid tuples are dropped with
// diagnostics and exact duplicates are removed keeping the first. Throws
// NoCandidates when nothing survives.
ParseResult parse_response(Task task, const std::string& text, const CoordSpace& space,
                           bool zero_shot = false);

// Serializes candidates into an output-shaped tuple list (round-trip checks
// and refinement text share this formatting).
std::string render_candidates(const std::vector<ParsedCandidate>& candidates,
                              bool with_mos);

std::string format_coord(double v, const CoordSpace& space);
std::string format_score(double score);  // 3 decimals
std::string format_mos(double mos);      // 2 decimals

}  // namespace cropper
