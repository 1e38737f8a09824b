#include "cropper/prompting.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace cropper {

namespace {

const char* kFreeHeader =
    "Localize the aesthetic part of the image. (s,x1,y1,x2,y2) represents the region. "
    "x1 and x2 are the left and right most positions, normalized into 1 to 1000, where "
    "1 is the left and 1000 is the right. y1 and y2 are the top and bottom positions, "
    "normalized into 1 to 1000 where 1 is the top and 1000 is the bottom. s is MOS "
    "score. We provide several images here.\n";

const char* kFreeRefineAsk =
    "Propose similar crop that has high score. The region should be represented by "
    "(s,x1,y1,x2,y2).\n";

const char* kZeroShotHeader =
    "Localize the aesthetic part of the image. (x1,y1,x2,y2) represents the region. "
    "x1 and x2 are the left and right most positions, normalized into 1 to 1000, where "
    "1 is the left and 1000 is the right. y1 and y2 are the top and bottom positions, "
    "normalized into 1 to 1000 where 1 is the top and 1000 is the bottom.\n";

const char* kZeroShotAsk = "Please propose a new region (x1,y1,x2,y2)\n";

const char* kZeroShotRefineAsk =
    "Propose similar crop that has high score. The region should be represented by "
    "(x1,y1,x2,y2).\n";

const char* kSubjectHeader =
    "Find visually appealing crop. Each region is represented by (x1,y1,x2,y2) "
    "coordinates. x1, x2 are the left and right most positions, normalized into 0 to 1, "
    "where 0 is the left and 1 is the right. y1, y2 are the top and bottom positions, "
    "normalized into 0 to 1 where 0 is the top and 1 is the bottom.\n";

const char* kSubjectRefineHeader =
    "Localize aesthetic part of image. The region is represented by (x1,y1,x2,y2). "
    "x1, x2 are the left and right most positions, normalized into 0 to 1, where 0 is "
    "the left and 1 is the right. y1, y2 are the top and bottom positions, normalized "
    "into 0 to 1 where 0 is the top and 1 is the bottom. We provide several images "
    "here.\n";

const char* kSubjectRefineAsk =
    "Propose different crop. The region should be represented by (x1,y1,x2,y2). "
    "Output:\n";

const char* kRatioHeader =
    "Find visually appealing crop. Give the best crop in the form of a crop box and "
    "make sure the crop has certain width:height. Box is a 4-tuple defining the left, "
    "upper, right, and lower pixel coordinate in the form of (x1,y1,x2,y2). Here are "
    "some example images, its size, and crop w:h triplets and their corresponding "
    "crops.\n";

const char* kRatioRefineAsk =
    "Propose a different better crop with the given ratio. Output:\n";

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string format_ratio_value(double r) { return fmt("%.2f", r); }

std::string tuple_text(const CropBox& box, std::optional<double> mos,
                       const CoordSpace& space) {
  std::string out = "(";
  if (mos) out += format_mos(*mos) + ",";
  out += format_coord(box.x1, space) + "," + format_coord(box.y1, space) + "," +
         format_coord(box.x2, space) + "," + format_coord(box.y2, space) + ")";
  return out;
}

std::string ratio_ask(int r) {
  return "Now Give the best crop in the form of a crop box for the following image. "
         "Give " +
         std::to_string(r) + " possible best crops.\n";
}

void append_text(PromptBundle& b, std::string t) {
  b.parts.push_back(PromptPart::make_text(std::move(t)));
}

const PromptPart* find_image(const PromptBundle& b, const std::string& id) {
  for (const auto& p : b.parts)
    if (p.kind == PromptPart::Kind::Image && p.image_id == id) return &p;
  return nullptr;
}

}  // namespace

PromptPart PromptPart::make_text(std::string t) {
  PromptPart p;
  p.kind = Kind::Text;
  p.text = std::move(t);
  return p;
}

PromptPart PromptPart::make_image(std::string id, ImageBytes bytes) {
  PromptPart p;
  p.kind = Kind::Image;
  p.image_id = std::move(id);
  p.image = std::move(bytes);
  return p;
}

std::string PromptBundle::render_text() const {
  std::string out;
  for (const auto& p : parts) {
    if (p.kind == PromptPart::Kind::Text)
      out += p.text;
    else
      out += "{image:" + p.image_id + "}";
  }
  return out;
}

CoordSpace prompt_space(Task task, const CoordSpace& pixel) {
  switch (task) {
    case Task::FreeForm: return CoordSpace::norm1000();
    case Task::SubjectAware: return CoordSpace::unit();
    case Task::RatioAware: return pixel;
  }
  return CoordSpace::norm1000();
}

std::string format_coord(double v, const CoordSpace& space) {
  if (space.kind == CoordSpace::Kind::Unit) return fmt("%.2f", v);
  return std::to_string(static_cast<long long>(std::llround(v)));
}

std::string format_score(double score) { return fmt("%.3f", score); }
std::string format_mos(double mos) { return fmt("%.2f", mos); }

PromptBundle build_initial(const QueryInstance& query, const ImageBytes& query_bytes,
                           const std::vector<IclExample>& examples, int r) {
  if (examples.empty()) throw EmptyExamples("build_initial requires examples");
  if (r < 1) throw EmptyExamples("build_initial requires r >= 1");
  if (!query.image) throw EmptyExamples("query lacks an image");
  PromptBundle b;
  b.task = query.task;
  b.space = prompt_space(query.task, query.image->pixel_space());
  if (query.task == Task::RatioAware) b.target_ratio = query.target_ratio;

  switch (query.task) {
    case Task::FreeForm: {
      append_text(b, kFreeHeader);
      for (const auto& ex : examples) {
        b.parts.push_back(PromptPart::make_image(ex.image->id, ex.bytes));
        std::string line = " ";
        for (size_t i = 0; i < ex.labels.size(); ++i) {
          if (i) line += ", ";
          line += tuple_text(ex.labels[i].box, ex.labels[i].mos, b.space);
        }
        append_text(b, line + "\n");
      }
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, "\n");
      break;
    }
    case Task::SubjectAware: {
      append_text(b, kSubjectHeader);
      for (const auto& ex : examples) {
        if (ex.labels.size() != 1 || !ex.mask_center_unit)
          throw TemplateMismatch("subject example needs one label and a mask center");
        b.parts.push_back(PromptPart::make_image(ex.image->id, ex.bytes));
        auto [cx, cy] = *ex.mask_center_unit;
        append_text(b, " ((" + fmt("%.2f", cx) + ", " + fmt("%.2f", cy) + ")," +
                           format_coord(ex.labels[0].box.x1, b.space) + "," +
                           format_coord(ex.labels[0].box.y1, b.space) + "," +
                           format_coord(ex.labels[0].box.x2, b.space) + "," +
                           format_coord(ex.labels[0].box.y2, b.space) + "),\n");
      }
      const auto& mask = query.image->subject_masks.at(query.mask_index);
      double cx = mask.cx / query.image->width;
      double cy = mask.cy / query.image->height;
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, ", (" + fmt("%.2f", cx) + ", " + fmt("%.2f", cy) + ")\n");
      break;
    }
    case Task::RatioAware: {
      append_text(b, kRatioHeader);
      for (const auto& ex : examples) {
        if (ex.labels.size() != 1)
          throw TemplateMismatch("ratio example needs exactly one label");
        b.parts.push_back(PromptPart::make_image(ex.image->id, ex.bytes));
        append_text(b, ", size (" + std::to_string(ex.image->width) + ", " +
                           std::to_string(ex.image->height) + "), crop ratio (" +
                           format_ratio_value(ex.crop_ratio) + "), output " +
                           tuple_text(ex.labels[0].box, std::nullopt,
                                      ex.image->pixel_space()) +
                           ",\n");
      }
      append_text(b, ratio_ask(r));
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, ", size (" + std::to_string(query.image->width) + ", " +
                         std::to_string(query.image->height) + "), crop ratio (" +
                         format_ratio_value(query.target_ratio.value()) + ")\n");
      break;
    }
  }
  return b;
}

PromptBundle build_zero_shot(const QueryInstance& query, const ImageBytes& query_bytes) {
  if (!query.image) throw EmptyExamples("query lacks an image");
  PromptBundle b;
  b.task = query.task;
  b.zero_shot = true;
  b.space = prompt_space(query.task, query.image->pixel_space());
  if (query.task == Task::RatioAware) b.target_ratio = query.target_ratio;
  switch (query.task) {
    case Task::FreeForm:
      append_text(b, kZeroShotHeader);
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, "\n");
      append_text(b, kZeroShotAsk);
      break;
    case Task::SubjectAware: {
      append_text(b, kSubjectHeader);
      const auto& mask = query.image->subject_masks.at(query.mask_index);
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, ", (" + fmt("%.2f", mask.cx / query.image->width) + ", " +
                         fmt("%.2f", mask.cy / query.image->height) + ")\n");
      append_text(b, "Please propose a new region (x1,y1,x2,y2)\n");
      break;
    }
    case Task::RatioAware:
      append_text(b, kRatioHeader);
      b.parts.push_back(PromptPart::make_image("query", query_bytes));
      append_text(b, ", size (" + std::to_string(query.image->width) + ", " +
                         std::to_string(query.image->height) + "), crop ratio (" +
                         format_ratio_value(query.target_ratio.value()) + ")\n");
      append_text(b, "Please propose a new region (x1,y1,x2,y2)\n");
      break;
  }
  return b;
}

PromptBundle build_refinement(const PromptBundle& prior,
                              const std::vector<RefinementFeedback>& scored,
                              int iteration) {
  if (scored.empty()) throw EmptyCandidates("build_refinement requires scored candidates");
  if (iteration < 1) throw EmptyCandidates("refinement iteration must be >= 1");
  PromptBundle b = prior;
  b.iteration = iteration;
  if (scored.size() < prior.feedback_count)
    throw TemplateMismatch("scored list shrank between refinement rounds");

  bool first_round = prior.iteration == 0;
  if (first_round && b.task == Task::SubjectAware && !b.zero_shot)
    append_text(b, kSubjectRefineHeader);
  if (first_round && b.task == Task::RatioAware && !b.zero_shot) {
    append_text(b, "Example Image: ");
    if (const PromptPart* q = find_image(prior, "query"))
      b.parts.push_back(*q);
    append_text(b, "; Crop ratio: (" +
                       format_ratio_value(b.target_ratio.value().value()) +
                       "); Example output:\n");
  }

  for (size_t i = prior.feedback_count; i < scored.size(); ++i) {
    const auto& fb = scored[i];
    CropBox prompt_box = convert(fb.box_px, b.space);
    b.parts.push_back(PromptPart::make_image(fb.image_id, fb.crop_bytes));
    switch (b.task) {
      case Task::FreeForm: {
        std::optional<double> mos = b.zero_shot ? std::nullopt : fb.predicted_mos;
        std::string line = " " + tuple_text(prompt_box, b.zero_shot ? std::nullopt
                                                                    : std::optional<double>(
                                                                          mos.value_or(0.0)),
                                            b.space);
        line += ", Score is " + format_score(fb.score.value_or(0.0)) + "\n";
        append_text(b, line);
        break;
      }
      case Task::SubjectAware:
        append_text(b, " Output: " + tuple_text(prompt_box, std::nullopt, b.space) + "\n");
        break;
      case Task::RatioAware:
        append_text(b, " " + tuple_text(prompt_box, std::nullopt, b.space) + ",\n");
        break;
    }
  }
  b.feedback_count = scored.size();

  switch (b.task) {
    case Task::FreeForm:
      append_text(b, b.zero_shot ? kZeroShotRefineAsk : kFreeRefineAsk);
      break;
    case Task::SubjectAware:
      append_text(b, kSubjectRefineAsk);
      break;
    case Task::RatioAware:
      append_text(b, kRatioRefineAsk);
      break;
  }
  return b;
}

ParseResult parse_response(Task task, const std::string& text, const CoordSpace& space,
                           bool zero_shot) {
  size_t arity = (task == Task::FreeForm && !zero_shot) ? 5 : 4;
  ParseResult result;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t open = text.find('(', pos);
    if (open == std::string::npos) break;
    // Try to read `arity` comma-separated reals then ')'.
    std::vector<double> nums;
    size_t p = open + 1;
    bool ok = true;
    for (size_t i = 0; i < arity && ok; ++i) {
      while (p < text.size() && (text[p] == ' ' || text[p] == '\t' || text[p] == '\n' ||
                                 text[p] == '\r'))
        ++p;
      const char* start = text.c_str() + p;
      char* end = nullptr;
      errno = 0;
      double v = std::strtod(start, &end);
      if (end == start) {
        ok = false;
        break;
      }
      nums.push_back(v);
      p = static_cast<size_t>(end - text.c_str());
      while (p < text.size() && (text[p] == ' ' || text[p] == '\t' || text[p] == '\n' ||
                                 text[p] == '\r'))
        ++p;
      if (i + 1 < arity) {
        if (p < text.size() && text[p] == ',')
          ++p;
        else
          ok = false;
      }
    }
    if (ok && (p >= text.size() || text[p] != ')')) ok = false;
    if (!ok) {
      pos = open + 1;
      continue;
    }
    std::optional<double> mos;
    size_t coord0 = 0;
    if (arity == 5) {
      mos = nums[0];
      coord0 = 1;
    }
    try {
      CropBox box = clamp_and_validate(nums[coord0], nums[coord0 + 1], nums[coord0 + 2],
                                       nums[coord0 + 3], space);
      if (mos && !std::isfinite(*mos)) throw InvalidBox("non-finite MOS");
      bool dup = false;
      for (const auto& c : result.candidates) {
        if (c.box.x1 == box.x1 && c.box.y1 == box.y1 && c.box.x2 == box.x2 &&
            c.box.y2 == box.y2) {
          dup = true;
          break;
        }
      }
      if (!dup) result.candidates.push_back({box, mos});
    } catch (const Error& e) {
      result.diagnostics.push_back(std::string("dropped tuple at offset ") +
                                   std::to_string(open) + ": " + e.what());
    }
    pos = p + 1;
  }
  if (result.candidates.empty())
    throw NoCandidates("no valid tuples in response (" +
                       std::to_string(result.diagnostics.size()) + " dropped)");
  return result;
}

std::string render_candidates(const std::vector<ParsedCandidate>& candidates,
                              bool with_mos) {
  std::string out;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (i) out += ", ";
    out += tuple_text(candidates[i].box,
                      with_mos ? std::optional<double>(candidates[i].predicted_mos.value_or(0.0))
                               : std::nullopt,
                      candidates[i].box.space);
  }
  return out;
}

}  // namespace cropper
