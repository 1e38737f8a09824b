#include "cropper/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cropper {

namespace {

// Task-specific label selection for one neighbor. Returns false when the
// neighbor has no usable label for this task.
bool attach_labels(const QueryInstance& query, const AnnotatedImage& neighbor,
                   IclExample& ex, int t, double ratio_tolerance) {
  switch (query.task) {
    case Task::FreeForm: {
      if (neighbor.gt_crops.empty()) return false;
      CoordSpace norm = CoordSpace::norm1000();
      for (const auto& crop : top_mos_crops(neighbor, t)) {
        ex.labels.push_back({convert(crop.box, norm), crop.mos});
      }
      return true;
    }
    case Task::SubjectAware: {
      if (neighbor.subject_masks.empty()) return false;
      const auto& qmask = query.image->subject_masks.at(query.mask_index);
      double qcx = qmask.cx / query.image->width;
      double qcy = qmask.cy / query.image->height;
      size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < neighbor.subject_masks.size(); ++i) {
        const auto& m = neighbor.subject_masks[i];
        double cx = m.cx / neighbor.width;
        double cy = m.cy / neighbor.height;
        double d = std::hypot(cx - qcx, cy - qcy);
        if (d < best_d) {  // strict < keeps the lowest index on ties
          best_d = d;
          best = i;
        }
      }
      const auto& m = neighbor.subject_masks[best];
      ex.labels.push_back({convert(m.gt_crop, CoordSpace::unit()), std::nullopt});
      ex.mask_center_unit = {m.cx / neighbor.width, m.cy / neighbor.height};
      return true;
    }
    case Task::RatioAware: {
      if (neighbor.ratio_crops.empty()) return false;
      double target = query.target_ratio.value();
      const CropBox* best_box = nullptr;
      double best_delta = std::numeric_limits<double>::infinity();
      // map iteration is ordered by ratio value; strict < ties toward the
      // lower sorted key
      for (const auto& [ratio, box] : neighbor.ratio_crops) {
        double actual = ratio_of(box, neighbor.pixel_space());
        double delta = std::abs(actual - target);
        if (delta < best_delta) {
          best_delta = delta;
          best_box = &box;
        }
      }
      if (!best_box || best_delta > ratio_tolerance) return false;
      ex.labels.push_back({*best_box, std::nullopt});
      ex.crop_ratio = ratio_of(*best_box, neighbor.pixel_space());
      return true;
    }
  }
  return false;
}

std::vector<IclExample> select_by_similarity(const QueryInstance& query,
                                             const EmbeddingStore& store,
                                             const Dataset& dataset,
                                             const Embedding& query_embedding, int s,
                                             int t, double ratio_tolerance) {
  if (dataset.images.empty()) throw InsufficientData("empty dataset");
  // Rank the whole store so skipped neighbors can be backfilled.
  std::vector<std::string> exclude = {query.image ? query.image->id : ""};
  auto ranked = store.top_s(query_embedding, static_cast<int>(store.size()) + 1, exclude);
  std::vector<IclExample> out;
  for (const auto& hit : ranked) {
    if (static_cast<int>(out.size()) >= s) break;
    const AnnotatedImage* img = dataset.find(hit.id);
    if (!img) continue;
    IclExample ex;
    ex.image = img;
    ex.similarity = hit.similarity;
    if (attach_labels(query, *img, ex, t, ratio_tolerance)) out.push_back(std::move(ex));
  }
  if (out.empty()) throw InsufficientData("no usable neighbors for task");
  return out;
}

}  // namespace

std::vector<IclExample> select_freeform(const QueryInstance& query,
                                        const EmbeddingStore& store,
                                        const Dataset& dataset,
                                        const Embedding& query_embedding, int s, int t) {
  bool any_mos = std::any_of(dataset.images.begin(), dataset.images.end(),
                             [](const AnnotatedImage& i) { return !i.gt_crops.empty(); });
  if (!any_mos) throw InsufficientData("dataset has no MOS-annotated images");
  return select_by_similarity(query, store, dataset, query_embedding, s, t, 0);
}

std::vector<IclExample> select_subject(const QueryInstance& query,
                                       const EmbeddingStore& store,
                                       const Dataset& dataset,
                                       const Embedding& query_embedding, int s) {
  if (query.image->subject_masks.empty()) throw NoMasks("query has no subject mask");
  return select_by_similarity(query, store, dataset, query_embedding, s, 1, 0);
}

std::vector<IclExample> select_ratio(const QueryInstance& query,
                                     const EmbeddingStore& store, const Dataset& dataset,
                                     const Embedding& query_embedding, int s,
                                     double tolerance) {
  return select_by_similarity(query, store, dataset, query_embedding, s, 1, tolerance);
}

std::vector<IclExample> select_random(const QueryInstance& query, const Dataset& dataset,
                                      int s, uint64_t seed, int t) {
  std::vector<const AnnotatedImage*> pool;
  for (const auto& img : dataset.images) {
    if (query.image && img.id == query.image->id) continue;
    pool.push_back(&img);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<IclExample> out;
  for (const AnnotatedImage* img : pool) {
    if (static_cast<int>(out.size()) >= s) break;
    IclExample ex;
    ex.image = img;
    ex.similarity = 0;
    if (attach_labels(query, *img, ex, t, 0.05)) out.push_back(std::move(ex));
  }
  if (out.empty()) throw InsufficientData("no usable images for random retrieval");
  return out;
}

void load_example_bytes(const Dataset& dataset, std::vector<IclExample>& examples) {
  for (auto& ex : examples) {
    if (ex.bytes.empty()) ex.bytes = read_file(dataset.resolve(*ex.image));
  }
}

}  // namespace cropper
