#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cropper/dataset.hpp"
#include "cropper/image_io.hpp"

namespace cropper::testing {

// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("cropper-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// An image record with deterministic content and annotations for all three
// tasks. Crops vary with `seed` but always stay in bounds.
inline AnnotatedImage make_annotated(const std::filesystem::path& dir,
                                     const std::string& id, int w, int h,
                                     unsigned seed) {
  AnnotatedImage img;
  img.id = id;
  img.width = w;
  img.height = h;
  img.image_path = dir / (id + ".png");
  ImageBytes bytes = make_test_image(w, h, seed);
  write_file(img.image_path, std::as_bytes(std::span(bytes)));

  CoordSpace px = CoordSpace::pixel(w, h);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> mos(2.0, 9.0);
  for (int i = 0; i < 6; ++i) {
    double x1 = (i % 3) * w / 8.0;
    double y1 = (i % 2) * h / 8.0;
    img.gt_crops.push_back(
        {make_box(x1, y1, x1 + w / 2.0, y1 + h / 2.0, px), mos(rng)});
  }
  SubjectMask m;
  m.cx = w * 0.5;
  m.cy = h * 0.4;
  m.bbox = make_box(w * 0.3, w >= 40 ? h * 0.2 : 0, w * 0.7, h * 0.6, px);
  m.gt_crop = make_box(w * 0.2, h * 0.1, w * 0.8, h * 0.7, px);
  img.subject_masks.push_back(m);
  img.ratio_crops[AspectRatio(16, 9)] =
      make_box(0, 0, w * 0.8, w * 0.8 * 9 / 16 < h ? w * 0.8 * 9 / 16 : h, px);
  img.ratio_crops[AspectRatio(1, 1)] =
      make_box(0, 0, std::min(w, h) * 0.9, std::min(w, h) * 0.9, px);
  return img;
}

inline Dataset make_dataset(const std::filesystem::path& dir, int n, int w = 96,
                            int h = 64) {
  Dataset d;
  d.root = dir;
  for (int i = 0; i < n; ++i)
    d.images.push_back(
        make_annotated(dir, "img" + std::to_string(i), w, h, 100 + i));
  return d;
}

inline nlohmann::json box_json(const CropBox& b) {
  return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

inline nlohmann::json record_json(const AnnotatedImage& img) {
  nlohmann::json j;
  j["id"] = img.id;
  j["image"] = img.image_path.filename().string();
  j["width"] = img.width;
  j["height"] = img.height;
  j["gt_crops"] = nlohmann::json::array();
  for (const auto& c : img.gt_crops)
    j["gt_crops"].push_back({{"box", box_json(c.box)}, {"mos", c.mos}});
  j["subject_masks"] = nlohmann::json::array();
  for (const auto& m : img.subject_masks)
    j["subject_masks"].push_back({{"center", {m.cx, m.cy}},
                                  {"bbox", box_json(m.bbox)},
                                  {"gt_crop", box_json(m.gt_crop)}});
  j["ratio_crops"] = nlohmann::json::object();
  for (const auto& [r, b] : img.ratio_crops) j["ratio_crops"][r.str()] = box_json(b);
  return j;
}

inline std::filesystem::path write_manifest(const Dataset& d,
                                            const std::string& name = "manifest.jsonl") {
  std::filesystem::path p = d.root / name;
  std::ofstream out(p);
  for (const auto& img : d.images) out << record_json(img).dump() << "\n";
  return p;
}

}  // namespace cropper::testing
