#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cropper/geometry.hpp"
#include "cropper/image_io.hpp"

namespace cropper {

// Ground-truth crop with its mean opinion score.
struct ScoredGtCrop {
  CropBox box;  // pixel space
  double mos = 0;
};

// Subject mask reduced to center + bounding box at ingestion; label selection
// only ever consumes the center.
struct SubjectMask {
  double cx = 0, cy = 0;  // pixels
  CropBox bbox;
  CropBox gt_crop;
};

struct AnnotatedImage {
  std::string id;
  std::filesystem::path image_path;
  int width = 0, height = 0;
  std::vector<ScoredGtCrop> gt_crops;
  std::vector<SubjectMask> subject_masks;
  std::map<AspectRatio, CropBox> ratio_crops;

  CoordSpace pixel_space() const { return CoordSpace::pixel(width, height); }
};

enum class Task { FreeForm, SubjectAware, RatioAware };

std::string task_name(Task t);
Task parse_task(const std::string& name);

struct QueryInstance {
  const AnnotatedImage* image = nullptr;
  Task task = Task::FreeForm;
  int mask_index = 0;        // SubjectAware
  AspectRatio target_ratio;  // RatioAware
};

struct Dataset {
  std::vector<AnnotatedImage> images;
  std::vector<std::string> diagnostics;  // per-record ingestion failures
  std::filesystem::path root;            // image paths resolve against this

  const AnnotatedImage* find(const std::string& id) const;
  std::filesystem::path resolve(const AnnotatedImage& img) const {
    return img.image_path.is_absolute() ? img.image_path : root / img.image_path;
  }
};

// Loads a JSON-lines manifest (one record per image). Invalid records are
// skipped with diagnostics; a manifest yielding zero images throws
// EmptyDataset, and an unreadable/garbled file throws SchemaError.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Parses one manifest record; used by load_dataset and directly by tests.
AnnotatedImage parse_record(const std::string& json_line);

// The t highest-MOS crops, descending, ties broken by ascending crop index.
// Returns all crops when t exceeds the count.
std::vector<ScoredGtCrop> top_mos_crops(const AnnotatedImage& img, int t);

}  // namespace cropper
