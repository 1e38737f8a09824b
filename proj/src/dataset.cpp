#include "cropper/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

namespace cropper {

namespace {

using nlohmann::json;

CropBox box_from_json(const json& arr, const CoordSpace& px) {
  if (!arr.is_array() || arr.size() != 4) throw SchemaError("box must be [x1,y1,x2,y2]");
  return make_box(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
                  arr[3].get<double>(), px);
}

}  // namespace

std::string task_name(Task t) {
  switch (t) {
    case Task::FreeForm: return "free";
    case Task::SubjectAware: return "subject";
    case Task::RatioAware: return "ratio";
  }
  return "free";
}

Task parse_task(const std::string& name) {
  if (name == "free") return Task::FreeForm;
  if (name == "subject") return Task::SubjectAware;
  if (name == "ratio") return Task::RatioAware;
  throw SchemaError("unknown task: " + name);
}

const AnnotatedImage* Dataset::find(const std::string& id) const {
  for (const auto& img : images)
    if (img.id == id) return &img;
  return nullptr;
}

namespace {

AnnotatedImage parse_record_impl(const std::string& json_line) {
  json rec = json::parse(json_line);
  AnnotatedImage img;
  img.id = rec.at("id").get<std::string>();
  img.image_path = rec.at("image").get<std::string>();
  img.width = rec.at("width").get<int>();
  img.height = rec.at("height").get<int>();
  if (img.width < 32 || img.height < 32)
    throw SchemaError("image smaller than 32px: " + img.id);
  CoordSpace px = CoordSpace::pixel(img.width, img.height);
  for (const auto& c : rec.value("gt_crops", json::array())) {
    ScoredGtCrop g;
    g.box = box_from_json(c.at("box"), px);
    g.mos = c.at("mos").get<double>();
    if (!std::isfinite(g.mos)) throw SchemaError("non-finite mos in " + img.id);
    img.gt_crops.push_back(g);
  }
  for (const auto& m : rec.value("subject_masks", json::array())) {
    SubjectMask sm;
    const auto& center = m.at("center");
    sm.cx = center.at(0).get<double>();
    sm.cy = center.at(1).get<double>();
    sm.bbox = box_from_json(m.at("bbox"), px);
    sm.gt_crop = box_from_json(m.at("gt_crop"), px);
    if (sm.cx < sm.bbox.x1 || sm.cx > sm.bbox.x2 || sm.cy < sm.bbox.y1 ||
        sm.cy > sm.bbox.y2)
      throw SchemaError("mask center outside its bbox in " + img.id);
    img.subject_masks.push_back(sm);
  }
  if (rec.contains("ratio_crops")) {
    for (const auto& [key, val] : rec.at("ratio_crops").items()) {
      img.ratio_crops.emplace(AspectRatio::parse(key), box_from_json(val, px));
    }
  }
  return img;
}

}  // namespace

AnnotatedImage parse_record(const std::string& json_line) {
  try {
    return parse_record_impl(json_line);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  } catch (const json::exception& e) {
    throw SchemaError(e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw SchemaError("cannot open manifest " + manifest_path.string());
  Dataset ds;
  ds.root = manifest_path.parent_path();
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      AnnotatedImage img = parse_record(line);
      if (!seen.insert(img.id).second)
        throw SchemaError("duplicate id: " + img.id);
      ds.images.push_back(std::move(img));
    } catch (const Error& e) {
      ds.diagnostics.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (ds.images.empty()) throw EmptyDataset("manifest yielded no valid images");
  return ds;
}

std::vector<ScoredGtCrop> top_mos_crops(const AnnotatedImage& img, int t) {
  if (t < 1) throw SchemaError("top_mos_crops requires t >= 1");
  std::vector<size_t> idx(img.gt_crops.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return img.gt_crops[a].mos > img.gt_crops[b].mos;
  });
  std::vector<ScoredGtCrop> out;
  size_t n = std::min<size_t>(static_cast<size_t>(t), idx.size());
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(img.gt_crops[idx[i]]);
  return out;
}

}  // namespace cropper
