#include "cropper/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cropper {

namespace {

using nlohmann::json;

std::vector<double> average_ranks(const std::vector<double>& v) {
  size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw DegenerateInput("constant input vector");
  return sxy / std::sqrt(sxx * syy);
}

std::string kn_key(int k, int n) { return std::to_string(k) + "/" + std::to_string(n); }

// The per-task reference crop the selected prediction is judged against.
const CropBox* reference_crop(const RefinementTrace& trace, const AnnotatedImage& img,
                              CropBox& storage) {
  switch (trace.task) {
    case Task::FreeForm: {
      if (img.gt_crops.empty()) return nullptr;
      const ScoredGtCrop* best = &img.gt_crops[0];
      for (const auto& g : img.gt_crops)
        if (g.mos > best->mos) best = &g;
      storage = best->box;
      return &storage;
    }
    case Task::SubjectAware: {
      if (trace.mask_index < 0 ||
          trace.mask_index >= static_cast<int>(img.subject_masks.size()))
        return nullptr;
      storage = img.subject_masks[trace.mask_index].gt_crop;
      return &storage;
    }
    case Task::RatioAware: {
      if (!trace.target_ratio || img.ratio_crops.empty()) return nullptr;
      double target = trace.target_ratio->value();
      const CropBox* best = nullptr;
      double best_delta = std::numeric_limits<double>::infinity();
      for (const auto& [ratio, box] : img.ratio_crops) {
        double d = std::abs(ratio_of(box, img.pixel_space()) - target);
        if (d < best_delta) {
          best_delta = d;
          best = &box;
        }
      }
      if (best) storage = *best;
      return best ? &storage : nullptr;
    }
  }
  return nullptr;
}

}  // namespace

double acc_kn(const std::vector<CropBox>& preds, const std::vector<ScoredGtCrop>& gt,
              int k, int n, double tau, bool fractional) {
  if (gt.empty()) throw EmptyGroundTruth("acc_kn with empty ground truth");
  // top-n gt crops by MOS
  std::vector<const ScoredGtCrop*> by_mos;
  for (const auto& g : gt) by_mos.push_back(&g);
  std::stable_sort(by_mos.begin(), by_mos.end(),
                   [](const ScoredGtCrop* a, const ScoredGtCrop* b) { return a->mos > b->mos; });
  if (static_cast<int>(by_mos.size()) > n) by_mos.resize(n);

  int hits = 0;
  for (int i = 0; i < k; ++i) {
    if (i >= static_cast<int>(preds.size())) break;  // shortfall counts as miss
    for (const auto* g : by_mos) {
      if (iou(preds[i], g->box) >= tau) {
        ++hits;
        break;
      }
    }
  }
  if (fractional) return static_cast<double>(hits) / k;
  return hits == std::min<int>(k, static_cast<int>(preds.size())) && hits == k ? 1.0 : 0.0;
}

double srcc(const std::vector<double>& pred_scores, const std::vector<double>& gt_mos) {
  if (pred_scores.size() != gt_mos.size())
    throw DimensionMismatch("srcc needs equal-length vectors");
  if (pred_scores.size() < 2) throw DegenerateInput("srcc needs >= 2 points");
  return pearson(average_ranks(pred_scores), average_ranks(gt_mos));
}

double pcc(const std::vector<double>& pred_scores, const std::vector<double>& gt_mos) {
  if (pred_scores.size() != gt_mos.size())
    throw DimensionMismatch("pcc needs equal-length vectors");
  if (pred_scores.size() < 2) throw DegenerateInput("pcc needs >= 2 points");
  return pearson(pred_scores, gt_mos);
}

EvalReport evaluate(const std::vector<RefinementTrace>& traces, const Dataset& dataset,
                    const MetricConfig& config) {
  EvalReport report;
  report.config = config;
  int srcc_rows = 0, pcc_rows = 0;
  double srcc_sum = 0, pcc_sum = 0;
  std::map<std::string, double> acc_sums;
  int acc_rows = 0;

  for (const auto& trace : traces) {
    const AnnotatedImage* img = dataset.find(trace.query_id);
    if (!img) {
      report.diagnostics.push_back("trace for unknown image id " + trace.query_id);
      continue;
    }
    if (report.config_digest.empty()) report.config_digest = trace.config_digest;
    CoordSpace px = img->pixel_space();
    CropBox ref_storage;
    const CropBox* ref = reference_crop(trace, *img, ref_storage);
    if (!ref) {
      report.diagnostics.push_back("missing ground truth for " + trace.query_id);
      continue;
    }
    EvalRow row;
    row.id = trace.query_id;
    CropBox selected = make_box(trace.selected.box.x1, trace.selected.box.y1,
                                trace.selected.box.x2, trace.selected.box.y2, px);
    row.iou = iou(selected, *ref);
    row.disp = displacement(selected, *ref, px);

    if (trace.task == Task::FreeForm && !img->gt_crops.empty()) {
      auto ranked = ranked_candidates(trace.pool(), config.rank_top_k);
      std::vector<CropBox> pred_boxes;
      std::vector<double> pred_scores, matched_mos;
      for (const auto& c : ranked) {
        CropBox b = make_box(c.box.x1, c.box.y1, c.box.x2, c.box.y2, px);
        pred_boxes.push_back(b);
        pred_scores.push_back(config.rank_by_predicted_mos && c.predicted_mos
                                  ? *c.predicted_mos
                                  : c.combined());
        // pair each prediction with its max-IoU gt crop
        const ScoredGtCrop* best = &img->gt_crops[0];
        double best_iou = -1;
        for (const auto& g : img->gt_crops) {
          double v = iou(b, g.box);
          if (v > best_iou) {
            best_iou = v;
            best = &g;
          }
        }
        matched_mos.push_back(best->mos);
      }
      for (int k : config.k_values)
        for (int n : config.n_values)
          row.acc[kn_key(k, n)] = acc_kn(pred_boxes, img->gt_crops, k, n, config.tau,
                                         config.fractional_acc);
      ++acc_rows;
      for (const auto& [key, v] : row.acc) acc_sums[key] += v;
      try {
        row.srcc = srcc(pred_scores, matched_mos);
        srcc_sum += *row.srcc;
        ++srcc_rows;
      } catch (const DegenerateInput&) {
        ++report.degenerate_rank_rows;
      }
      try {
        row.pcc = pcc(pred_scores, matched_mos);
        pcc_sum += *row.pcc;
        ++pcc_rows;
      } catch (const DegenerateInput&) {
      }
    }
    report.rows.push_back(std::move(row));
  }

  if (!report.rows.empty()) {
    for (const auto& r : report.rows) {
      report.mean_iou += r.iou;
      report.mean_disp += r.disp;
    }
    report.mean_iou /= report.rows.size();
    report.mean_disp /= report.rows.size();
  }
  for (const auto& [key, sum] : acc_sums) report.acc[key] = sum / acc_rows;
  if (srcc_rows) report.mean_srcc = srcc_sum / srcc_rows;
  if (pcc_rows) report.mean_pcc = pcc_sum / pcc_rows;
  return report;
}

json EvalReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row = {{"id", r.id}, {"iou", r.iou}, {"disp", r.disp}};
    if (!r.acc.empty()) row["acc"] = r.acc;
    if (r.srcc) row["srcc"] = *r.srcc;
    if (r.pcc) row["pcc"] = *r.pcc;
    rows_json.push_back(row);
  }
  json aggregates = {{"mean_iou", mean_iou}, {"mean_disp", mean_disp}};
  if (!acc.empty()) aggregates["acc"] = acc;
  if (mean_srcc) aggregates["mean_srcc"] = *mean_srcc;
  if (mean_pcc) aggregates["mean_pcc"] = *mean_pcc;
  return {{"version", 1},
          {"tau", config.tau},
          {"rank_top_k", config.rank_top_k},
          {"config_digest", config_digest},
          {"degenerate_rank_rows", degenerate_rank_rows},
          {"rows", rows_json},
          {"aggregates", aggregates},
          {"diagnostics", diagnostics}};
}

EvalReport EvalReport::from_json(const json& j) {
  EvalReport r;
  r.config.tau = j.at("tau").get<double>();
  r.config.rank_top_k = j.at("rank_top_k").get<int>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.degenerate_rank_rows = j.at("degenerate_rank_rows").get<int>();
  for (const auto& row : j.at("rows")) {
    EvalRow er;
    er.id = row.at("id").get<std::string>();
    er.iou = row.at("iou").get<double>();
    er.disp = row.at("disp").get<double>();
    if (row.contains("acc"))
      er.acc = row.at("acc").get<std::map<std::string, double>>();
    if (row.contains("srcc")) er.srcc = row.at("srcc").get<double>();
    if (row.contains("pcc")) er.pcc = row.at("pcc").get<double>();
    r.rows.push_back(std::move(er));
  }
  const auto& agg = j.at("aggregates");
  r.mean_iou = agg.at("mean_iou").get<double>();
  r.mean_disp = agg.at("mean_disp").get<double>();
  if (agg.contains("acc")) r.acc = agg.at("acc").get<std::map<std::string, double>>();
  if (agg.contains("mean_srcc")) r.mean_srcc = agg.at("mean_srcc").get<double>();
  if (agg.contains("mean_pcc")) r.mean_pcc = agg.at("mean_pcc").get<double>();
  for (const auto& d : j.at("diagnostics")) r.diagnostics.push_back(d.get<std::string>());
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "config_digest: " << config_digest << "\n";
  out << "tau: " << config.tau << "  images: " << rows.size() << "\n\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s %8s\n", "id", "IoU", "Disp",
                "SRCC", "PCC");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-24s %8.4f %8.4f %8s %8s\n", r.id.c_str(), r.iou,
                  r.disp, r.srcc ? std::to_string(*r.srcc).substr(0, 6).c_str() : "-",
                  r.pcc ? std::to_string(*r.pcc).substr(0, 6).c_str() : "-");
    out << line;
  }
  out << "\n";
  std::snprintf(line, sizeof(line), "mean IoU %.4f  mean Disp %.4f\n", mean_iou,
                mean_disp);
  out << line;
  if (!acc.empty()) {
    out << "Acc:";
    for (const auto& [key, v] : acc) {
      std::snprintf(line, sizeof(line), "  %s=%.4f", key.c_str(), v);
      out << line;
    }
    out << "\n";
  }
  if (mean_srcc) {
    std::snprintf(line, sizeof(line), "mean SRCC %.4f\n", *mean_srcc);
    out << line;
  }
  if (mean_pcc) {
    std::snprintf(line, sizeof(line), "mean PCC %.4f\n", *mean_pcc);
    out << line;
  }
  return out.str();
}

}  // namespace cropper
