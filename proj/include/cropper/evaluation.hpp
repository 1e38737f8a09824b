#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cropper/dataset.hpp"
#include "cropper/refinement.hpp"

namespace cropper {

struct MetricConfig {
  double tau = 0.90;  // IoU threshold for Acc membership
  std::vector<int> k_values = {1, 2, 3, 4};
  std::vector<int> n_values = {5, 10};
  int rank_top_k = 5;  // best-k candidates feed SRCC/PCC
  bool fractional_acc = true;
  bool rank_by_predicted_mos = false;  // default: scorer combined score
};

// Per-image Acc_{K/N}: fraction of the top-k predictions overlapping (IoU >=
// tau) some top-n ground-truth crop; a shortfall of predictions counts as
// misses.
double acc_kn(const std::vector<CropBox>& preds, const std::vector<ScoredGtCrop>& gt,
              int k, int n, double tau, bool fractional = true);

// Spearman rank correlation with average-rank tie handling. Throws
// DegenerateInput when either vector is constant.
double srcc(const std::vector<double>& pred_scores, const std::vector<double>& gt_mos);

// Pearson product-moment correlation. Throws DegenerateInput on zero variance.
double pcc(const std::vector<double>& pred_scores, const std::vector<double>& gt_mos);

struct EvalRow {
  std::string id;
  double iou = 0;
  double disp = 0;
  std::map<std::string, double> acc;  // "K/N" -> per-image value
  std::optional<double> srcc;
  std::optional<double> pcc;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_iou = 0;
  double mean_disp = 0;
  std::map<std::string, double> acc;  // dataset-level Acc_{K/N}
  std::optional<double> mean_srcc;
  std::optional<double> mean_pcc;
  int degenerate_rank_rows = 0;  // excluded from SRCC/PCC means
  std::vector<std::string> diagnostics;
  MetricConfig config;
  std::string config_digest;  // run config echo

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_text() const;  // aligned-column human rendering
};

// Computes the full metric suite over traces against ground truth. The
// reference crop is per task: free-form uses the MOS-argmax gt crop, subject
// the query mask's gt crop, ratio the nearest-ratio gt crop.
EvalReport evaluate(const std::vector<RefinementTrace>& traces, const Dataset& dataset,
                    const MetricConfig& config = {});

}  // namespace cropper
