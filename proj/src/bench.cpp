#include "cropper/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cropper {

BenchResult run_bench(const Dataset& dataset, const EmbeddingStore* store,
                      const Clients& clients, const BenchOptions& options,
                      const std::filesystem::path& out_dir) {
  BenchResult result;
  result.config_digest = options.loop.digest();
  std::filesystem::path trace_dir;
  if (!out_dir.empty()) {
    trace_dir = out_dir / "traces";
    std::filesystem::create_directories(trace_dir);
  }
  for (const auto& img : dataset.images) {
    QueryInstance query;
    query.image = &img;
    query.task = options.task;
    query.mask_index = options.mask_index;
    query.target_ratio = options.ratio;
    try {
      RunResult run_result = run(query, dataset, store, clients, options.loop);
      if (!trace_dir.empty()) {
        std::ofstream out(trace_dir / (img.id + ".json"));
        out << run_result.trace.to_json().dump(2) << "\n";
      }
      result.traces.push_back(std::move(run_result.trace));
    } catch (const Error& e) {
      ++result.failures;
      result.report.diagnostics.push_back(img.id + ": " + e.what());
    }
  }
  auto diagnostics = result.report.diagnostics;
  result.report = evaluate(result.traces, dataset, options.metrics);
  result.report.config_digest = result.config_digest;
  result.report.diagnostics.insert(result.report.diagnostics.end(), diagnostics.begin(),
                                   diagnostics.end());
  if (!out_dir.empty()) {
    std::ofstream rj(out_dir / "report.json");
    rj << result.report.to_json().dump(2) << "\n";
    std::ofstream rt(out_dir / "report.txt");
    rt << result.report.to_text();
  }
  return result;
}

std::vector<RefinementTrace> load_traces(const std::filesystem::path& run_dir) {
  std::vector<RefinementTrace> traces;
  std::filesystem::path trace_dir = run_dir / "traces";
  if (!std::filesystem::exists(trace_dir))
    throw StorageError("no traces directory under " + run_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(trace_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    traces.push_back(RefinementTrace::from_json(nlohmann::json::parse(in)));
  }
  return traces;
}

std::string report_diff(const EvalReport& a, const EvalReport& b) {
  std::ostringstream out;
  char line[160];
  auto row = [&](const char* name, double va, double vb) {
    std::snprintf(line, sizeof(line), "%-12s %10.4f %10.4f %+10.4f\n", name, va, vb,
                  vb - va);
    out << line;
  };
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s\n", "metric", "A", "B",
                "delta");
  out << line;
  row("mean_iou", a.mean_iou, b.mean_iou);
  row("mean_disp", a.mean_disp, b.mean_disp);
  for (const auto& [key, va] : a.acc) {
    auto it = b.acc.find(key);
    if (it != b.acc.end()) row(("acc " + key).c_str(), va, it->second);
  }
  if (a.mean_srcc && b.mean_srcc) row("mean_srcc", *a.mean_srcc, *b.mean_srcc);
  if (a.mean_pcc && b.mean_pcc) row("mean_pcc", *a.mean_pcc, *b.mean_pcc);
  if (a.config_digest != b.config_digest)
    out << "configs differ: " << a.config_digest << " vs " << b.config_digest << "\n";
  return out.str();
}

}  // namespace cropper
