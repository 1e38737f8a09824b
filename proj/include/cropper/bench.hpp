#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cropper/evaluation.hpp"
#include "cropper/refinement.hpp"

namespace cropper {

// One benchmark run: every query in the dataset through the refinement loop,
// traces written per query, then the metric suite over all of them.
struct BenchResult {
  std::vector<RefinementTrace> traces;
  EvalReport report;
  std::string config_digest;
  int failures = 0;  // queries that raised PipelineError
};

struct BenchOptions {
  Task task = Task::FreeForm;
  LoopConfig loop;
  MetricConfig metrics;
  AspectRatio ratio{16, 9};  // RatioAware
  int mask_index = 0;        // SubjectAware
};

// Runs every image in `dataset` as a query against itself (self-retrieval
// excludes the query id). When `out_dir` is non-empty, writes
// traces/<id>.json, report.json and report.txt under it.
BenchResult run_bench(const Dataset& dataset, const EmbeddingStore* store,
                      const Clients& clients, const BenchOptions& options,
                      const std::filesystem::path& out_dir = {});

// Loads every traces/*.json under a run directory.
std::vector<RefinementTrace> load_traces(const std::filesystem::path& run_dir);

// Plain-text metric deltas between two report.json files.
std::string report_diff(const EvalReport& a, const EvalReport& b);

}  // namespace cropper
