#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cropper/dataset.hpp"
#include "cropper/embedding.hpp"
#include "cropper/retrieval.hpp"
#include "cropper/scoring.hpp"
#include "cropper/vlm_client.hpp"

namespace cropper {

struct CandidateCrop {
  CropBox box;  // pixel space of the query image
  std::optional<double> predicted_mos;
  std::optional<ScoreBreakdown> breakdown;
  int iteration = 0;  // 0 = initial proposal
  int parse_order = 0;

  double combined() const { return breakdown ? breakdown->combined : 0.0; }
};

enum class SelectionStrategy { FinalIteration, BestOverall };
enum class RetrievalMode { TopS, Random, ZeroShot };

std::string selection_name(SelectionStrategy s);
std::string retrieval_name(RetrievalMode m);

struct LoopConfig {
  int s = 30;           // in-context examples
  int t = 5;            // labels per free-form example
  int r = 6;            // crops requested per round
  int l = 2;            // refinement iterations; 0 disables refinement
  double temperature = 0.05;
  SelectionStrategy selection = SelectionStrategy::FinalIteration;
  ScorerConfig scorer;
  RetrievalMode retrieval = RetrievalMode::TopS;
  uint64_t seed = 0;  // random retrieval
  std::string model_name = "default";
  int max_output_tokens = 1024;

  nlohmann::json to_json() const;
  static LoopConfig from_json(const nlohmann::json& j);
  std::string digest() const;  // config hash echoed in artifacts
};

// Paper defaults per task.
LoopConfig default_config(Task task);

struct IterationRecord {
  int iteration = 0;
  std::string prompt_digest;
  std::string response;
  double latency_ms = 0;
  std::vector<CandidateCrop> parsed;  // candidates contributed by this round
};

struct RefinementTrace {
  std::string query_id;
  Task task = Task::FreeForm;
  int mask_index = 0;
  std::optional<AspectRatio> target_ratio;
  LoopConfig config;
  std::string config_digest;
  std::vector<IterationRecord> iterations;
  CandidateCrop selected;

  std::vector<CandidateCrop> pool() const;  // all candidates across iterations
  nlohmann::json to_json() const;
  static RefinementTrace from_json(const nlohmann::json& j);
};

struct Clients {
  VlmClient* vlm = nullptr;
  EmbeddingProvider* embedder = nullptr;
  AestheticProvider* aesthetic = nullptr;
};

struct RunResult {
  CandidateCrop selected;
  RefinementTrace trace;
};

// Executes the full loop: retrieve examples, propose, score, refine l times,
// select. Failures are wrapped in PipelineError naming the phase.
RunResult run(const QueryInstance& query, const Dataset& dataset,
              const EmbeddingStore* store, const Clients& clients,
              const LoopConfig& config);

// FinalIteration: best combined score among max-iteration candidates.
// BestOverall: global best; ties go to the later iteration, then parse order.
CandidateCrop select_final(const std::vector<CandidateCrop>& pool,
                           SelectionStrategy strategy);

// Top-k by combined score for ranking metrics (default k = 5).
std::vector<CandidateCrop> ranked_candidates(std::vector<CandidateCrop> pool, int k = 5);

}  // namespace cropper
