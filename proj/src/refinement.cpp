#include "cropper/refinement.hpp"

#include <algorithm>

#include "cropper/digest.hpp"

namespace cropper {

namespace {

using nlohmann::json;

json box_json(const CropBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

CropBox box_from_json(const json& arr, const CoordSpace& px) {
  return make_box(arr.at(0).get<double>(), arr.at(1).get<double>(),
                  arr.at(2).get<double>(), arr.at(3).get<double>(), px);
}

json candidate_json(const CandidateCrop& c) {
  json j = {{"box", box_json(c.box)},
            {"iteration", c.iteration},
            {"parse_order", c.parse_order}};
  if (c.predicted_mos) j["predicted_mos"] = *c.predicted_mos;
  if (c.breakdown) {
    json s = {{"combined", c.breakdown->combined}};
    if (c.breakdown->aesthetic) s["aesthetic"] = *c.breakdown->aesthetic;
    if (c.breakdown->area) s["area"] = *c.breakdown->area;
    if (c.breakdown->content) s["content"] = *c.breakdown->content;
    if (c.breakdown->diagnostic) s["diagnostic"] = *c.breakdown->diagnostic;
    j["scores"] = s;
  }
  return j;
}

CandidateCrop candidate_from_json(const json& j, const CoordSpace& px) {
  CandidateCrop c;
  c.box = box_from_json(j.at("box"), px);
  c.iteration = j.at("iteration").get<int>();
  c.parse_order = j.at("parse_order").get<int>();
  if (j.contains("predicted_mos")) c.predicted_mos = j.at("predicted_mos").get<double>();
  if (j.contains("scores")) {
    ScoreBreakdown b;
    const auto& s = j.at("scores");
    b.combined = s.at("combined").get<double>();
    if (s.contains("aesthetic")) b.aesthetic = s.at("aesthetic").get<double>();
    if (s.contains("area")) b.area = s.at("area").get<double>();
    if (s.contains("content")) b.content = s.at("content").get<double>();
    if (s.contains("diagnostic")) b.diagnostic = s.at("diagnostic").get<std::string>();
    c.breakdown = b;
  }
  return c;
}

}  // namespace

std::string selection_name(SelectionStrategy s) {
  return s == SelectionStrategy::FinalIteration ? "final_iteration" : "best_overall";
}

std::string retrieval_name(RetrievalMode m) {
  switch (m) {
    case RetrievalMode::TopS: return "tops";
    case RetrievalMode::Random: return "random";
    case RetrievalMode::ZeroShot: return "zeroshot";
  }
  return "tops";
}

json LoopConfig::to_json() const {
  return {{"s", s},
          {"t", t},
          {"r", r},
          {"l", l},
          {"temperature", temperature},
          {"selection", selection_name(selection)},
          {"scorers",
           {{"aesthetic", scorer.use_aesthetic},
            {"area", scorer.use_area},
            {"content", scorer.use_content}}},
          {"retrieval", retrieval_name(retrieval)},
          {"seed", seed},
          {"model", model_name},
          {"max_output_tokens", max_output_tokens}};
}

LoopConfig LoopConfig::from_json(const json& j) {
  LoopConfig c;
  c.s = j.at("s").get<int>();
  c.t = j.at("t").get<int>();
  c.r = j.at("r").get<int>();
  c.l = j.at("l").get<int>();
  c.temperature = j.at("temperature").get<double>();
  std::string sel = j.at("selection").get<std::string>();
  c.selection = sel == "best_overall" ? SelectionStrategy::BestOverall
                                      : SelectionStrategy::FinalIteration;
  c.scorer.use_aesthetic = j.at("scorers").at("aesthetic").get<bool>();
  c.scorer.use_area = j.at("scorers").at("area").get<bool>();
  c.scorer.use_content = j.at("scorers").at("content").get<bool>();
  std::string ret = j.at("retrieval").get<std::string>();
  c.retrieval = ret == "random"    ? RetrievalMode::Random
                : ret == "zeroshot" ? RetrievalMode::ZeroShot
                                    : RetrievalMode::TopS;
  c.seed = j.at("seed").get<uint64_t>();
  c.model_name = j.at("model").get<std::string>();
  c.max_output_tokens = j.at("max_output_tokens").get<int>();
  return c;
}

std::string LoopConfig::digest() const { return Sha256::of(to_json().dump()); }

LoopConfig default_config(Task task) {
  LoopConfig c;
  switch (task) {
    case Task::FreeForm:
      c.s = 30;
      c.t = 5;
      c.r = 6;
      c.l = 2;
      c.selection = SelectionStrategy::FinalIteration;
      c.scorer = {true, true, false};
      break;
    case Task::SubjectAware:
      c.s = 30;
      c.t = 5;
      c.r = 5;
      c.l = 2;
      c.selection = SelectionStrategy::FinalIteration;
      c.scorer = {true, true, false};
      break;
    case Task::RatioAware:
      c.s = 10;
      c.t = 1;
      c.r = 6;
      c.l = 2;
      c.selection = SelectionStrategy::BestOverall;
      c.scorer = {false, false, true};
      break;
  }
  c.temperature = 0.05;
  return c;
}

std::vector<CandidateCrop> RefinementTrace::pool() const {
  std::vector<CandidateCrop> out;
  for (const auto& it : iterations)
    out.insert(out.end(), it.parsed.begin(), it.parsed.end());
  return out;
}

json RefinementTrace::to_json() const {
  json iters = json::array();
  for (const auto& it : iterations) {
    json cands = json::array();
    for (const auto& c : it.parsed) cands.push_back(candidate_json(c));
    iters.push_back({{"iteration", it.iteration},
                     {"prompt_digest", it.prompt_digest},
                     {"response", it.response},
                     {"latency_ms", it.latency_ms},
                     {"candidates", cands}});
  }
  json j = {{"version", 1},
            {"query_id", query_id},
            {"task", task_name(task)},
            {"config", config.to_json()},
            {"config_digest", config_digest},
            {"iterations", iters},
            {"selected", candidate_json(selected)}};
  if (task == Task::SubjectAware) j["mask_index"] = mask_index;
  if (target_ratio) j["target_ratio"] = target_ratio->str();
  return j;
}

RefinementTrace RefinementTrace::from_json(const json& j) {
  RefinementTrace t;
  t.query_id = j.at("query_id").get<std::string>();
  t.task = parse_task(j.at("task").get<std::string>());
  t.mask_index = j.value("mask_index", 0);
  if (j.contains("target_ratio"))
    t.target_ratio = AspectRatio::parse(j.at("target_ratio").get<std::string>());
  t.config = LoopConfig::from_json(j.at("config"));
  t.config_digest = j.at("config_digest").get<std::string>();
  // Boxes in traces are pixel-space; the exact dims live with the dataset, so
  // parse against a permissive space and let evaluation re-validate.
  CoordSpace px = CoordSpace::pixel(1 << 20, 1 << 20);
  for (const auto& it : j.at("iterations")) {
    IterationRecord rec;
    rec.iteration = it.at("iteration").get<int>();
    rec.prompt_digest = it.at("prompt_digest").get<std::string>();
    rec.response = it.at("response").get<std::string>();
    rec.latency_ms = it.at("latency_ms").get<double>();
    for (const auto& c : it.at("candidates")) rec.parsed.push_back(candidate_from_json(c, px));
    t.iterations.push_back(std::move(rec));
  }
  t.selected = candidate_from_json(j.at("selected"), px);
  return t;
}

CandidateCrop select_final(const std::vector<CandidateCrop>& pool,
                           SelectionStrategy strategy) {
  if (pool.empty()) throw EmptyPool("select_final on empty pool");
  if (strategy == SelectionStrategy::FinalIteration) {
    int last = 0;
    for (const auto& c : pool) last = std::max(last, c.iteration);
    const CandidateCrop* best = nullptr;
    for (const auto& c : pool) {
      if (c.iteration != last) continue;
      if (!best || c.combined() > best->combined()) best = &c;  // tie -> first parsed
    }
    return *best;
  }
  const CandidateCrop* best = nullptr;
  for (const auto& c : pool) {
    if (!best || c.combined() > best->combined() ||
        (c.combined() == best->combined() && c.iteration > best->iteration)) {
      best = &c;
    }
  }
  return *best;
}

std::vector<CandidateCrop> ranked_candidates(std::vector<CandidateCrop> pool, int k) {
  std::stable_sort(pool.begin(), pool.end(),
                   [](const CandidateCrop& a, const CandidateCrop& b) {
                     if (a.combined() != b.combined()) return a.combined() > b.combined();
                     if (a.iteration != b.iteration) return a.iteration < b.iteration;
                     return a.parse_order < b.parse_order;
                   });
  if (static_cast<int>(pool.size()) > k) pool.resize(k);
  return pool;
}

namespace {

struct RoundOutcome {
  IterationRecord record;
  std::vector<CandidateCrop> scored;  // same candidates with breakdowns attached
};

// One generate -> parse -> score round, with a single silent re-ask on an
// empty parse.
std::optional<RoundOutcome> run_round(const PromptBundle& bundle, int iteration,
                                      const QueryInstance& query,
                                      const ImageBytes& query_bytes,
                                      const Clients& clients, const LoopConfig& config,
                                      bool abort_on_failure) {
  GenParams params{config.temperature, config.max_output_tokens, config.model_name};
  std::string digest = request_digest(bundle, params);
  CoordSpace px = query.image->pixel_space();
  CoordSpace space = prompt_space(query.task, px);
  for (int attempt = 0; attempt < 2; ++attempt) {
    GenResult gen = clients.vlm->generate(bundle, params);
    ParseResult parsed;
    try {
      parsed = parse_response(query.task, gen.text, space, bundle.zero_shot);
    } catch (const NoCandidates&) {
      if (attempt == 0) continue;  // one re-ask with the identical prompt
      if (abort_on_failure)
        throw PipelineError("initial_proposal", "model produced no parseable crops");
      return std::nullopt;  // skip this refinement round
    }
    RoundOutcome out;
    out.record.iteration = iteration;
    out.record.prompt_digest = digest;
    out.record.response = gen.text;
    out.record.latency_ms = gen.latency_ms;

    std::vector<CropBox> boxes;
    std::vector<CandidateCrop> cands;
    for (size_t i = 0; i < parsed.candidates.size(); ++i) {
      CandidateCrop c;
      c.box = convert(parsed.candidates[i].box, px);
      c.predicted_mos = parsed.candidates[i].predicted_mos;
      c.iteration = iteration;
      c.parse_order = static_cast<int>(i);
      boxes.push_back(c.box);
      cands.push_back(std::move(c));
    }
    ScoringInputs inputs{clients.aesthetic, clients.embedder};
    auto breakdowns = score_candidates(config.scorer, inputs, query_bytes, px, boxes);
    for (size_t i = 0; i < cands.size(); ++i) cands[i].breakdown = breakdowns[i];
    out.record.parsed = cands;
    out.scored = std::move(cands);
    return out;
  }
  return std::nullopt;
}

}  // namespace

RunResult run(const QueryInstance& query, const Dataset& dataset,
              const EmbeddingStore* store, const Clients& clients,
              const LoopConfig& config) {
  if (!query.image) throw PipelineError("setup", "query lacks an image");
  if (!clients.vlm) throw PipelineError("setup", "no VLM client configured");

  RefinementTrace trace;
  trace.query_id = query.image->id;
  trace.task = query.task;
  trace.mask_index = query.mask_index;
  if (query.task == Task::RatioAware) trace.target_ratio = query.target_ratio;
  trace.config = config;
  trace.config_digest = config.digest();

  ImageBytes query_bytes = read_file(dataset.resolve(*query.image));

  // Phase 1: example selection.
  PromptBundle bundle;
  try {
    if (config.retrieval == RetrievalMode::ZeroShot) {
      bundle = build_zero_shot(query, query_bytes);
    } else {
      std::vector<IclExample> examples;
      if (config.retrieval == RetrievalMode::Random) {
        examples = select_random(query, dataset, config.s, config.seed, config.t);
      } else {
        if (!store || !clients.embedder)
          throw InsufficientData("top-s retrieval needs a store and embedder");
        Embedding qe = clients.embedder->embed(query_bytes);
        switch (query.task) {
          case Task::FreeForm:
            examples = select_freeform(query, *store, dataset, qe, config.s, config.t);
            break;
          case Task::SubjectAware:
            examples = select_subject(query, *store, dataset, qe, config.s);
            break;
          case Task::RatioAware:
            examples = select_ratio(query, *store, dataset, qe, config.s);
            break;
        }
      }
      load_example_bytes(dataset, examples);
      bundle = build_initial(query, query_bytes, examples, config.r);
    }
  } catch (const Error& e) {
    throw PipelineError("retrieval", e.what());
  }

  // Phase 2-3: initial proposal + scoring.
  std::vector<CandidateCrop> pool;
  auto initial = run_round(bundle, 0, query, query_bytes, clients, config,
                           /*abort_on_failure=*/true);
  trace.iterations.push_back(initial->record);
  pool = initial->scored;

  // Phase 4: refinement rounds.
  for (int k = 1; k <= config.l; ++k) {
    std::vector<RefinementFeedback> feedback;
    feedback.reserve(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) {
      const auto& c = pool[i];
      RefinementFeedback fb;
      fb.box_px = c.box;
      fb.predicted_mos = c.predicted_mos;
      if (query.task != Task::RatioAware) fb.score = c.combined();
      fb.crop_bytes = extract_crop(query_bytes, c.box);
      fb.image_id = "crop-" + std::to_string(c.iteration) + "-" +
                    std::to_string(c.parse_order);
      feedback.push_back(std::move(fb));
    }
    bundle = build_refinement(bundle, feedback, k);
    auto round = run_round(bundle, k, query, query_bytes, clients, config,
                           /*abort_on_failure=*/false);
    if (!round) continue;  // second failure in a refinement round skips it
    trace.iterations.push_back(round->record);
    pool.insert(pool.end(), round->scored.begin(), round->scored.end());
  }

  // Phase 5: final selection.
  trace.selected = select_final(pool, config.selection);
  return {trace.selected, trace};
}

}  // namespace cropper
