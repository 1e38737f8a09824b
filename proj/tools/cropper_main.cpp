#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cropper/bench.hpp"
#include "cropper/providers.hpp"

namespace {

using namespace cropper;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;
constexpr int kExitProvider = 3;

struct CommonFlags {
  std::string dataset_path;
  std::string cache_path;
  std::string mode = "mock";
  std::string store_path;
  std::string out_dir = "runs";
  std::string task = "free";
  std::string ratio = "16:9";
  int mask_index = 0;
  std::string retrieval = "tops";
  bool no_refine = false;
  std::string scorers;  // comma list; empty = task default
  int s = -1, t = -1, r = -1, l = -1;
  double temperature = -1;
  double tau = 0.90;
  uint64_t seed = 0;
  bool snap = false;
  std::vector<std::string> mock_responses;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--dataset", f.dataset_path, "JSON-lines dataset manifest");
  app->add_option("--cache", f.cache_path, "embedding cache path");
  app->add_option("--mode", f.mode, "client mode")
      ->check(CLI::IsMember({"live", "record", "replay", "mock"}));
  app->add_option("--store", f.store_path, "record/replay transcript store");
  app->add_option("--out", f.out_dir, "output directory");
  app->add_option("--task", f.task, "cropping task")
      ->check(CLI::IsMember({"free", "subject", "ratio"}));
  app->add_option("--ratio", f.ratio, "target aspect ratio W:H");
  app->add_option("--mask-index", f.mask_index, "query subject mask index");
  app->add_option("--retrieval", f.retrieval, "example retrieval mode")
      ->check(CLI::IsMember({"tops", "random", "zeroshot"}));
  app->add_flag("--no-refine", f.no_refine, "disable iterative refinement (l=0)");
  app->add_option("--scorers", f.scorers,
                  "comma list of scorers (aesthetic,area,content)");
  app->add_option("--s", f.s, "in-context examples");
  app->add_option("--t", f.t, "labels per free-form example");
  app->add_option("--r", f.r, "crops per round");
  app->add_option("--l", f.l, "refinement iterations");
  app->add_option("--temp", f.temperature, "generation temperature");
  app->add_option("--tau", f.tau, "IoU threshold for Acc");
  app->add_option("--seed", f.seed, "seed for random retrieval");
  app->add_flag("--snap", f.snap, "snap ratio-task output to the exact ratio");
  app->add_option("--mock-response", f.mock_responses,
                  "scripted mock response (repeatable; cycled per call)");
}

ScorerConfig parse_scorers(const std::string& list) {
  ScorerConfig cfg{false, false, false};
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos
                                                                   : comma - pos);
    if (item == "aesthetic" || item == "a" || item == "vila")
      cfg.use_aesthetic = true;
    else if (item == "area" || item == "r")
      cfg.use_area = true;
    else if (item == "content" || item == "c" || item == "clip")
      cfg.use_content = true;
    else if (!item.empty())
      throw CLI::ValidationError("--scorers", "unknown scorer: " + item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cfg;
}

BenchOptions make_options(const CommonFlags& f) {
  BenchOptions opt;
  opt.task = parse_task(f.task);
  opt.loop = default_config(opt.task);
  if (f.s > 0) opt.loop.s = f.s;
  if (f.t > 0) opt.loop.t = f.t;
  if (f.r > 0) opt.loop.r = f.r;
  if (f.l >= 0) opt.loop.l = f.l;
  if (f.no_refine) opt.loop.l = 0;
  if (f.temperature >= 0) opt.loop.temperature = f.temperature;
  if (!f.scorers.empty()) opt.loop.scorer = parse_scorers(f.scorers);
  opt.loop.seed = f.seed;
  opt.loop.retrieval = f.retrieval == "random"     ? RetrievalMode::Random
                       : f.retrieval == "zeroshot" ? RetrievalMode::ZeroShot
                                                   : RetrievalMode::TopS;
  opt.metrics.tau = f.tau;
  opt.ratio = AspectRatio::parse(f.ratio);
  opt.mask_index = f.mask_index;
  return opt;
}

// Owns whichever client/provider stack the --mode selects.
struct ClientStack {
  std::unique_ptr<VlmClient> live;
  std::unique_ptr<VlmClient> vlm;
  std::unique_ptr<EmbeddingProvider> embed_backend;
  std::unique_ptr<CachedEmbeddingProvider> embed_cache;
  std::unique_ptr<AestheticProvider> aesthetic;
  Clients clients;
};

ClientStack make_clients(const CommonFlags& f) {
  ClientStack stack;
  if (f.mode == "mock") {
    if (f.mock_responses.empty()) {
      stack.vlm = std::make_unique<ScriptedVlmClient>(
          [](const PromptBundle& b, const GenParams&) {
            // Full-frame proposal in the bundle's own coordinate space.
            switch (b.space.kind) {
              case CoordSpace::Kind::Norm1000:
                return std::string(b.task == Task::FreeForm && !b.zero_shot
                                       ? "(3.00,1,1,1000,1000)"
                                       : "(1,1,1000,1000)");
              case CoordSpace::Kind::Unit:
                return std::string("(0.00,0.00,1.00,1.00)");
              case CoordSpace::Kind::Pixel:
                return "(0,0," + std::to_string(b.space.width) + "," +
                       std::to_string(b.space.height) + ")";
            }
            return std::string();
          });
    } else {
      auto responses = std::make_shared<std::vector<std::string>>(f.mock_responses);
      auto counter = std::make_shared<size_t>(0);
      stack.vlm = std::make_unique<ScriptedVlmClient>(
          [responses, counter](const PromptBundle&, const GenParams&) {
            return (*responses)[(*counter)++ % responses->size()];
          });
    }
    stack.embed_backend = std::make_unique<HashEmbeddingProvider>(16);
    stack.aesthetic = std::make_unique<ConstantAestheticProvider>(0.5);
  } else if (f.mode == "replay") {
    if (f.store_path.empty() || !std::filesystem::exists(f.store_path))
      throw CLI::ValidationError("--store", "replay mode requires an existing store");
    stack.vlm = std::make_unique<ReplayClient>(f.store_path);
    stack.embed_backend = nullptr;  // cache-only
    stack.aesthetic = std::make_unique<ConstantAestheticProvider>(0.5);
  } else {
    auto limiter = std::make_shared<RateLimiter>();
    stack.live = LiveVlmClient::from_env();
    if (f.mode == "record") {
      if (f.store_path.empty())
        throw CLI::ValidationError("--store", "record mode requires a store path");
      stack.vlm = std::make_unique<RecordingClient>(*stack.live, f.store_path);
    } else {
      stack.vlm = std::move(stack.live);
    }
    stack.embed_backend = HttpEmbeddingProvider::from_env();
    const char* score_ep = std::getenv("SCORER_ENDPOINT");
    if (score_ep)
      stack.aesthetic = std::make_unique<HttpAestheticProvider>(
          score_ep, std::getenv("SCORER_API_KEY") ? std::getenv("SCORER_API_KEY") : "",
          limiter);
    else
      stack.aesthetic = std::make_unique<ConstantAestheticProvider>(0.5);
  }
  if (!f.cache_path.empty()) {
    stack.embed_cache = std::make_unique<CachedEmbeddingProvider>(
        f.cache_path, stack.embed_backend.get());
    stack.clients.embedder = stack.embed_cache.get();
  } else {
    stack.clients.embedder = stack.embed_backend.get();
  }
  stack.clients.vlm = stack.vlm.get();
  stack.clients.aesthetic = stack.aesthetic.get();
  return stack;
}

EmbeddingStore build_store(const Dataset& dataset, EmbeddingProvider& provider) {
  EmbeddingStore store;
  for (const auto& img : dataset.images) {
    Embedding e = provider.embed(read_file(dataset.resolve(img)));
    e.source_id = img.id;
    store.insert(std::move(e));
  }
  return store;
}

int cmd_embed(const CommonFlags& f) {
  if (f.dataset_path.empty() || f.cache_path.empty()) {
    std::cerr << "embed requires --dataset and --cache\n";
    return kExitUsage;
  }
  Dataset dataset = load_dataset(f.dataset_path);
  ClientStack stack = make_clients(f);
  CachedEmbeddingProvider cache(f.cache_path, stack.embed_backend.get());
  int failures = 0;
  for (const auto& img : dataset.images) {
    try {
      cache.embed(read_file(dataset.resolve(img)));
    } catch (const Error& e) {
      std::cerr << img.id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  cache.flush();
  std::cout << "cached " << (dataset.images.size() - failures) << "/"
            << dataset.images.size() << " embeddings (" << cache.misses()
            << " provider calls) -> " << f.cache_path << "\n";
  for (const auto& d : dataset.diagnostics) std::cerr << "dataset: " << d << "\n";
  if (failures) return kExitPartial;
  return dataset.diagnostics.empty() ? kExitOk : kExitPartial;
}

CropBox snap_to_ratio(const CropBox& box, const AspectRatio& ratio, const CoordSpace& px) {
  double target = ratio.value();
  double w = box.width(), h = box.height();
  double cx = (box.x1 + box.x2) / 2, cy = (box.y1 + box.y2) / 2;
  if (w / h > target)
    w = h * target;  // too wide: shrink width
  else
    h = w / target;
  double x1 = std::max(0.0, cx - w / 2), y1 = std::max(0.0, cy - h / 2);
  return make_box(x1, y1, std::min<double>(px.width, x1 + w),
                  std::min<double>(px.height, y1 + h), px);
}

int cmd_crop(const std::string& image_path, const CommonFlags& f) {
  ImageBytes bytes = read_file(image_path);
  ImageDims dims = decode_dims(bytes);

  Dataset dataset;
  bool have_dataset = !f.dataset_path.empty();
  if (have_dataset) dataset = load_dataset(f.dataset_path);

  // Register the query as a synthetic record so the loop can resolve it.
  AnnotatedImage query_img;
  query_img.id = "__query__";
  query_img.image_path = std::filesystem::absolute(image_path);
  query_img.width = dims.width;
  query_img.height = dims.height;
  if (f.task == "subject") {
    CoordSpace px = CoordSpace::pixel(dims.width, dims.height);
    SubjectMask m;
    m.cx = dims.width / 2.0;
    m.cy = dims.height / 2.0;
    m.bbox = make_box(0, 0, dims.width, dims.height, px);
    m.gt_crop = m.bbox;
    query_img.subject_masks.push_back(m);
  }
  dataset.images.push_back(query_img);

  BenchOptions opt = make_options(f);
  if (!have_dataset) opt.loop.retrieval = RetrievalMode::ZeroShot;
  ClientStack stack = make_clients(f);

  EmbeddingStore store;
  if (opt.loop.retrieval == RetrievalMode::TopS)
    store = build_store(dataset, *stack.clients.embedder);

  QueryInstance query;
  query.image = &dataset.images.back();
  query.task = opt.task;
  query.mask_index = f.mask_index;
  query.target_ratio = opt.ratio;

  RunResult result = run(query, dataset, &store, stack.clients, opt.loop);

  CropBox out_box = result.selected.box;
  CoordSpace px = CoordSpace::pixel(dims.width, dims.height);
  if (opt.task == Task::RatioAware) {
    double actual = ratio_of(out_box, px);
    if (std::abs(actual - opt.ratio.value()) > 0.05) {
      std::cerr << "warning: RatioViolation: crop ratio " << actual
                << " deviates from target " << opt.ratio.value() << "\n";
      if (f.snap) out_box = snap_to_ratio(out_box, opt.ratio, px);
    }
  }
  std::filesystem::create_directories(f.out_dir);
  std::filesystem::path trace_path =
      std::filesystem::path(f.out_dir) / "crop_trace.json";
  std::ofstream trace_out(trace_path);
  trace_out << result.trace.to_json().dump(2) << "\n";
  std::cout << static_cast<long long>(std::llround(out_box.x1)) << " "
            << static_cast<long long>(std::llround(out_box.y1)) << " "
            << static_cast<long long>(std::llround(out_box.x2)) << " "
            << static_cast<long long>(std::llround(out_box.y2)) << "\n";
  std::cerr << "trace: " << trace_path.string()
            << " config: " << opt.loop.digest() << "\n";
  return kExitOk;
}

int cmd_bench(const CommonFlags& f) {
  if (f.dataset_path.empty()) {
    std::cerr << "bench requires --dataset\n";
    return kExitUsage;
  }
  Dataset dataset = load_dataset(f.dataset_path);
  BenchOptions opt = make_options(f);
  ClientStack stack = make_clients(f);
  EmbeddingStore store;
  if (opt.loop.retrieval == RetrievalMode::TopS)
    store = build_store(dataset, *stack.clients.embedder);
  BenchResult result = run_bench(dataset, &store, stack.clients, opt, f.out_dir);
  if (stack.embed_cache) stack.embed_cache->flush();
  std::cout << result.report.to_text();
  std::cout << "traces: " << result.traces.size() << "  failures: " << result.failures
            << "  config: " << result.config_digest << "\n";
  if (result.failures) return kExitPartial;
  return dataset.diagnostics.empty() ? kExitOk : kExitPartial;
}

int cmd_report_diff(const std::string& a_path, const std::string& b_path) {
  std::ifstream fa(a_path), fb(b_path);
  if (!fa || !fb) {
    std::cerr << "cannot open report files\n";
    return kExitUsage;
  }
  EvalReport a = EvalReport::from_json(nlohmann::json::parse(fa));
  EvalReport b = EvalReport::from_json(nlohmann::json::parse(fb));
  std::cout << report_diff(a, b);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cropper: in-context VLM image cropping pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string image_path, report_a, report_b;

  CLI::App* embed = app.add_subcommand("embed", "build the embedding cache");
  add_common(embed, flags);

  CLI::App* crop = app.add_subcommand("crop", "crop a single image");
  crop->add_option("image", image_path, "input image")->required();
  add_common(crop, flags);

  CLI::App* bench = app.add_subcommand("bench", "run a benchmark dataset");
  add_common(bench, flags);

  CLI::App* diff = app.add_subcommand("report-diff", "compare two report.json files");
  diff->add_option("a", report_a)->required();
  diff->add_option("b", report_b)->required();

  try {
    app.parse(argc, argv);
    if (embed->parsed()) return cmd_embed(flags);
    if (crop->parsed()) return cmd_crop(image_path, flags);
    if (bench->parsed()) return cmd_bench(flags);
    if (diff->parsed()) return cmd_report_diff(report_a, report_b);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const AuthError& e) {
    std::cerr << "auth error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const ProviderUnavailable& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const RateLimited& e) {
    std::cerr << "rate limited: " << e.what() << "\n";
    return kExitProvider;
  } catch (const Timeout& e) {
    std::cerr << "timeout: " << e.what() << "\n";
    return kExitProvider;
  } catch (const SchemaError& e) {
    std::cerr << "config/data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EmptyDataset& e) {
    std::cerr << "empty dataset: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
}
