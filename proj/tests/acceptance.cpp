// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line; the process exits non-zero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cropper/bench.hpp"
#include "cropper/evaluation.hpp"
#include "cropper/providers.hpp"
#include "fixtures.hpp"
#include "golden_fixture.hpp"

using namespace cropper;
using cropper::testing::TempDir;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " - ", detail.c_str());
  if (!ok) ++g_failures;
}

// ---- independent metric oracles -------------------------------------------

double oracle_iou(const CropBox& a, const CropBox& b) {
  double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  double inter = ix * iy;
  double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double oracle_disp(const CropBox& p, const CropBox& g, int w, int h) {
  return (std::abs(p.x1 - g.x1) / w + std::abs(p.x2 - g.x2) / w +
          std::abs(p.y1 - g.y1) / h + std::abs(p.y2 - g.y2) / h) /
         4.0;
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
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

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx += (x[i] - mx) * (x[i] - mx);
    dy += (y[i] - my) * (y[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

double oracle_acc(const std::vector<CropBox>& preds,
                  const std::vector<ScoredGtCrop>& gts, int k, int n, double tau) {
  std::vector<ScoredGtCrop> sorted = gts;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.mos > b.mos; });
  if (static_cast<int>(sorted.size()) > n) sorted.resize(n);
  int hits = 0;
  for (int i = 0; i < k && i < static_cast<int>(preds.size()); ++i)
    for (const auto& g : sorted)
      if (oracle_iou(preds[i], g.box) >= tau) {
        ++hits;
        break;
      }
  return static_cast<double>(hits) / k;
}

// ---- criterion 1: metric oracle equivalence --------------------------------

void criterion_metrics() {
  std::mt19937 rng(2024);
  int w = 640, h = 480;
  CoordSpace px = CoordSpace::pixel(w, h);
  auto rand_box = [&](double max_shift) {
    std::uniform_real_distribution<double> ux(0, w * 0.4), uy(0, h * 0.4);
    std::uniform_real_distribution<double> sw(w * 0.3, w * 0.55), sh(h * 0.3, h * 0.55);
    double x1 = ux(rng), y1 = uy(rng);
    (void)max_shift;
    return make_box(x1, y1, std::min<double>(w, x1 + sw(rng)),
                    std::min<double>(h, y1 + sh(rng)), px);
  };
  double max_err = 0;
  std::vector<double> ious_lib, ious_oracle;
  for (int img = 0; img < 200; ++img) {
    std::vector<ScoredGtCrop> gts;
    std::uniform_real_distribution<double> mos(1, 10);
    for (int i = 0; i < 10; ++i) gts.push_back({rand_box(0), mos(rng)});
    std::vector<CropBox> preds;
    for (int i = 0; i < 4; ++i) preds.push_back(rand_box(0));
    preds.push_back(gts[img % 10].box);  // guarantee some exact hits

    max_err = std::max(max_err,
                       std::abs(iou(preds[0], gts[0].box) - oracle_iou(preds[0], gts[0].box)));
    max_err = std::max(max_err, std::abs(displacement(preds[0], gts[0].box, px) -
                                         oracle_disp(preds[0], gts[0].box, w, h)));
    for (int k : {1, 2, 3, 4})
      for (int n : {5, 10})
        max_err = std::max(max_err, std::abs(acc_kn(preds, gts, k, n, 0.9) -
                                             oracle_acc(preds, gts, k, n, 0.9)));

    std::vector<double> ps, gs;
    for (int i = 0; i < 8; ++i) {
      ps.push_back(mos(rng));
      gs.push_back(mos(rng));
    }
    ps[3] = ps[1];  // exercise tie handling
    max_err = std::max(max_err, std::abs(srcc(ps, gs) -
                                         oracle_pearson(oracle_ranks(ps), oracle_ranks(gs))));
    max_err = std::max(max_err, std::abs(pcc(ps, gs) - oracle_pearson(ps, gs)));
  }
  std::ostringstream d;
  d << "max abs error " << max_err;
  report("metric implementations agree with oracles on 200 synthetic images",
         max_err <= 1e-9, d.str());
}

// ---- criterion 2: retrieval equivalence ------------------------------------

void criterion_retrieval() {
  std::mt19937 rng(7);
  std::normal_distribution<float> g;
  bool ok = true;
  for (int dim : {16, 512}) {
    int count = dim == 16 ? 5000 : 800;
    EmbeddingStore store;
    for (int i = 0; i < count; ++i) {
      std::vector<float> v(dim);
      for (auto& x : v) x = g(rng);
      store.insert(Embedding{std::move(v), "e" + std::to_string(i)});
    }
    for (int q = 0; q < 100 && ok; ++q) {
      std::vector<float> v(dim);
      for (auto& x : v) x = g(rng);
      Embedding query{std::move(v), "q"};
      auto got = store.top_s(query, 30);
      std::vector<ScoredId> oracle;
      for (const auto& [id, e] : store.entries())
        oracle.push_back({id, cosine(query, e)});
      std::stable_sort(oracle.begin(), oracle.end(), [](auto& a, auto& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
      });
      for (size_t i = 0; i < got.size(); ++i)
        if (got[i].id != oracle[i].id) ok = false;
    }
  }
  report("top-s retrieval matches the full argsort oracle", ok);
}

// ---- criterion 3: prompt golden files --------------------------------------

void criterion_goldens() {
  bool ok = true;
  std::string detail;
  auto check = [&](const std::string& name, const std::string& text) {
    std::ifstream in(std::filesystem::path(GOLDEN_DIR) / name, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    if (!in.good() || buf.str() != text) {
      ok = false;
      detail = name;
    }
  };
  for (Task task : {Task::FreeForm, Task::SubjectAware, Task::RatioAware}) {
    testing::GoldenFixture fx(task);
    PromptBundle init = build_initial(fx.query(task), fx.query_bytes, fx.examples, 6);
    check(task_name(task) + "_initial.txt", init.render_text());
    auto fb = testing::sample_feedback(fx.query_img, task, 2);
    check(task_name(task) + "_refine.txt", build_refinement(init, fb, 1).render_text());
  }
  report("prompt renderings match golden files byte-for-byte", ok, detail);
}

// ---- criterion 4: parser robustness ----------------------------------------

void criterion_parser() {
  std::mt19937 rng(99);
  bool ok = true;
  std::string detail;
  CoordSpace n1000 = CoordSpace::norm1000();

  std::uniform_int_distribution<int> len(0, 200);
  std::uniform_int_distribution<int> byte(0, 255);
  const std::string pool = "(),.0123456789- \nabcXYZ";
  for (int i = 0; i < 10000 && ok; ++i) {
    std::string s;
    int n = len(rng);
    for (int j = 0; j < n; ++j)
      s += (i % 2) ? static_cast<char>(byte(rng)) : pool[byte(rng) % pool.size()];
    try {
      auto r = parse_response(Task::FreeForm, s, n1000);
      for (const auto& c : r.candidates) {
        if (!(c.box.x1 < c.box.x2 && c.box.y1 < c.box.y2) || c.box.x1 < 1 ||
            c.box.x2 > 1000 || c.box.y1 < 1 || c.box.y2 > 1000) {
          ok = false;
          detail = "invalid box from: " + s;
        }
      }
    } catch (const NoCandidates&) {
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("unexpected exception: ") + e.what();
    }
  }

  std::uniform_int_distribution<int> coord(1, 999);
  std::uniform_real_distribution<double> mos(1, 10);
  std::uniform_int_distribution<int> n_cands(1, 8);
  for (int i = 0; i < 1000 && ok; ++i) {
    std::vector<ParsedCandidate> cands;
    std::set<std::array<int, 4>> seen;
    int n = n_cands(rng);
    for (int j = 0; j < n; ++j) {
      int x1 = coord(rng), y1 = coord(rng);
      std::uniform_int_distribution<int> hi_x(x1 + 1, 1000), hi_y(y1 + 1, 1000);
      int x2 = hi_x(rng), y2 = hi_y(rng);
      if (!seen.insert({x1, y1, x2, y2}).second) continue;
      cands.push_back({make_box(x1, y1, x2, y2, n1000), mos(rng)});
    }
    auto back = parse_response(Task::FreeForm, render_candidates(cands, true), n1000);
    if (back.candidates.size() != cands.size()) {
      ok = false;
      detail = "round trip lost candidates";
      break;
    }
    for (size_t j = 0; j < cands.size(); ++j) {
      const auto& a = cands[j];
      const auto& b = back.candidates[j];
      if (a.box.x1 != b.box.x1 || a.box.y1 != b.box.y1 || a.box.x2 != b.box.x2 ||
          a.box.y2 != b.box.y2 ||
          std::abs(*a.predicted_mos - *b.predicted_mos) > 0.005 + 1e-12) {
        ok = false;
        detail = "round trip altered a candidate";
      }
    }
  }
  report("parser survives 10k fuzz inputs and round-trips 1000 candidate sets", ok,
         detail);
}

// ---- criterion 5: refinement hill climbing ---------------------------------

// Aesthetic provider whose score is the IoU against a hidden target box.
class TargetIouProvider : public AestheticProvider {
 public:
  explicit TargetIouProvider(const CropBox* target) : target_(target) {}
  double score_native(const AestheticRequest& req) override {
    if (!req.box_px) return 0.0;
    double ix = std::max(0.0, std::min(req.box_px->x2, target_->x2) -
                                  std::max(req.box_px->x1, target_->x1));
    double iy = std::max(0.0, std::min(req.box_px->y2, target_->y2) -
                                  std::max(req.box_px->y1, target_->y1));
    double inter = ix * iy;
    return inter / (req.box_px->area() + target_->area() - inter);
  }

 private:
  const CropBox* target_;
};

void criterion_refinement() {
  TempDir tmp("accept-loop");
  Dataset dataset = cropper::testing::make_dataset(tmp.path, 6, 128, 96);
  HashEmbeddingProvider embedder(16);
  EmbeddingStore store;
  for (const auto& img : dataset.images) {
    Embedding e = embedder.embed(read_file(dataset.resolve(img)));
    e.source_id = img.id;
    store.insert(std::move(e));
  }

  CoordSpace n1000 = CoordSpace::norm1000();
  std::vector<double> mean_iou(4, 0.0);
  const int kQueries = 50;
  bool ran_ok = true;

  for (int l = 0; l <= 3; ++l) {
    double total = 0;
    for (int q = 0; q < kQueries; ++q) {
      const AnnotatedImage& img = dataset.images[q % dataset.images.size()];
      CoordSpace px = img.pixel_space();
      double tx = 20 + (q * 7) % 30, ty = 10 + (q * 5) % 20;
      CropBox target_px =
          make_box(tx, ty, tx + 70 + (q % 10), ty + 50 + (q % 8), px);
      CropBox target_n = convert(target_px, n1000);

      // Proposals start far from the target and halve the gap each round.
      CropBox current = make_box(600, 600, 1000, 1000, n1000);
      ScriptedVlmClient vlm([&](const PromptBundle& b, const GenParams&) {
        if (b.iteration > 0) {
          current = make_box((current.x1 + target_n.x1) / 2,
                             (current.y1 + target_n.y1) / 2,
                             (current.x2 + target_n.x2) / 2,
                             (current.y2 + target_n.y2) / 2, n1000);
        }
        std::ostringstream out;
        out << "(5.0," << static_cast<long long>(current.x1) << ","
            << static_cast<long long>(current.y1) << ","
            << static_cast<long long>(current.x2) << ","
            << static_cast<long long>(current.y2) << ")";
        return out.str();
      });
      TargetIouProvider aest(&target_px);
      Clients clients{&vlm, &embedder, &aest};
      LoopConfig cfg = default_config(Task::FreeForm);
      cfg.s = 3;
      cfg.t = 2;
      cfg.l = l;
      cfg.scorer = {true, false, false};
      QueryInstance query;
      query.image = &img;
      query.task = Task::FreeForm;
      try {
        RunResult res = run(query, dataset, &store, clients, cfg);
        total += iou(res.selected.box, target_px);
      } catch (const Error&) {
        ran_ok = false;
      }
    }
    mean_iou[l] = total / kQueries;
  }

  bool monotone = true;
  for (int l = 1; l <= 3; ++l)
    if (mean_iou[l] + 1e-12 < mean_iou[l - 1]) monotone = false;
  bool improved = mean_iou[2] >= mean_iou[0] + 0.02;
  std::ostringstream d;
  d << "mean IoU by l: " << mean_iou[0] << " " << mean_iou[1] << " " << mean_iou[2]
    << " " << mean_iou[3];
  report("refinement hill-climbs on a convergent mock over 50 queries",
         ran_ok && monotone && improved, d.str());
}

// ---- criteria 6 & 7: bench matrix and replay determinism -------------------

std::unique_ptr<ScriptedVlmClient> bench_mock() {
  return std::make_unique<ScriptedVlmClient>(
      [](const PromptBundle& b, const GenParams&) {
        if (b.space == CoordSpace::norm1000()) {
          if (b.zero_shot) return std::string("(100,100,800,800)");
          return std::string("(4.5,100,100,800,800)\n(5.5,50,50,900,950)");
        }
        if (b.space.kind == CoordSpace::Kind::Unit)
          return std::string("(0.10,0.10,0.80,0.80)");
        return "(0,0," + std::to_string(b.space.width) + "," +
               std::to_string(b.space.height) + ")";
      });
}

void criterion_bench_matrix() {
  TempDir tmp("accept-bench");
  Dataset dataset = cropper::testing::make_dataset(tmp.path, 4);
  HashEmbeddingProvider embedder(16);
  EmbeddingStore store;
  for (const auto& img : dataset.images) {
    Embedding e = embedder.embed(read_file(dataset.resolve(img)));
    e.source_id = img.id;
    store.insert(std::move(e));
  }
  auto vlm = bench_mock();
  ConstantAestheticProvider aest(0.6);
  Clients clients{vlm.get(), &embedder, &aest};

  std::vector<LoopConfig> configs;
  const bool combos[7][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                             {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  for (const auto& c : combos) {
    LoopConfig cfg = default_config(Task::FreeForm);
    cfg.s = 2;
    cfg.l = 1;
    cfg.scorer = {c[0], c[1], c[2]};
    configs.push_back(cfg);
  }
  for (RetrievalMode m : {RetrievalMode::TopS, RetrievalMode::Random,
                          RetrievalMode::ZeroShot}) {
    LoopConfig cfg = default_config(Task::FreeForm);
    cfg.s = 2;
    cfg.l = 0;
    cfg.retrieval = m;
    configs.push_back(cfg);
  }

  std::set<std::string> digests;
  bool ok = true;
  std::string detail;
  int idx = 0;
  for (const auto& cfg : configs) {
    BenchOptions opt;
    opt.task = Task::FreeForm;
    opt.loop = cfg;
    std::filesystem::path out = tmp.path / ("run" + std::to_string(idx++));
    try {
      BenchResult res = run_bench(dataset, &store, clients, opt, out);
      digests.insert(res.config_digest);
      if (res.failures) {
        ok = false;
        detail = "bench failures under " + cfg.scorer.label();
      }
      EvalReport again = evaluate(load_traces(out), dataset, opt.metrics);
      if (std::abs(again.mean_iou - res.report.mean_iou) > 1e-12 ||
          again.acc != res.report.acc) {
        ok = false;
        detail = "report did not recompute from traces";
      }
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
  }
  if (digests.size() != 10) {
    ok = false;
    detail = "expected 10 distinct config digests, got " +
             std::to_string(digests.size());
  }
  report("bench covers 7 scorer combos + 3 retrieval modes with distinct digests",
         ok, detail);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_replay() {
  TempDir tmp("accept-replay");
  Dataset dataset = cropper::testing::make_dataset(tmp.path, 3);
  HashEmbeddingProvider embedder(16);
  EmbeddingStore store;
  for (const auto& img : dataset.images) {
    Embedding e = embedder.embed(read_file(dataset.resolve(img)));
    e.source_id = img.id;
    store.insert(std::move(e));
  }
  ConstantAestheticProvider aest(0.6);
  BenchOptions opt;
  opt.task = Task::FreeForm;
  opt.loop = default_config(Task::FreeForm);
  opt.loop.s = 2;
  opt.loop.l = 1;

  std::filesystem::path store_path = tmp.path / "transcript.jsonl";
  std::filesystem::path run_a = tmp.path / "a", run_b = tmp.path / "b";

  bool ok = true;
  std::string detail;
  try {
    auto inner = bench_mock();
    RecordingClient rec(*inner, store_path);
    Clients clients{&rec, &embedder, &aest};
    run_bench(dataset, &store, clients, opt, run_a);

    ReplayClient replay(store_path);
    Clients rclients{&replay, &embedder, &aest};
    run_bench(dataset, &store, rclients, opt, run_b);

    for (const auto& img : dataset.images) {
      std::filesystem::path rel = std::filesystem::path("traces") / (img.id + ".json");
      if (slurp(run_a / rel) != slurp(run_b / rel)) {
        ok = false;
        detail = "trace differs for " + img.id;
      }
    }
    if (slurp(run_a / "report.json") != slurp(run_b / "report.json")) {
      ok = false;
      detail = "report.json differs";
    }
  } catch (const Error& e) {
    ok = false;
    detail = e.what();
  }
  report("record/replay reproduces traces byte-identically", ok, detail);
}

// ---- criterion 8: defaults audit -------------------------------------------

void criterion_defaults() {
  bool ok = true;
  auto expect = [&](bool cond) { ok = ok && cond; };

  LoopConfig f = default_config(Task::FreeForm);
  expect(f.s == 30 && f.t == 5 && f.r == 6 && f.l == 2);
  expect(f.temperature == 0.05);
  expect(f.selection == SelectionStrategy::FinalIteration);
  expect(f.scorer.use_aesthetic && f.scorer.use_area && !f.scorer.use_content);
  expect(f.retrieval == RetrievalMode::TopS);

  LoopConfig s = default_config(Task::SubjectAware);
  expect(s.s == 30 && s.r == 5 && s.l == 2);
  expect(s.selection == SelectionStrategy::FinalIteration);
  expect(s.scorer.use_aesthetic && s.scorer.use_area && !s.scorer.use_content);

  LoopConfig r = default_config(Task::RatioAware);
  expect(r.s == 10 && r.r == 6 && r.l == 2);
  expect(r.selection == SelectionStrategy::BestOverall);
  expect(!r.scorer.use_aesthetic && !r.scorer.use_area && r.scorer.use_content);

  MetricConfig m;
  expect(m.tau == 0.90);
  expect(m.k_values == std::vector<int>{1, 2, 3, 4});
  expect(m.n_values == std::vector<int>{5, 10});
  GenParams g;
  expect(g.temperature == 0.05 && g.max_output_tokens == 1024);

  report("hyperparameter defaults match the documented configuration", ok);
}

// ---- criterion 9: geometry round trips -------------------------------------

void criterion_geometry() {
  std::mt19937 rng(41);
  bool ok = true;
  const int dims[][2] = {{640, 480}, {1920, 1080}, {97, 311}};
  int per_dim = 10000 / 3 + 1;
  for (auto [w, h] : dims) {
    CoordSpace px = CoordSpace::pixel(w, h);
    std::uniform_real_distribution<double> ux(0, w), uy(0, h);
    for (int i = 0; i < per_dim && ok; ++i) {
      double a = ux(rng), b = ux(rng), c = uy(rng), d = uy(rng);
      if (std::abs(a - b) < 2 * w / 1000.0 + 0.5) continue;
      if (std::abs(c - d) < 2 * h / 1000.0 + 0.5) continue;
      CropBox box = make_box(std::min(a, b), std::min(c, d), std::max(a, b),
                             std::max(c, d), px);
      CropBox back = convert(convert(box, CoordSpace::norm1000()), px);
      if (std::abs(back.x1 - box.x1) > w / 1000.0 + 1e-9 ||
          std::abs(back.x2 - box.x2) > w / 1000.0 + 1e-9 ||
          std::abs(back.y1 - box.y1) > h / 1000.0 + 1e-9 ||
          std::abs(back.y2 - box.y2) > h / 1000.0 + 1e-9)
        ok = false;

      CropBox u = convert(box, CoordSpace::unit());
      CropBox upx = convert(u, px);
      if (std::abs(upx.x1 - box.x1) > 1e-12 * w || std::abs(upx.x2 - box.x2) > 1e-12 * w ||
          std::abs(upx.y1 - box.y1) > 1e-12 * h || std::abs(upx.y2 - box.y2) > 1e-12 * h)
        ok = false;
    }
  }
  report("coordinate conversions stay within grid error over 10k boxes", ok);
}

}  // namespace

int main() {
  criterion_metrics();
  criterion_retrieval();
  criterion_goldens();
  criterion_parser();
  criterion_refinement();
  criterion_bench_matrix();
  criterion_replay();
  criterion_defaults();
  criterion_geometry();
  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
