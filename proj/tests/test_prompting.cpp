#include <cstdlib>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "cropper/prompting.hpp"
#include "fixtures.hpp"
#include "golden_fixture.hpp"

using namespace cropper;

namespace {

void check_golden(const std::string& name, const std::string& text) {
  std::filesystem::path path = std::filesystem::path(GOLDEN_DIR) / name;
  if (std::getenv("CROPPER_REGEN_GOLDEN")) {
    std::ofstream(path) << text;
    return;
  }
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing golden file: ", path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK_MESSAGE(buf.str() == text, "golden mismatch: ", name, "\n--- got ---\n", text);
}

}  // namespace

TEST_CASE("golden prompts for every task") {
  for (Task task : {Task::FreeForm, Task::SubjectAware, Task::RatioAware}) {
    testing::GoldenFixture fx(task);
    PromptBundle init = build_initial(fx.query(task), fx.query_bytes, fx.examples, 6);
    check_golden(task_name(task) + "_initial.txt", init.render_text());

    auto fb = testing::sample_feedback(fx.query_img, task, 2);
    PromptBundle refine = build_refinement(init, fb, 1);
    check_golden(task_name(task) + "_refine.txt", refine.render_text());
  }
  testing::GoldenFixture fx(Task::FreeForm);
  PromptBundle zs = build_zero_shot(fx.query(Task::FreeForm), fx.query_bytes);
  check_golden("freeform_zeroshot.txt", zs.render_text());
}

TEST_CASE("refinement text grows monotonically") {
  testing::GoldenFixture fx(Task::FreeForm);
  PromptBundle b0 = build_initial(fx.query(Task::FreeForm), fx.query_bytes, fx.examples, 6);
  auto fb = testing::sample_feedback(fx.query_img, Task::FreeForm, 2);
  PromptBundle b1 = build_refinement(b0, fb, 1);
  auto fb2 = fb;
  fb2.push_back(testing::sample_feedback(fx.query_img, Task::FreeForm, 3)[2]);
  PromptBundle b2 = build_refinement(b1, fb2, 2);

  std::string t0 = b0.render_text(), t1 = b1.render_text(), t2 = b2.render_text();
  CHECK(t1.size() > t0.size());
  CHECK(t2.size() > t1.size());
  CHECK(t2.compare(0, t1.size(), t1) == 0);  // strict prefix containment
  CHECK(b2.feedback_count == 3);
}

TEST_CASE("prompt_space per task") {
  CoordSpace px = CoordSpace::pixel(640, 480);
  CHECK(prompt_space(Task::FreeForm, px) == CoordSpace::norm1000());
  CHECK(prompt_space(Task::SubjectAware, px) == CoordSpace::unit());
  CHECK(prompt_space(Task::RatioAware, px) == px);
}

TEST_CASE("parse_response reads tuples out of prose") {
  CoordSpace n = CoordSpace::norm1000();
  auto r = parse_response(Task::FreeForm,
                          "Sure! Here are crops:\n(5.20, 10, 20, 800, 900)\n"
                          "and also (4.9,100,100,600,700).",
                          n);
  REQUIRE(r.candidates.size() == 2);
  CHECK(r.candidates[0].predicted_mos == doctest::Approx(5.20));
  CHECK(r.candidates[0].box.x1 == 10);
  CHECK(r.candidates[1].box.y2 == 700);

  auto u = parse_response(Task::SubjectAware, "```\n(0.10, 0.20, 0.90, 0.80)\n```",
                          CoordSpace::unit());
  REQUIRE(u.candidates.size() == 1);
  CHECK(!u.candidates[0].predicted_mos.has_value());
  CHECK(u.candidates[0].box.y2 == doctest::Approx(0.8));
}

TEST_CASE("parse_response clamps, dedups and diagnoses") {
  CoordSpace n = CoordSpace::norm1000();
  auto r = parse_response(Task::FreeForm,
                          "(5.0, -50, 1, 2000, 1000)\n"   // clamped into range
                          "(5.0, 1, 1, 1000, 1000)\n"     // duplicate after clamp
                          "(5.0, 900, 1, 100, 1000)\n"    // inverted: dropped
                          "(1, 2, 3)\n",                  // wrong arity: ignored
                          n);
  REQUIRE(r.candidates.size() == 1);
  CHECK(r.candidates[0].box.x1 == 1);
  CHECK(r.candidates[0].box.x2 == 1000);
  CHECK(!r.diagnostics.empty());

  CHECK_THROWS_AS(parse_response(Task::FreeForm, "no tuples here", n), NoCandidates);
  CHECK_THROWS_AS(parse_response(Task::FreeForm, "(1,2,900,900)", n), NoCandidates);

  // Zero-shot free-form speaks four-tuples.
  auto z = parse_response(Task::FreeForm, "(1,2,900,900)", n, true);
  CHECK(z.candidates.size() == 1);
}

TEST_CASE("render/parse round trip") {
  CoordSpace n = CoordSpace::norm1000();
  std::vector<ParsedCandidate> cands;
  cands.push_back({make_box(10, 20, 500, 600, n), 5.25});
  cands.push_back({make_box(1, 1, 1000, 1000, n), 3.75});
  std::string text = render_candidates(cands, true);
  auto back = parse_response(Task::FreeForm, text, n);
  REQUIRE(back.candidates.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back.candidates[i].box.x1 == cands[i].box.x1);
    CHECK(back.candidates[i].box.y2 == cands[i].box.y2);
    CHECK(*back.candidates[i].predicted_mos ==
          doctest::Approx(*cands[i].predicted_mos).epsilon(0.005));
  }
}

TEST_CASE("coordinate formatting per space") {
  CHECK(format_coord(512.0, CoordSpace::norm1000()) == "512");
  CHECK(format_coord(0.5, CoordSpace::unit()) == "0.50");
  CHECK(format_coord(640, CoordSpace::pixel(1280, 720)) == "640");
  CHECK(format_score(0.7314) == "0.731");
  CHECK(format_mos(5.251) == "5.25");
}
