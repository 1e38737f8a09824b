#include <doctest.h>
#include <json.hpp>

#include "cropper/vlm_client.hpp"
#include "fixtures.hpp"

using namespace cropper;
using cropper::testing::TempDir;

namespace {

PromptBundle simple_bundle(const std::string& text, ImageBytes img = {}) {
  PromptBundle b;
  b.space = CoordSpace::norm1000();
  b.parts.push_back(PromptPart::make_text(text));
  if (!img.empty()) b.parts.push_back(PromptPart::make_image("q", std::move(img)));
  return b;
}

}  // namespace

TEST_CASE("request digest keys on content, params and pixels") {
  GenParams p;
  PromptBundle a = simple_bundle("hello", make_test_image(32, 32, 1));
  PromptBundle b = simple_bundle("hello", make_test_image(32, 32, 1));
  CHECK(request_digest(a, p) == request_digest(b, p));

  PromptBundle c = simple_bundle("hello!", make_test_image(32, 32, 1));
  CHECK(request_digest(a, p) != request_digest(c, p));

  PromptBundle d = simple_bundle("hello", make_test_image(32, 32, 2));
  CHECK(request_digest(a, p) != request_digest(d, p));

  GenParams hot = p;
  hot.temperature = 0.9;
  CHECK(request_digest(a, p) != request_digest(a, hot));
}

TEST_CASE("envelope carries the wire schema") {
  GenParams p;
  p.temperature = 0.25;
  p.model_name = "m1";
  PromptBundle b = simple_bundle("ask", make_test_image(16, 16, 0));
  auto j = nlohmann::json::parse(envelope_json(b, p));
  CHECK(j["model"] == "m1");
  CHECK(j["temperature"] == doctest::Approx(0.25));
  CHECK(j["max_tokens"] == 1024);
  REQUIRE(j["parts"].size() == 2);
  CHECK(j["parts"][0]["text"] == "ask");
  CHECK(j["parts"][1].contains("image_b64"));
}

TEST_CASE("replay store round trips through disk") {
  TempDir tmp("replay");
  std::filesystem::path store_path = tmp.path / "store.jsonl";
  {
    ReplayStore s;
    s.append(store_path, "digest-a", "(1,1,500,500)", 12.5);
    s.append(store_path, "digest-b", "(2,2,600,600)", 7.0);
  }
  ReplayStore s = ReplayStore::load(store_path);
  REQUIRE(s.entries().size() == 2);
  CHECK(s.entries().at("digest-a").first == "(1,1,500,500)");
  CHECK(s.entries().at("digest-a").second == doctest::Approx(12.5));
}

TEST_CASE("record then replay reproduces responses and latencies") {
  TempDir tmp("replay");
  std::filesystem::path store_path = tmp.path / "store.jsonl";
  PromptBundle b = simple_bundle("ask", make_test_image(24, 24, 3));
  GenParams p;

  int calls = 0;
  ScriptedVlmClient inner([&](const PromptBundle&, const GenParams&) {
    ++calls;
    return std::string("(3.0,1,1,900,900)");
  });
  GenResult recorded;
  {
    RecordingClient rec(inner, store_path);
    recorded = rec.generate(b, p);
    GenResult again = rec.generate(b, p);  // memoized: inner not re-asked
    CHECK(calls == 1);
    CHECK(again.text == recorded.text);
  }
  ReplayClient replay(store_path);
  GenResult r = replay.generate(b, p);
  CHECK(r.text == recorded.text);
  CHECK(r.latency_ms == doctest::Approx(recorded.latency_ms));
  CHECK(replay.hits() == 1);

  PromptBundle other = simple_bundle("different", make_test_image(24, 24, 3));
  CHECK_THROWS_AS(replay.generate(other, p), ReplayMiss);
}

TEST_CASE("replay client requires an existing store") {
  CHECK_THROWS_AS(ReplayClient("/nonexistent/store.jsonl"), StorageError);
}

TEST_CASE("scripted client fixed response") {
  ScriptedVlmClient c("(1,1,2,2)");
  PromptBundle b = simple_bundle("x");
  CHECK(c.generate(b, {}).text == "(1,1,2,2)");
}
