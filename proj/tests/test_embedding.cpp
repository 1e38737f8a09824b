#include <algorithm>
#include <random>

#include <doctest.h>

#include "cropper/embedding.hpp"
#include "fixtures.hpp"

using namespace cropper;
using cropper::testing::TempDir;

namespace {

Embedding vec(std::string id, std::vector<float> v) {
  return Embedding{std::move(v), std::move(id)};
}

}  // namespace

TEST_CASE("cosine matches hand-computed values") {
  CHECK(cosine(vec("a", {1, 0}), vec("b", {0, 1})) == doctest::Approx(0.0));
  CHECK(cosine(vec("a", {1, 0}), vec("b", {1, 0})) == doctest::Approx(1.0));
  CHECK(cosine(vec("a", {1, 0}), vec("b", {-1, 0})) == doctest::Approx(-1.0));
  CHECK(cosine(vec("a", {1, 1}), vec("b", {1, 0})) ==
        doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(cosine(vec("a", {1, 0}), vec("b", {1, 0, 0})), DimensionMismatch);
}

TEST_CASE("store rejects bad inserts") {
  EmbeddingStore store;
  store.insert(vec("a", {1, 2, 3}));
  CHECK_THROWS_AS(store.insert(vec("b", {1, 2})), DimensionMismatch);
  CHECK_THROWS_AS(store.insert(vec("c", {0, 0, 0})), SchemaError);
  CHECK_THROWS_AS(store.insert(vec("d", {1, 2, std::nanf("")})), SchemaError);
  CHECK(store.size() == 1);
  CHECK(store.dim() == 3);
}

TEST_CASE("top_s agrees with a full argsort oracle") {
  std::mt19937 rng(42);
  std::normal_distribution<float> g;
  for (int dim : {8, 64}) {
    EmbeddingStore store;
    for (int i = 0; i < 300; ++i) {
      std::vector<float> v(dim);
      for (auto& x : v) x = g(rng);
      store.insert(vec("e" + std::to_string(i), std::move(v)));
    }
    for (int q = 0; q < 20; ++q) {
      std::vector<float> v(dim);
      for (auto& x : v) x = g(rng);
      Embedding query = vec("q", std::move(v));

      auto got = store.top_s(query, 10, {"e5"});

      std::vector<ScoredId> oracle;
      for (const auto& [id, e] : store.entries())
        if (id != "e5") oracle.push_back({id, cosine(query, e)});
      std::stable_sort(oracle.begin(), oracle.end(), [](auto& a, auto& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
      });
      oracle.resize(10);

      REQUIRE(got.size() == 10);
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == oracle[i].id);
        CHECK(got[i].similarity == doctest::Approx(oracle[i].similarity));
      }
    }
  }
}

TEST_CASE("top_s handles small stores and full exclusion") {
  EmbeddingStore store;
  store.insert(vec("a", {1, 0}));
  store.insert(vec("b", {0, 1}));
  CHECK(store.top_s(vec("q", {1, 0}), 5).size() == 2);
  CHECK(store.top_s(vec("q", {1, 0}), 5, {"a", "b"}).empty());
}

TEST_CASE("hash provider is content-deterministic") {
  HashEmbeddingProvider p(32);
  ImageBytes a = make_test_image(64, 48, 1);
  ImageBytes b = make_test_image(64, 48, 1);
  ImageBytes c = make_test_image(64, 48, 2);
  Embedding ea = p.embed(a), eb = p.embed(b), ec = p.embed(c);
  CHECK(ea.dim() == 32);
  CHECK(ea.vector == eb.vector);
  CHECK(ea.vector != ec.vector);
  CHECK(cosine(ea, eb) == doctest::Approx(1.0));
}

TEST_CASE("cache round trips through disk") {
  TempDir tmp("cache");
  ImageBytes a = make_test_image(64, 48, 1);
  ImageBytes b = make_test_image(64, 48, 2);
  std::filesystem::path cache = tmp.path / "emb.json";
  std::vector<float> first_vec;
  {
    HashEmbeddingProvider inner(16);
    CachedEmbeddingProvider c(cache, &inner);
    first_vec = c.embed(a).vector;
    c.embed(a);
    c.embed(b);
    CHECK(c.misses() == 2);
    CHECK(c.hits() == 1);
    c.flush();
  }
  {
    CachedEmbeddingProvider c(cache, nullptr);  // replay-only
    CHECK(c.embed(a).vector == first_vec);
    CHECK(c.hits() == 1);
    ImageBytes unseen = make_test_image(64, 48, 9);
    CHECK_THROWS_AS(c.embed(unseen), ProviderUnavailable);
  }
}
