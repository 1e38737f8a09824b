#include "cropper/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cropper/digest.hpp"

namespace cropper {

double Embedding::norm() const {
  double s = 0;
  for (float v : vector) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw DimensionMismatch("cosine of dim " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  double dot = 0;
  for (int i = 0; i < a.dim(); ++i)
    dot += static_cast<double>(a.vector[i]) * b.vector[i];
  double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) throw InvalidBox("cosine undefined for zero-norm vector");
  return dot / (na * nb);
}

void EmbeddingStore::insert(Embedding e) {
  for (float v : e.vector)
    if (!std::isfinite(v)) throw SchemaError("non-finite embedding entry");
  if (e.norm() == 0) throw SchemaError("zero-norm embedding rejected");
  if (dim_ == 0)
    dim_ = e.dim();
  else if (e.dim() != dim_)
    throw DimensionMismatch("embedding dim " + std::to_string(e.dim()) +
                            " into dim-" + std::to_string(dim_) + " store");
  std::string id = e.source_id;
  entries_.insert_or_assign(std::move(id), std::move(e));
}

const Embedding* EmbeddingStore::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<ScoredId> EmbeddingStore::top_s(const Embedding& query, int s,
                                            const std::vector<std::string>& exclude) const {
  if (s < 1) throw DimensionMismatch("top_s requires s >= 1");
  if (!entries_.empty() && query.dim() != dim_)
    throw DimensionMismatch("query dim " + std::to_string(query.dim()) +
                            " vs store dim " + std::to_string(dim_));
  std::vector<ScoredId> scored;
  scored.reserve(entries_.size());
  for (const auto& [id, emb] : entries_) {
    if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
    scored.push_back({id, cosine(query, emb)});
  }
  auto better = [](const ScoredId& a, const ScoredId& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  size_t n = std::min<size_t>(static_cast<size_t>(s), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + n, scored.end(), better);
  scored.resize(n);
  return scored;
}

Embedding embed(EmbeddingProvider& provider, const ImageBytes& image) {
  return provider.embed(image);
}

Embedding HashEmbeddingProvider::embed(const ImageBytes& image) {
  std::string digest = pixel_digest(image);
  std::seed_seq seq(digest.begin(), digest.end());
  std::mt19937 rng(seq);
  std::normal_distribution<float> gauss(0.f, 1.f);
  Embedding e;
  e.vector.resize(dim_);
  for (float& v : e.vector) v = gauss(rng);
  return e;
}

CachedEmbeddingProvider::CachedEmbeddingProvider(std::filesystem::path cache_path,
                                                 EmbeddingProvider* inner)
    : manifest_path_(cache_path), inner_(inner) {
  payload_path_ = cache_path;
  payload_path_ += ".bin";
  if (!std::filesystem::exists(manifest_path_)) return;
  std::ifstream mf(manifest_path_);
  nlohmann::json manifest = nlohmann::json::parse(mf);
  int dim = manifest.at("dim").get<int>();
  std::ifstream payload(payload_path_, std::ios::binary);
  if (!payload) throw StorageError("embedding cache payload missing: " + payload_path_.string());
  for (const auto& entry : manifest.at("entries")) {
    std::string hash = entry.at("id").get<std::string>();
    uint64_t offset = entry.at("offset").get<uint64_t>();
    std::vector<float> vec(dim);
    payload.seekg(static_cast<std::streamoff>(offset));
    payload.read(reinterpret_cast<char*>(vec.data()),
                 static_cast<std::streamsize>(vec.size() * sizeof(float)));
    if (!payload) throw StorageError("truncated embedding cache payload");
    by_hash_.emplace(std::move(hash), std::move(vec));
  }
}

Embedding CachedEmbeddingProvider::embed(const ImageBytes& image) {
  std::string hash = pixel_digest(image);
  auto it = by_hash_.find(hash);
  if (it != by_hash_.end()) {
    ++hits_;
    return Embedding{it->second, hash};
  }
  if (!inner_)
    throw ProviderUnavailable("embedding cache miss for " + hash + " with no backing provider");
  ++misses_;
  Embedding e = inner_->embed(image);
  by_hash_.emplace(hash, e.vector);
  dirty_ = true;
  return e;
}

void CachedEmbeddingProvider::flush() {
  if (!dirty_ && std::filesystem::exists(manifest_path_)) return;
  std::ofstream payload(payload_path_, std::ios::binary | std::ios::trunc);
  if (!payload) throw StorageError("cannot write " + payload_path_.string());
  nlohmann::json entries = nlohmann::json::array();
  uint64_t offset = 0;
  int dim = 0;
  for (const auto& [hash, vec] : by_hash_) {
    dim = static_cast<int>(vec.size());
    // Payload is little-endian float32; this is the native layout everywhere
    // this artifact targets.
    payload.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(vec.size() * sizeof(float)));
    entries.push_back({{"id", hash}, {"offset", offset}});
    offset += vec.size() * sizeof(float);
  }
  nlohmann::json manifest = {{"dim", dim}, {"entries", entries}};
  std::ofstream mf(manifest_path_, std::ios::trunc);
  if (!mf) throw StorageError("cannot write " + manifest_path_.string());
  mf << manifest.dump(2) << "\n";
  dirty_ = false;
}

}  // namespace cropper
