#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cropper/errors.hpp"
#include "cropper/image_io.hpp"

namespace cropper {

struct Embedding {
  std::vector<float> vector;
  std::string source_id;

  int dim() const { return static_cast<int>(vector.size()); }
  double norm() const;
};

double cosine(const Embedding& a, const Embedding& b);

struct ScoredId {
  std::string id;
  double similarity = 0;
};

// Exact in-memory vector store; benchmark training sets are small enough that
// a full scan is the right tool.
class EmbeddingStore {
 public:
  void insert(Embedding e);  // rejects dim mismatches and zero-norm vectors
  size_t size() const { return entries_.size(); }
  int dim() const { return dim_; }
  const Embedding* find(const std::string& id) const;
  const std::map<std::string, Embedding>& entries() const { return entries_; }

  // The s ids maximizing cosine similarity, descending; ties broken by
  // ascending id. `exclude` ids never appear. Returns fewer than s when the
  // store is small.
  std::vector<ScoredId> top_s(const Embedding& query, int s,
                              const std::vector<std::string>& exclude = {}) const;

 private:
  std::map<std::string, Embedding> entries_;
  int dim_ = 0;
};

// Source of image embeddings (live service, cache, or deterministic mock).
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(const ImageBytes& image) = 0;
};

Embedding embed(EmbeddingProvider& provider, const ImageBytes& image);

// Deterministic mock: vector seeded from the pixel digest, so identical image
// content always embeds identically.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(int dim = 16) : dim_(dim) {}
  Embedding embed(const ImageBytes& image) override;

 private:
  int dim_;
};

// Disk cache keyed by content hash: a JSON manifest (id, dim, offset) next to
// a flat little-endian float32 payload. Misses fall through to `inner`; a
// null inner turns a miss into ProviderUnavailable (pure replay).
class CachedEmbeddingProvider : public EmbeddingProvider {
 public:
  CachedEmbeddingProvider(std::filesystem::path cache_path, EmbeddingProvider* inner);
  Embedding embed(const ImageBytes& image) override;
  void flush();  // writes manifest + payload
  size_t misses() const { return misses_; }
  size_t hits() const { return hits_; }

 private:
  std::filesystem::path manifest_path_;
  std::filesystem::path payload_path_;
  EmbeddingProvider* inner_;
  std::map<std::string, std::vector<float>> by_hash_;
  size_t misses_ = 0, hits_ = 0;
  bool dirty_ = false;
};

}  // namespace cropper
