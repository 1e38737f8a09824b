#pragma once

#include <cstdint>
#include <vector>

#include "cropper/dataset.hpp"
#include "cropper/embedding.hpp"
#include "cropper/prompting.hpp"

namespace cropper {

// Free-form label selection: top-s neighbors by cosine similarity, each with
// its top-t crops by MOS, labels in Norm1000 space. The query image id never
// appears among the neighbors.
std::vector<IclExample> select_freeform(const QueryInstance& query,
                                        const EmbeddingStore& store,
                                        const Dataset& dataset,
                                        const Embedding& query_embedding, int s, int t);

// Subject-aware: one label per neighbor, the mask whose unit-space center is
// closest to the query's; neighbors without masks are skipped and backfilled.
std::vector<IclExample> select_subject(const QueryInstance& query,
                                       const EmbeddingStore& store,
                                       const Dataset& dataset,
                                       const Embedding& query_embedding, int s);

// Ratio-aware: one label per neighbor, the crop whose aspect ratio is nearest
// the target; neighbors with nothing within `tolerance` are skipped and
// backfilled. Labels stay in pixel space.
std::vector<IclExample> select_ratio(const QueryInstance& query,
                                     const EmbeddingStore& store, const Dataset& dataset,
                                     const Embedding& query_embedding, int s,
                                     double tolerance = 0.05);

// Random-retrieval ablation: s uniform draws without replacement, labels via
// the same task-specific selection; deterministic for a fixed seed.
std::vector<IclExample> select_random(const QueryInstance& query, const Dataset& dataset,
                                      int s, uint64_t seed, int t = 5);

// Loads image bytes for examples returned by the selectors above.
void load_example_bytes(const Dataset& dataset, std::vector<IclExample>& examples);

}  // namespace cropper
