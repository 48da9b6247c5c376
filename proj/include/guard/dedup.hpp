#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "guard/embedding.hpp"
#include "guard/prompts.hpp"

namespace guard::prompts {

struct DedupOptions {
    double threshold = 0.95;  // cosine; pairs at or above are duplicates
    int bands = 16;
    int rows = 8;
    std::uint64_t seed = 0;
};

struct DedupResult {
    std::vector<PromptRecord> retained;  // status promoted to Deduped
    std::vector<PromptRecord> dropped;   // duplicate_of set on each
    std::map<std::string, std::string> duplicate_of;
};

/// Cosine LSH with random hyperplane signatures. Candidate pairs sharing any
/// band bucket are verified exactly against the threshold; verified pairs are
/// clustered and the lexicographically smallest id of each cluster survives.
/// Exact duplicates always collide in every band, so they always merge.
/// Deterministic for a fixed seed.
DedupResult lsh_dedup(const std::vector<PromptRecord>& records,
                      const std::vector<EmbeddingVector>& embeddings,
                      const DedupOptions& opts);

}  // namespace guard::prompts
