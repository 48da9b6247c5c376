#include "guard/dedup.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "guard/error.hpp"

namespace guard::prompts {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void merge(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

DedupResult lsh_dedup(const std::vector<PromptRecord>& records,
                      const std::vector<EmbeddingVector>& embeddings,
                      const DedupOptions& opts) {
    if (records.size() != embeddings.size())
        throw ShapeMismatch("records and embeddings differ in length");
    if (opts.threshold <= 0.0 || opts.threshold > 1.0)
        throw PreconditionViolation("threshold must be in (0, 1]");
    if (opts.bands < 1 || opts.rows < 1)
        throw PreconditionViolation("bands and rows must be positive");

    DedupResult result;
    if (records.empty()) return result;

    const std::size_t n = records.size();
    const std::size_t dim = embeddings[0].dim();
    for (const auto& e : embeddings) {
        if (e.provider != embeddings[0].provider)
            throw MixedProviders("embeddings from " + embeddings[0].provider + " and " +
                                 e.provider);
        if (e.dim() != dim) throw ShapeMismatch("embedding dims differ within one corpus");
    }

    // random hyperplane signatures, rows bits per band
    const int planes = opts.bands * opts.rows;
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> hyperplanes(planes, std::vector<double>(dim));
    for (auto& h : hyperplanes)
        for (double& x : h) x = gauss(rng);

    std::vector<std::vector<std::uint64_t>> band_keys(n,
                                                      std::vector<std::uint64_t>(opts.bands, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (int b = 0; b < opts.bands; ++b) {
            std::uint64_t key = 0;
            for (int r = 0; r < opts.rows; ++r) {
                const auto& h = hyperplanes[b * opts.rows + r];
                double dot = 0.0;
                for (std::size_t d = 0; d < dim; ++d) dot += h[d] * embeddings[i].values[d];
                key = (key << 1) | (dot >= 0.0 ? 1u : 0u);
            }
            band_keys[i][b] = key;
        }
    }

    // bucket per band, then verify candidates exactly
    UnionFind clusters(n);
    std::set<std::pair<std::size_t, std::size_t>> checked;
    for (int b = 0; b < opts.bands; ++b) {
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < n; ++i) buckets[band_keys[i][b]].push_back(i);
        for (const auto& [_, members] : buckets) {
            for (std::size_t a = 0; a < members.size(); ++a) {
                for (std::size_t c = a + 1; c < members.size(); ++c) {
                    const auto pair = std::minmax(members[a], members[c]);
                    if (!checked.insert(pair).second) continue;
                    if (cosine(embeddings[pair.first], embeddings[pair.second]) >=
                        opts.threshold)
                        clusters.merge(pair.first, pair.second);
                }
            }
        }
    }

    // smallest id in each cluster is retained
    std::unordered_map<std::size_t, std::size_t> representative;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = clusters.find(i);
        auto it = representative.find(root);
        if (it == representative.end() || records[i].id < records[it->second].id)
            representative[root] = i;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t rep = representative[clusters.find(i)];
        if (rep == i) {
            PromptRecord r = records[i];
            if (r.status < PromptStatus::Deduped) r.status = PromptStatus::Deduped;
            result.retained.push_back(std::move(r));
        } else {
            PromptRecord r = records[i];
            r.duplicate_of = records[rep].id;
            result.dropped.push_back(std::move(r));
            result.duplicate_of.emplace(records[i].id, records[rep].id);
        }
    }
    return result;
}

}  // namespace guard::prompts
