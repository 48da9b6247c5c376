#pragma once

// Test-only oracles, kept independent of the library implementations they
// check. Everything here is deliberately naive: direct summation, O(n^2)
// scans, exhaustive enumeration.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h += v * -std::log(v);
    return h;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) d += p[i] * (std::log(p[i]) - std::log(q[i]));
    return d;
}

struct Confusion {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<std::string>& preds,
                           const std::vector<std::string>& golds, const std::string& positive) {
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == positive, g = golds[i] == positive;
        if (p && g) ++c.tp;
        else if (p && !g) ++c.fp;
        else if (!p && g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double f1(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                 const std::string& positive) {
    const Confusion c = confusion(preds, golds, positive);
    const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
}

inline double kappa(const std::vector<std::string>& r1, const std::vector<std::string>& r2) {
    const double n = static_cast<double>(r1.size());
    std::map<std::string, long> m1, m2;
    long agree = 0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        if (r1[i] == r2[i]) ++agree;
        ++m1[r1[i]];
        ++m2[r2[i]];
    }
    const double po = agree / n;
    if (po == 1.0) return 1.0;
    double pe = 0.0;
    for (const auto& [k, c1] : m1)
        if (m2.count(k)) pe += (c1 / n) * (m2.at(k) / n);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

/// Connected components of the cosine >= threshold graph, by pairwise scan.
/// Returns component id per index.
inline std::vector<int> cosine_components(const std::vector<std::vector<double>>& vectors,
                                          double threshold) {
    const std::size_t n = vectors.size();
    std::vector<int> comp(n, -1);
    auto cosine = [&](std::size_t a, std::size_t b) {
        double dot = 0.0;
        for (std::size_t k = 0; k < vectors[a].size(); ++k) dot += vectors[a][k] * vectors[b][k];
        return dot;
    };
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] >= 0) continue;
        // BFS
        std::vector<std::size_t> queue{i};
        comp[i] = next;
        while (!queue.empty()) {
            const std::size_t u = queue.back();
            queue.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                if (comp[v] >= 0 || v == u) continue;
                if (cosine(u, v) >= threshold) {
                    comp[v] = next;
                    queue.push_back(v);
                }
            }
        }
        ++next;
    }
    return comp;
}

/// Majority-vote oracle over a verdict triple: the most frequent verdict
/// wins when held by at least two voters, everything else is unresolved.
/// Verdicts are plain strings ("safe" or a category name).
inline std::string majority_verdict(const std::string& a, const std::string& b,
                                    const std::string& c) {
    if (a == b || a == c) return a;
    if (b == c) return b;
    return "(unresolved)";
}

}  // namespace oracle
