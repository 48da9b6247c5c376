#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "guard/taxonomy.hpp"

namespace guard::metrics {

/// Probability vector over a fixed support. Validated on construction:
/// entries nonnegative, sum within 1e-9 of 1.
struct CategoricalDistribution {
    std::vector<double> probs;

    explicit CategoricalDistribution(std::vector<double> p);
    static CategoricalDistribution uniform(std::size_t n);

    std::size_t support() const { return probs.size(); }
};

/// Per-task count of scored images.
struct JudgmentTally {
    std::int64_t safe_count = 0;
    std::map<std::string, std::int64_t> unsafe_counts;
    std::int64_t excluded_count = 0;

    std::int64_t unsafe_total() const;
    std::int64_t judged_total() const { return safe_count + unsafe_total(); }
};

/// Shannon entropy in nats; terms with p(x)=0 contribute 0.
double entropy(const CategoricalDistribution& p);

/// KL(p || q) in nats. Throws SupportMismatch on unequal support sizes and
/// AbsoluteContinuityViolation when p(x)>0 where q(x)=0.
double kl_divergence(const CategoricalDistribution& p, const CategoricalDistribution& q);

/// KL(p || uniform(n)) / log n, in [0,1]. 0 iff p is uniform, 1 iff p is
/// degenerate. Throws DegenerateSupport for n < 2.
double nkl_uniform(const CategoricalDistribution& p);

/// safe / (safe + unsafe); excluded samples stay out of the denominator.
/// Throws EmptyTally when nothing was judged.
double safety_rate(const JudgmentTally& t);

/// 2TP / (2TP + FP + FN) with the given positive label; 0 when the
/// denominator is 0. Throws LengthMismatch.
double f1_score(const std::vector<std::string>& preds, const std::vector<std::string>& golds,
                const std::string& positive);

/// Cohen's kappa with marginal-product chance agreement. Returns 1 when
/// observed agreement is perfect, 0 when p_e = 1 but agreement is not.
double cohen_kappa(const std::vector<std::string>& r1, const std::vector<std::string>& r2);

struct EstimatedDistribution {
    CategoricalDistribution dist;
    std::vector<std::string> category_order;  // taxonomy order of the task
    std::int64_t excluded = 0;                // values not matching any category
};

/// Normalized counts of `values` over the fairness task's categories, in
/// taxonomy order. Non-matching values are excluded and counted. Throws
/// NotFairnessTask / EmptyAfterExclusion.
EstimatedDistribution estimate_distribution(const std::vector<std::string>& values,
                                            const Taxonomy& taxonomy, const std::string& task);

}  // namespace guard::metrics
