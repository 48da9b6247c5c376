#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guard/model/model.hpp"

namespace guard::model {

enum class SyntheticKind { Safety, Fairness };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::Safety;
    int samples = 96;
    int raw_vision_dim = 32;
    double noise = 0.05;
    std::uint64_t seed = 0;
};

struct SyntheticClass {
    std::string answer;   // text the model must emit for this class
    std::string caption;  // contrastive caption
};

/// Class table for the synthetic task. Safety: one safe class and two unsafe
/// classes answering in the verdict grammar. Fairness: four attribute
/// triples answering in the fairness grammar.
std::vector<SyntheticClass> synthetic_classes(SyntheticKind kind);

/// Deterministic multimodal toy dataset. The image feature vector carries
/// class identity (a scaled one-hot block plus noise), the token sequence is
/// BOS + answer bytes + EOS, and the caption is the class caption's bytes.
std::vector<Sample> make_synthetic_dataset(const SyntheticSpec& spec);

/// Class index encoded in a synthetic feature row (argmax of the class block).
int synthetic_class_of(const Eigen::RowVectorXd& features, SyntheticKind kind);

std::vector<int> encode_text(const std::string& text, int bos_token);

}  // namespace guard::model
