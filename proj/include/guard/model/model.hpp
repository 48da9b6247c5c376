#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "guard/model/graph.hpp"

namespace guard::model {

// token conventions shared by the trainer, decoder, and dataset generator
constexpr int kPadToken = 0;
constexpr int kBosSafety = 1;
constexpr int kEosToken = 2;
constexpr int kBosFairness = 3;

// contrastive weight: 0.01 is the default, 0.1 a stronger preset
constexpr double kContrastiveWeightDefault = 0.01;
constexpr double kContrastiveWeightStrong = 0.1;

enum class CmaPlacement { Last, EvenlySpaced };

struct ToyModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_layers = 6;        // transformer depth N
    int cma_layers = 4;      // gated cross-attention blocks L (L <= N)
    int vocab_size = 256;    // byte-level
    int n_vision_tokens = 8;
    int raw_vision_dim = 32;
    int max_seq_len = 56;
    double tau = 0.07;       // contrastive temperature
    double lambda = kContrastiveWeightDefault;
    CmaPlacement placement = CmaPlacement::Last;

    void validate() const;  // throws InvalidConfig
    /// 0-based transformer layers carrying a cross-attention block.
    std::vector<int> cma_layer_indices() const;
};

struct Tensor {
    std::string name;
    std::string group;  // parameter family for gradient checks
    Mat value;
    Mat grad;
};

struct ToyModelParams {
    ToyModelConfig config;
    std::uint64_t seed = 0;
    std::vector<Tensor> tensors;

    Mat& get(const std::string& name);
    const Mat& get(const std::string& name) const;
    Mat& grad(const std::string& name);
    int find(const std::string& name) const;  // -1 when absent
    void zero_grads();

    std::vector<double> gates() const;

private:
    mutable std::map<std::string, int> index_;
    void build_index() const;
};

struct Batch {
    Mat features;                             // [B, raw_vision_dim]
    std::vector<std::vector<int>> tokens;     // per item, BOS ... EOS
    std::vector<std::vector<int>> captions;   // per item, contrastive pairing

    int size() const { return static_cast<int>(tokens.size()); }
    void validate(const ToyModelConfig& cfg) const;  // throws ShapeMismatch
};

/// Deterministic initialization: scaled-normal weights, unit norm gains,
/// and every cross-attention gate exactly zero.
ToyModelParams init_model(const ToyModelConfig& cfg, std::uint64_t seed);

struct CmaLayerWeights {
    Mat wq, wk, wv, wo;  // [d, d] each
};

/// One gated cross-attention block: text queries attend over vision keys
/// and values, the projected result is scaled by the gate and added back
/// onto the text stream. Returns a [k, d] matrix for text input [k, d].
Mat cma_block(const Mat& vision_tokens, const Mat& text_tokens, const CmaLayerWeights& w,
              int n_heads, double gate);

struct ForwardResult {
    std::vector<Mat> logits;  // per item, [seq, vocab]
    Mat vision_pooled;        // [B, d] mean over vision tokens
    Mat text_pooled;          // [B, d] end-token state of the caption pass
};

/// Full forward pass: vision encoding, perceiver projection, main
/// transformer pass with cross-attention in the configured layers, and a
/// cross-attention-free caption pass for the contrastive heads.
/// `use_cma=false` drops the cross-attention blocks entirely.
ForwardResult forward(const ToyModelParams& params, const Batch& batch, bool use_cma = true);

/// Symmetric InfoNCE over cosine similarities of matched rows.
double info_nce(const Mat& vision_pooled, const Mat& text_pooled, double tau);

/// Mean next-token cross-entropy; targets[i] < 0 is masked.
double autoregressive_loss(const Mat& logits, const std::vector<int>& targets);

struct LossBreakdown {
    double total = 0.0;
    double contrastive = 0.0;
    double autoregressive = 0.0;
};

/// lambda * contrastive + autoregressive, evaluated in one graph.
LossBreakdown total_loss(const ToyModelParams& params, const Batch& batch);

/// Same computation with gradients accumulated into params.tensors[].grad.
LossBreakdown total_loss_backward(ToyModelParams& params, const Batch& batch);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    int coordinates_checked = 0;
};

/// Central finite differences against the analytic gradient on >= min_per_group
/// sampled coordinates per parameter family; gates are always all included.
/// Throws PreconditionViolation for eps <= 0, NonFiniteGradient on NaN/inf.
GradCheckReport grad_check(ToyModelParams& params, const Batch& batch, double eps,
                           int min_per_group = 200, std::uint64_t seed = 0);

/// One multimodal training example.
struct Sample {
    Eigen::RowVectorXd features;  // [raw_vision_dim]
    std::vector<int> tokens;
    std::vector<int> captions;
};

struct TrainOptions {
    int steps = 500;
    int batch_size = 8;
    double learning_rate = 0.3;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> loss_trace;  // total loss per step
};

/// Plain fixed-step gradient descent over the dataset, deterministic for a
/// fixed seed. Throws PreconditionViolation (steps < 1) and DivergedLoss.
TrainResult train(ToyModelParams& params, const std::vector<Sample>& data,
                  const TrainOptions& opts);

/// Greedy byte-level decode conditioned on one image's features.
std::string greedy_decode(const ToyModelParams& params, const Mat& features_row, int bos_token,
                          int max_new_tokens = 50);

// versioned JSON checkpoint: config, seed, named row-major float64 tensors
void save_checkpoint(const ToyModelParams& params, const std::string& path);
ToyModelParams load_checkpoint(const std::string& path);

}  // namespace guard::model
