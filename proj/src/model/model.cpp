#include "guard/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "guard/error.hpp"

namespace guard::model {

using nlohmann::json;

void ToyModelConfig::validate() const {
    if (d_model < 1 || n_heads < 1 || n_layers < 1 || vocab_size < 8 ||
        n_vision_tokens < 1 || raw_vision_dim < 1 || max_seq_len < 2)
        throw InvalidConfig("all model dimensions must be positive");
    if (cma_layers < 0 || cma_layers > n_layers)
        throw InvalidConfig("cma_layers must satisfy 0 <= L <= N");
    if (d_model % n_heads != 0) throw InvalidConfig("d_model must be divisible by n_heads");
    if (tau <= 0.0) throw InvalidConfig("tau must be positive");
    if (lambda < 0.0) throw InvalidConfig("lambda must be nonnegative");
}

std::vector<int> ToyModelConfig::cma_layer_indices() const {
    std::vector<int> out;
    if (cma_layers == 0) return out;
    if (placement == CmaPlacement::Last) {
        for (int l = n_layers - cma_layers; l < n_layers; ++l) out.push_back(l);
    } else {
        if (cma_layers == 1) {
            out.push_back(n_layers / 2);
        } else {
            for (int k = 0; k < cma_layers; ++k)
                out.push_back(static_cast<int>(std::lround(
                    static_cast<double>(k) * (n_layers - 1) / (cma_layers - 1))));
        }
    }
    return out;
}

void ToyModelParams::build_index() const {
    if (!index_.empty()) return;
    for (std::size_t i = 0; i < tensors.size(); ++i)
        index_.emplace(tensors[i].name, static_cast<int>(i));
}

int ToyModelParams::find(const std::string& name) const {
    build_index();
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

Mat& ToyModelParams::get(const std::string& name) {
    const int i = find(name);
    if (i < 0) throw NotFoundError("no tensor named " + name);
    return tensors[static_cast<std::size_t>(i)].value;
}

const Mat& ToyModelParams::get(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw NotFoundError("no tensor named " + name);
    return tensors[static_cast<std::size_t>(i)].value;
}

Mat& ToyModelParams::grad(const std::string& name) {
    const int i = find(name);
    if (i < 0) throw NotFoundError("no tensor named " + name);
    return tensors[static_cast<std::size_t>(i)].grad;
}

void ToyModelParams::zero_grads() {
    for (auto& t : tensors) t.grad.setZero();
}

std::vector<double> ToyModelParams::gates() const {
    std::vector<double> out;
    for (const auto& t : tensors)
        if (t.group == "gate") out.push_back(t.value(0, 0));
    return out;
}

void Batch::validate(const ToyModelConfig& cfg) const {
    const int b = size();
    if (b == 0) throw ShapeMismatch("empty batch");
    if (features.rows() != b || features.cols() != cfg.raw_vision_dim)
        throw ShapeMismatch("feature matrix must be [batch, raw_vision_dim]");
    if (static_cast<int>(captions.size()) != b)
        throw ShapeMismatch("captions and tokens must have equal batch size");
    for (const auto& seq : {std::cref(tokens), std::cref(captions)}) {
        for (const auto& ids : seq.get()) {
            if (ids.size() < 2 || static_cast<int>(ids.size()) > cfg.max_seq_len)
                throw ShapeMismatch("sequence length out of range");
            for (int id : ids)
                if (id < 0 || id >= cfg.vocab_size)
                    throw ShapeMismatch("token id out of vocabulary");
        }
    }
}

ToyModelParams init_model(const ToyModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ToyModelParams p;
    p.config = cfg;
    p.seed = seed;

    std::mt19937_64 rng(seed);

    // fan-in scaling keeps activations and the cross-attention branch at
    // unit magnitude, which the zero-initialized gates need to receive a
    // usable gradient
    auto normal_tensor = [&](const std::string& name, const std::string& group, int rows,
                             int cols) {
        std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gauss(rng);
        p.tensors.push_back({name, group, std::move(m), Mat::Zero(rows, cols)});
    };
    auto fixed_tensor = [&](const std::string& name, const std::string& group, int rows,
                            int cols, double fill) {
        p.tensors.push_back(
            {name, group, Mat::Constant(rows, cols, fill), Mat::Zero(rows, cols)});
    };

    const int d = cfg.d_model;
    normal_tensor("vision_encoder.weight", "vision_encoder", cfg.raw_vision_dim, d);
    normal_tensor("perceiver.weight", "perceiver", d, cfg.n_vision_tokens * d);
    normal_tensor("token_embedding.weight", "token_embedding", cfg.vocab_size, d);
    normal_tensor("pos_embedding.weight", "pos_embedding", cfg.max_seq_len, d);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string base = "layers." + std::to_string(l) + ".";
        fixed_tensor(base + "attn_norm.gain", "norm", 1, d, 1.0);
        for (const char* w : {"wq", "wk", "wv", "wo"})
            normal_tensor(base + "attn." + w, "attn", d, d);
        fixed_tensor(base + "mlp_norm.gain", "norm", 1, d, 1.0);
        normal_tensor(base + "mlp.w1", "mlp", d, 4 * d);
        normal_tensor(base + "mlp.w2", "mlp", 4 * d, d);
    }
    for (int k = 0; k < cfg.cma_layers; ++k) {
        const std::string base = "cma." + std::to_string(k) + ".";
        for (const char* w : {"wq", "wk", "wv", "wo"})
            normal_tensor(base + w, "cma", d, d);
        fixed_tensor(base + "gate", "gate", 1, 1, 0.0);
    }
    fixed_tensor("final_norm.gain", "norm", 1, d, 1.0);
    normal_tensor("lm_head.weight", "lm_head", d, cfg.vocab_size);
    return p;
}

namespace {

using NodeId = Graph::NodeId;

struct Bound {
    Graph* g = nullptr;
    const ToyModelParams* params = nullptr;
    std::map<std::string, NodeId> ids;

    NodeId operator[](const std::string& name) const {
        auto it = ids.find(name);
        if (it == ids.end()) throw NotFoundError("unbound tensor " + name);
        return it->second;
    }
};

Bound bind_params(Graph& g, const ToyModelParams& params, ToyModelParams* grad_sink) {
    Bound b;
    b.g = &g;
    b.params = &params;
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        const Tensor& t = params.tensors[i];
        if (grad_sink != nullptr) {
            b.ids[t.name] = g.leaf(t.value, &grad_sink->tensors[i].grad);
        } else {
            b.ids[t.name] = g.constant(t.value);
        }
    }
    return b;
}

NodeId multihead_attention(Graph& g, NodeId queries_in, NodeId keys_values_in, NodeId wq,
                           NodeId wk, NodeId wv, NodeId wo, int n_heads, bool causal) {
    const NodeId q = g.matmul(queries_in, wq);
    const NodeId k = g.matmul(keys_values_in, wk);
    const NodeId v = g.matmul(keys_values_in, wv);
    const int d = static_cast<int>(g.value(q).cols());
    const int dh = d / n_heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<NodeId> heads;
    heads.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        const NodeId qh = g.slice_cols(q, h * dh, dh);
        const NodeId kh = g.slice_cols(k, h * dh, dh);
        const NodeId vh = g.slice_cols(v, h * dh, dh);
        const NodeId scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_scale);
        const NodeId probs = g.row_softmax(scores, causal);
        heads.push_back(g.matmul(probs, vh));
    }
    return g.matmul(g.concat_cols(heads), wo);
}

/// text = text + gate * cross_attention(text -> vision)
NodeId apply_cma(Graph& g, const Bound& b, int slot, NodeId text, NodeId vision, int n_heads) {
    const std::string base = "cma." + std::to_string(slot) + ".";
    const NodeId branch =
        multihead_attention(g, text, vision, b[base + "wq"], b[base + "wk"], b[base + "wv"],
                            b[base + "wo"], n_heads, /*causal=*/false);
    return g.add(text, g.scale_by(branch, b[base + "gate"]));
}

/// Main stack; `vision` empty (< 0) disables cross-attention. Returns the
/// final hidden state [S, d] after the last norm.
NodeId transformer_pass(Graph& g, const Bound& b, const ToyModelConfig& cfg,
                        const std::vector<int>& token_ids, NodeId vision) {
    const int seq = static_cast<int>(token_ids.size());
    NodeId x = g.add(g.gather_rows(b["token_embedding.weight"], token_ids),
                     g.slice_rows(b["pos_embedding.weight"], 0, seq));

    std::vector<int> slot_of_layer(static_cast<std::size_t>(cfg.n_layers), -1);
    if (vision >= 0) {
        const auto layers = cfg.cma_layer_indices();
        for (std::size_t k = 0; k < layers.size(); ++k)
            slot_of_layer[static_cast<std::size_t>(layers[k])] = static_cast<int>(k);
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string base = "layers." + std::to_string(l) + ".";
        const NodeId normed = g.rms_norm(x, b[base + "attn_norm.gain"]);
        x = g.add(x, multihead_attention(g, normed, normed, b[base + "attn.wq"],
                                         b[base + "attn.wk"], b[base + "attn.wv"],
                                         b[base + "attn.wo"], cfg.n_heads, /*causal=*/true));
        if (slot_of_layer[static_cast<std::size_t>(l)] >= 0)
            x = apply_cma(g, b, slot_of_layer[static_cast<std::size_t>(l)], x, vision,
                          cfg.n_heads);
        const NodeId normed2 = g.rms_norm(x, b[base + "mlp_norm.gain"]);
        x = g.add(x, g.matmul(g.gelu(g.matmul(normed2, b[base + "mlp.w1"])),
                              b[base + "mlp.w2"]));
    }
    return g.rms_norm(x, b["final_norm.gain"]);
}

/// Encoded + projected vision tokens [n_vision_tokens, d] for batch item i.
NodeId vision_tokens_for(Graph& g, const Bound& b, const ToyModelConfig& cfg,
                         NodeId features, int item) {
    const NodeId row = g.slice_rows(features, item, 1);
    const NodeId encoded = g.gelu(g.matmul(row, b["vision_encoder.weight"]));
    const NodeId flat = g.matmul(encoded, b["perceiver.weight"]);
    return g.reshape_row(flat, cfg.n_vision_tokens, cfg.d_model);
}

struct BuiltForward {
    std::vector<NodeId> logits;
    NodeId vision_pooled = -1;
    NodeId text_pooled = -1;
};

BuiltForward build_forward(Graph& g, const Bound& b, const ToyModelConfig& cfg,
                           const Batch& batch, bool use_cma) {
    batch.validate(cfg);
    const NodeId features = g.constant(batch.features);
    BuiltForward out;
    std::vector<NodeId> vbars, tbars;
    for (int i = 0; i < batch.size(); ++i) {
        const NodeId vis = vision_tokens_for(g, b, cfg, features, i);
        vbars.push_back(g.mean_rows(vis));

        const NodeId hidden = transformer_pass(g, b, cfg, batch.tokens[(std::size_t)i],
                                               use_cma ? vis : -1);
        out.logits.push_back(g.matmul(hidden, b["lm_head.weight"]));

        // caption pass never sees vision; its end-token state is the text side
        // of the contrastive pair
        const auto& cap = batch.captions[(std::size_t)i];
        const NodeId cap_hidden = transformer_pass(g, b, cfg, cap, -1);
        tbars.push_back(g.slice_rows(cap_hidden, static_cast<int>(cap.size()) - 1, 1));
    }
    out.vision_pooled = g.concat_rows(vbars);
    out.text_pooled = g.concat_rows(tbars);
    return out;
}

NodeId build_info_nce(Graph& g, NodeId vision_pooled, NodeId text_pooled, double tau) {
    if (tau <= 0.0) throw PreconditionViolation("tau must be positive");
    const int batch = static_cast<int>(g.value(vision_pooled).rows());
    const NodeId vn = g.l2_normalize_rows(vision_pooled);
    const NodeId tn = g.l2_normalize_rows(text_pooled);
    const NodeId sim = g.scale(g.matmul(vn, g.transpose(tn)), 1.0 / tau);
    std::vector<int> diag(static_cast<std::size_t>(batch));
    std::iota(diag.begin(), diag.end(), 0);
    const NodeId v2t = g.cross_entropy_rows(sim, diag);
    const NodeId t2v = g.cross_entropy_rows(g.transpose(sim), diag);
    return g.scale(g.add(v2t, t2v), 0.5);
}

std::vector<int> next_token_targets(const std::vector<int>& tokens) {
    std::vector<int> targets(tokens.size(), -1);
    for (std::size_t t = 0; t + 1 < tokens.size(); ++t)
        targets[t] = tokens[t + 1] == kPadToken ? -1 : tokens[t + 1];
    return targets;
}

struct BuiltLoss {
    NodeId total = -1;
    NodeId contrastive = -1;
    NodeId autoregressive = -1;
};

BuiltLoss build_total_loss(Graph& g, const Bound& b, const ToyModelParams& params,
                           const Batch& batch) {
    const auto fwd = build_forward(g, b, params.config, batch, /*use_cma=*/true);
    std::vector<NodeId> logit_parts;
    std::vector<int> targets;
    for (int i = 0; i < batch.size(); ++i) {
        logit_parts.push_back(fwd.logits[(std::size_t)i]);
        const auto t = next_token_targets(batch.tokens[(std::size_t)i]);
        targets.insert(targets.end(), t.begin(), t.end());
    }
    BuiltLoss out;
    out.autoregressive = g.cross_entropy_rows(g.concat_rows(logit_parts), std::move(targets));
    out.contrastive = build_info_nce(g, fwd.vision_pooled, fwd.text_pooled, params.config.tau);
    out.total = g.add(g.scale(out.contrastive, params.config.lambda), out.autoregressive);
    return out;
}

}  // namespace

Mat cma_block(const Mat& vision_tokens, const Mat& text_tokens, const CmaLayerWeights& w,
              int n_heads, double gate) {
    const auto d = text_tokens.cols();
    if (vision_tokens.cols() != d) throw ShapeMismatch("vision/text model dims differ");
    if (w.wq.rows() != d || w.wk.rows() != d || w.wv.rows() != d || w.wo.rows() != d)
        throw ShapeMismatch("projection shapes must be [d, d]");
    if (n_heads < 1 || d % n_heads != 0) throw ShapeMismatch("head count must divide d");
    if (gate == 0.0) return text_tokens;  // gated branch contributes nothing

    Graph g;
    const NodeId text = g.constant(text_tokens);
    const NodeId vision = g.constant(vision_tokens);
    const NodeId branch = multihead_attention(
        g, text, vision, g.constant(w.wq), g.constant(w.wk), g.constant(w.wv),
        g.constant(w.wo), n_heads, /*causal=*/false);
    const NodeId out = g.add(text, g.scale(branch, gate));
    return g.value(out);
}

ForwardResult forward(const ToyModelParams& params, const Batch& batch, bool use_cma) {
    Graph g;
    const Bound b = bind_params(g, params, nullptr);
    const auto built = build_forward(g, b, params.config, batch, use_cma);
    ForwardResult out;
    for (NodeId id : built.logits) out.logits.push_back(g.value(id));
    out.vision_pooled = g.value(built.vision_pooled);
    out.text_pooled = g.value(built.text_pooled);
    return out;
}

double info_nce(const Mat& vision_pooled, const Mat& text_pooled, double tau) {
    if (vision_pooled.rows() != text_pooled.rows() ||
        vision_pooled.cols() != text_pooled.cols())
        throw ShapeMismatch("pooled matrices must have equal shapes");
    if (vision_pooled.rows() < 1) throw ShapeMismatch("empty batch");
    Graph g;
    return g.value(build_info_nce(g, g.constant(vision_pooled), g.constant(text_pooled), tau))(
        0, 0);
}

double autoregressive_loss(const Mat& logits, const std::vector<int>& targets) {
    Graph g;
    return g.value(g.cross_entropy_rows(g.constant(logits), targets))(0, 0);
}

LossBreakdown total_loss(const ToyModelParams& params, const Batch& batch) {
    Graph g;
    const Bound b = bind_params(g, params, nullptr);
    const auto built = build_total_loss(g, b, params, batch);
    return {g.value(built.total)(0, 0), g.value(built.contrastive)(0, 0),
            g.value(built.autoregressive)(0, 0)};
}

LossBreakdown total_loss_backward(ToyModelParams& params, const Batch& batch) {
    Graph g;
    const Bound b = bind_params(g, params, &params);
    const auto built = build_total_loss(g, b, params, batch);
    g.backward(built.total);
    return {g.value(built.total)(0, 0), g.value(built.contrastive)(0, 0),
            g.value(built.autoregressive)(0, 0)};
}

GradCheckReport grad_check(ToyModelParams& params, const Batch& batch, double eps,
                           int min_per_group, std::uint64_t seed) {
    if (eps <= 0.0) throw PreconditionViolation("eps must be positive");
    params.zero_grads();
    total_loss_backward(params, batch);
    for (const auto& t : params.tensors)
        if (!t.grad.allFinite()) throw NonFiniteGradient("non-finite gradient in " + t.name);

    // coordinate pool per parameter family
    std::map<std::string, std::vector<std::pair<int, Eigen::Index>>> pools;
    for (std::size_t i = 0; i < params.tensors.size(); ++i)
        for (Eigen::Index j = 0; j < params.tensors[i].value.size(); ++j)
            pools[params.tensors[i].group].emplace_back(static_cast<int>(i), j);

    std::mt19937_64 rng(seed);
    GradCheckReport report;
    for (auto& [group, coords] : pools) {
        if (group != "gate" && static_cast<int>(coords.size()) > min_per_group) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(static_cast<std::size_t>(min_per_group));
        }
        for (const auto& [ti, flat] : coords) {
            Tensor& t = params.tensors[static_cast<std::size_t>(ti)];
            double* cell = t.value.data() + flat;
            const double orig = *cell;
            *cell = orig + eps;
            const double lp = total_loss(params, batch).total;
            *cell = orig - eps;
            const double lm = total_loss(params, batch).total;
            *cell = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double analytic = *(t.grad.data() + flat);
            const double rel = std::abs(fd - analytic) /
                               std::max({1.0, std::abs(fd), std::abs(analytic)});
            ++report.coordinates_checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = t.name;
            }
        }
    }
    return report;
}

TrainResult train(ToyModelParams& params, const std::vector<Sample>& data,
                  const TrainOptions& opts) {
    if (opts.steps < 1) throw PreconditionViolation("steps must be >= 1");
    if (data.empty()) throw PreconditionViolation("empty dataset");
    if (opts.batch_size < 1) throw PreconditionViolation("batch_size must be >= 1");

    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(opts.steps));
    const int bsz = std::min<int>(opts.batch_size, static_cast<int>(data.size()));
    for (int step = 0; step < opts.steps; ++step) {
        Batch batch;
        batch.features.resize(bsz, params.config.raw_vision_dim);
        for (int i = 0; i < bsz; ++i) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const Sample& s = data[order[cursor++]];
            batch.features.row(i) = s.features;
            batch.tokens.push_back(s.tokens);
            batch.captions.push_back(s.captions);
        }
        params.zero_grads();
        const LossBreakdown loss = total_loss_backward(params, batch);
        if (!std::isfinite(loss.total))
            throw DivergedLoss("loss diverged at step " + std::to_string(step));
        for (auto& t : params.tensors) t.value -= opts.learning_rate * t.grad;
        result.loss_trace.push_back(loss.total);
    }
    return result;
}

std::string greedy_decode(const ToyModelParams& params, const Mat& features_row, int bos_token,
                          int max_new_tokens) {
    if (features_row.rows() != 1 || features_row.cols() != params.config.raw_vision_dim)
        throw ShapeMismatch("expected a [1, raw_vision_dim] feature row");
    std::vector<int> tokens{bos_token};
    std::string text;
    const int limit = std::min(max_new_tokens, params.config.max_seq_len - 1);
    for (int step = 0; step < limit; ++step) {
        Graph g;
        const Bound b = bind_params(g, params, nullptr);
        const NodeId vis = vision_tokens_for(g, b, params.config, g.constant(features_row), 0);
        const NodeId hidden = transformer_pass(g, b, params.config, tokens, vis);
        const NodeId logits = g.matmul(hidden, b["lm_head.weight"]);
        const Mat& l = g.value(logits);
        Eigen::Index next = 0;
        l.row(l.rows() - 1).maxCoeff(&next);
        if (next == kEosToken) break;
        tokens.push_back(static_cast<int>(next));
        if ((next >= 32 && next < 127) || next == '\n')
            text.push_back(static_cast<char>(next));
    }
    return text;
}

void save_checkpoint(const ToyModelParams& params, const std::string& path) {
    json doc;
    doc["version"] = 1;
    doc["seed"] = params.seed;
    doc["config"] = {{"d_model", params.config.d_model},
                     {"n_heads", params.config.n_heads},
                     {"n_layers", params.config.n_layers},
                     {"cma_layers", params.config.cma_layers},
                     {"vocab_size", params.config.vocab_size},
                     {"n_vision_tokens", params.config.n_vision_tokens},
                     {"raw_vision_dim", params.config.raw_vision_dim},
                     {"max_seq_len", params.config.max_seq_len},
                     {"tau", params.config.tau},
                     {"lambda", params.config.lambda},
                     {"placement", params.config.placement == CmaPlacement::Last
                                       ? "last"
                                       : "evenly-spaced"}};
    json tensors = json::object();
    for (const auto& t : params.tensors) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(t.value.size()));
        for (Eigen::Index i = 0; i < t.value.rows(); ++i)
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) data.push_back(t.value(i, j));
        tensors[t.name] = {{"rows", t.value.rows()}, {"cols", t.value.cols()},
                           {"data", std::move(data)}};
    }
    doc["tensors"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw FatalIO("cannot write checkpoint " + path);
    out << doc.dump();
    if (!out) throw FatalIO("checkpoint write failed");
}

ToyModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalIO("cannot open checkpoint " + path);
    json doc;
    try {
        in >> doc;
        if (doc.at("version").get<int>() != 1) throw SchemaError("unknown checkpoint version");
        ToyModelConfig cfg;
        const auto& jc = doc.at("config");
        cfg.d_model = jc.at("d_model").get<int>();
        cfg.n_heads = jc.at("n_heads").get<int>();
        cfg.n_layers = jc.at("n_layers").get<int>();
        cfg.cma_layers = jc.at("cma_layers").get<int>();
        cfg.vocab_size = jc.at("vocab_size").get<int>();
        cfg.n_vision_tokens = jc.at("n_vision_tokens").get<int>();
        cfg.raw_vision_dim = jc.at("raw_vision_dim").get<int>();
        cfg.max_seq_len = jc.at("max_seq_len").get<int>();
        cfg.tau = jc.at("tau").get<double>();
        cfg.lambda = jc.at("lambda").get<double>();
        cfg.placement = jc.at("placement").get<std::string>() == "last"
                            ? CmaPlacement::Last
                            : CmaPlacement::EvenlySpaced;
        ToyModelParams params = init_model(cfg, doc.at("seed").get<std::uint64_t>());
        for (auto& t : params.tensors) {
            const auto& jt = doc.at("tensors").at(t.name);
            const auto rows = jt.at("rows").get<Eigen::Index>();
            const auto cols = jt.at("cols").get<Eigen::Index>();
            if (rows != t.value.rows() || cols != t.value.cols())
                throw SchemaError("checkpoint tensor shape mismatch for " + t.name);
            const auto& data = jt.at("data");
            if (static_cast<Eigen::Index>(data.size()) != rows * cols)
                throw SchemaError("checkpoint tensor size mismatch for " + t.name);
            std::size_t at = 0;
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j)
                    t.value(i, j) = data[at++].get<double>();
        }
        return params;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad checkpoint: ") + e.what());
    }
}

}  // namespace guard::model
