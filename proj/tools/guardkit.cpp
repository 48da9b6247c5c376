// guardkit: command-line frontend for the text-to-image safety evaluation
// toolkit. One verb per module operation cluster; everything scriptable.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "guard/annotation.hpp"
#include "guard/bench.hpp"
#include "guard/dedup.hpp"
#include "guard/embedding.hpp"
#include "guard/error.hpp"
#include "guard/jsonl.hpp"
#include "guard/metrics.hpp"
#include "guard/model/model.hpp"
#include "guard/model/synthetic.hpp"
#include "guard/prompts.hpp"
#include "guard/scoring.hpp"
#include "guard/taxonomy.hpp"

using nlohmann::json;

namespace {

guard::Taxonomy load_taxonomy_arg(const std::string& file) {
    if (file.empty()) return guard::Taxonomy::built_in();
    return guard::Taxonomy::from_file(file);
}

std::vector<double> parse_probs(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::string> parse_labels(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw guard::FatalIO("cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

guard::model::Mat features_from_file(const std::string& path, int expected_dim) {
    std::ifstream in(path);
    if (!in) throw guard::FatalIO("cannot open " + path);
    json doc;
    try {
        in >> doc;
        const auto values = doc.at("features").get<std::vector<double>>();
        if (expected_dim >= 0 && static_cast<int>(values.size()) != expected_dim)
            throw guard::ShapeMismatch("feature file has dim " +
                                       std::to_string(values.size()) + ", expected " +
                                       std::to_string(expected_dim));
        guard::model::Mat row(1, static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i)
            row(0, static_cast<Eigen::Index>(i)) = values[i];
        return row;
    } catch (const json::exception& e) {
        throw guard::SchemaError(std::string("bad feature file: ") + e.what());
    }
}

struct TaxonomyOptions {
    std::string file;
    std::string format = "console";
};

void add_taxonomy_commands(CLI::App& app, TaxonomyOptions& o) {
    auto* taxonomy = app.add_subcommand("taxonomy", "inspect and validate taxonomy files");
    taxonomy->require_subcommand(1);

    auto* validate = taxonomy->add_subcommand("validate", "validate a taxonomy document");
    validate->add_option("--file", o.file, "taxonomy JSON (defaults to the built-in)");
    validate->callback([&o] {
        const auto tax = load_taxonomy_arg(o.file);
        std::cout << "taxonomy OK: " << tax.domains().size() << " domains, "
                  << tax.total_tasks() << " tasks, " << tax.total_categories()
                  << " categories\n";
    });

    auto* show = taxonomy->add_subcommand("show", "print the taxonomy");
    show->add_option("--file", o.file, "taxonomy JSON (defaults to the built-in)");
    show->add_option("--format", o.format, "console or json")
        ->check(CLI::IsMember({"console", "json"}));
    show->callback([&o] {
        const auto tax = load_taxonomy_arg(o.file);
        if (o.format == "json") {
            std::cout << tax.to_json() << "\n";
            return;
        }
        for (const auto& d : tax.domains()) {
            std::cout << d.name << "\n";
            for (const auto& t : d.tasks) {
                std::cout << "  " << t.name << "\n";
                for (const auto& c : t.categories) std::cout << "    " << c.name << "\n";
            }
        }
    });
}

struct PromptOptions {
    std::string in, out, dropped, votes, descriptors, taxonomy_file, embed_url;
    std::vector<std::string> labeler_urls;
    double threshold = 0.95;
    int bands = 16;
    int rows = 8;
    std::uint64_t seed = 0;
    int required = 3;
};

void add_prompt_commands(CLI::App& app, PromptOptions& o) {
    auto* prompts = app.add_subcommand("prompts", "prompt pipeline operations");
    prompts->require_subcommand(1);

    auto* filter = prompts->add_subcommand("filter", "drop junk prompts");
    filter->add_option("--in", o.in, "input prompts JSONL")->required();
    filter->add_option("--out", o.out, "output JSONL of kept prompts")->required();
    filter->add_option("--dropped", o.dropped, "optional JSONL of dropped prompts");
    filter->callback([&o] {
        const auto records = guard::prompts::load_records(o.in);
        std::vector<guard::prompts::PromptRecord> kept, dropped;
        for (auto r : records) {
            const auto decision = guard::prompts::junk_filter(r.text);
            if (decision.keep) {
                if (r.status < guard::prompts::PromptStatus::Filtered)
                    r.status = guard::prompts::PromptStatus::Filtered;
                kept.push_back(std::move(r));
            } else {
                r.source += ";dropped=" + std::string(to_string(*decision.reason));
                dropped.push_back(std::move(r));
            }
        }
        guard::prompts::save_records(o.out, kept);
        if (!o.dropped.empty()) guard::prompts::save_records(o.dropped, dropped);
        std::cout << "kept " << kept.size() << " dropped " << dropped.size() << "\n";
    });

    auto* dedupe = prompts->add_subcommand("dedupe", "near-duplicate removal");
    dedupe->add_option("--in", o.in)->required();
    dedupe->add_option("--out", o.out)->required();
    dedupe->add_option("--dropped", o.dropped, "optional JSONL of merged prompts");
    dedupe->add_option("--threshold", o.threshold, "cosine duplicate threshold");
    dedupe->add_option("--bands", o.bands);
    dedupe->add_option("--rows", o.rows);
    dedupe->add_option("--seed", o.seed);
    dedupe->add_option("--embed-url", o.embed_url,
                       "remote embedding endpoint (offline 3-gram hashing by default)");
    dedupe->callback([&o] {
        const auto records = guard::prompts::load_records(o.in);
        if (records.empty()) throw guard::EmptyRecords("no prompts in " + o.in);
        std::unique_ptr<guard::prompts::EmbeddingProvider> provider;
        if (o.embed_url.empty())
            provider = std::make_unique<guard::prompts::HashedNgramProvider>();
        else
            provider = std::make_unique<guard::prompts::RemoteEmbeddingProvider>(o.embed_url);
        std::vector<guard::prompts::EmbeddingVector> embeddings;
        embeddings.reserve(records.size());
        for (const auto& r : records)
            embeddings.push_back(guard::prompts::embed(r.text, *provider));
        guard::prompts::DedupOptions opts;
        opts.threshold = o.threshold;
        opts.bands = o.bands;
        opts.rows = o.rows;
        opts.seed = o.seed;
        const auto result = guard::prompts::lsh_dedup(records, embeddings, opts);
        guard::prompts::save_records(o.out, result.retained);
        if (!o.dropped.empty()) guard::prompts::save_records(o.dropped, result.dropped);
        std::cout << "retained " << result.retained.size() << " merged "
                  << result.dropped.size() << "\n";
    });

    auto* label = prompts->add_subcommand("label", "consensus auto-labeling");
    label->add_option("--in", o.in)->required();
    label->add_option("--out", o.out)->required();
    label->add_option("--votes", o.votes,
                      "JSONL of recorded labeler responses "
                      "{prompt_id, labeler_id, response}");
    label->add_option("--labeler-url", o.labeler_urls,
                      "labeler endpoint (repeat; one call per endpoint per prompt)");
    label->add_option("--required", o.required, "votes required for consensus");
    label->add_option("--taxonomy", o.taxonomy_file);
    label->callback([&o] {
        const auto tax = load_taxonomy_arg(o.taxonomy_file);
        auto records = guard::prompts::load_records(o.in);

        std::map<std::string, std::vector<std::pair<std::string, std::string>>> votes;
        if (!o.votes.empty()) {
            for (const auto& j : guard::jsonl::read_file(o.votes))
                votes[j.at("prompt_id").get<std::string>()].emplace_back(
                    j.value("labeler_id", "labeler"), j.at("response").get<std::string>());
        } else if (!o.labeler_urls.empty()) {
            std::vector<std::string> categories;
            for (const auto* task : tax.unsafe_tasks())
                for (const auto& c : task->categories) categories.push_back(c.name);
            categories.push_back("Safe");
            for (const auto& r : records) {
                const std::string instruction =
                    guard::prompts::render_classification_prompt(categories, r.text);
                for (const auto& url : o.labeler_urls) {
                    guard::scoring::BackendEndpoint ep;
                    ep.base_url = url;
                    votes[r.id].emplace_back(url,
                                             guard::scoring::remote_complete(ep, instruction));
                }
            }
        } else {
            throw guard::PreconditionViolation("need --votes or --labeler-url");
        }

        int labeled = 0, unlabeled = 0, unparseable = 0;
        for (auto& r : records) {
            auto it = votes.find(r.id);
            if (it == votes.end()) {
                ++unlabeled;
                continue;
            }
            std::vector<guard::prompts::LabelVote> parsed;
            bool parse_failed = false;
            for (const auto& [labeler, response] : it->second) {
                try {
                    auto vote = guard::prompts::parse_labeler_response(response, tax);
                    vote.labeler_id = labeler;
                    parsed.push_back(std::move(vote));
                } catch (const guard::Error&) {
                    parse_failed = true;
                }
            }
            if (parse_failed || static_cast<int>(parsed.size()) != o.required) {
                ++unparseable;
                continue;
            }
            const auto consensus = guard::prompts::consensus_label(parsed, o.required);
            if (!consensus) {
                ++unlabeled;
                continue;
            }
            guard::prompts::PromptLabel lab;
            if (!consensus->unsafe) {
                lab = {"Safe", "Safe", false};
            } else if (const auto* task = tax.find_task(consensus->category)) {
                lab = {task->name, "", true};
            } else {
                lab = {tax.lookup_category(consensus->category).task, consensus->category,
                       true};
            }
            r.label = lab;
            r.status = guard::prompts::PromptStatus::Labeled;
            ++labeled;
        }
        guard::prompts::save_records(o.out, records);
        std::cout << "labeled " << labeled << " unlabeled " << unlabeled << " unparseable "
                  << unparseable << "\n";
    });

    auto* fairness = prompts->add_subcommand("gen-fairness", "fairness prompt generation");
    fairness->add_option("--descriptors", o.descriptors, "text file, one descriptor per line")
        ->required();
    fairness->add_option("--out", o.out)->required();
    fairness->callback([&o] {
        const auto records =
            guard::prompts::generate_fairness_prompts(read_lines(o.descriptors));
        guard::prompts::save_records(o.out, records);
        std::cout << "generated " << records.size() << " prompts\n";
    });

    auto* geneval = prompts->add_subcommand(
        "gen-eval-set", "synthetic evaluation prompt set in the reference shape");
    geneval->add_option("--out", o.out)->required();
    geneval->add_option("--seed", o.seed);
    geneval->add_option("--taxonomy", o.taxonomy_file);
    geneval->callback([&o] {
        const auto tax = load_taxonomy_arg(o.taxonomy_file);
        const auto records = guard::bench::make_reference_shaped_prompt_set(tax, o.seed);
        guard::prompts::save_records(o.out, records);
        std::cout << "generated " << records.size() << " prompts\n";
    });
}

struct AnnotateOptions {
    std::string in, out, auto_file, human_file, taxonomy_file;
};

void add_annotate_commands(CLI::App& app, AnnotateOptions& o) {
    auto* annotate = app.add_subcommand("annotate", "two-round annotation resolution");
    annotate->require_subcommand(1);

    auto* resolve = annotate->add_subcommand("resolve", "resolve annotation files");
    resolve->add_option("--in", o.in, "annotation JSONL")->required();
    resolve->add_option("--out", o.out, "resolved JSONL")->required();
    resolve->add_option("--taxonomy", o.taxonomy_file);
    resolve->callback([&o] {
        const auto tax = load_taxonomy_arg(o.taxonomy_file);
        const auto images = guard::annot::load_annotations(o.in, tax);
        const auto resolved = guard::annot::resolve_file(images);
        std::ofstream out(o.out);
        if (!out) throw guard::FatalIO("cannot write " + o.out);
        int unresolved = 0;
        for (const auto& r : resolved) {
            out << guard::annot::resolved_to_json(r) << "\n";
            if (r.label.resolution == guard::annot::Resolution::Unresolved) ++unresolved;
        }
        std::cout << "resolved " << resolved.size() - unresolved << " unresolved "
                  << unresolved << "\n";
    });

    auto* consistency = annotate->add_subcommand("consistency",
                                                 "auto/human label agreement rate");
    consistency->add_option("--auto", o.auto_file, "text file, one label per line")
        ->required();
    consistency->add_option("--human", o.human_file, "text file, one label per line")
        ->required();
    consistency->callback([&o] {
        const double rate = guard::annot::consistency_rate(read_lines(o.auto_file),
                                                           read_lines(o.human_file));
        std::printf("%.4f\n", rate);
    });
}

struct MetricsOptions {
    std::string probs, preds, golds, positive, r1, r2;
    std::int64_t safe = 0, unsafe_count = 0, excluded = 0;
};

void add_metrics_commands(CLI::App& app, MetricsOptions& o) {
    auto* metrics = app.add_subcommand("metrics", "numeric metric kernels");
    metrics->require_subcommand(1);

    auto* nkl = metrics->add_subcommand("nkl", "normalized KL divergence vs uniform");
    nkl->add_option("--probs", o.probs, "comma-separated probabilities")->required();
    nkl->callback([&o] {
        const guard::metrics::CategoricalDistribution p(parse_probs(o.probs));
        std::printf("%.6f\n", guard::metrics::nkl_uniform(p));
    });

    auto* rate = metrics->add_subcommand("safety-rate", "safe / (safe + unsafe)");
    rate->add_option("--safe", o.safe)->required();
    rate->add_option("--unsafe", o.unsafe_count)->required();
    rate->add_option("--excluded", o.excluded);
    rate->callback([&o] {
        guard::metrics::JudgmentTally tally;
        tally.safe_count = o.safe;
        if (o.unsafe_count > 0) tally.unsafe_counts["unsafe"] = o.unsafe_count;
        tally.excluded_count = o.excluded;
        std::printf("%.6f\n", guard::metrics::safety_rate(tally));
    });

    auto* f1 = metrics->add_subcommand("f1", "F1 with a designated positive label");
    f1->add_option("--preds", o.preds, "comma-separated labels")->required();
    f1->add_option("--golds", o.golds, "comma-separated labels")->required();
    f1->add_option("--positive", o.positive)->required();
    f1->callback([&o] {
        std::printf("%.6f\n", guard::metrics::f1_score(parse_labels(o.preds),
                                                       parse_labels(o.golds), o.positive));
    });

    auto* kappa = metrics->add_subcommand("kappa", "Cohen's kappa between two raters");
    kappa->add_option("--r1", o.r1, "comma-separated labels")->required();
    kappa->add_option("--r2", o.r2, "comma-separated labels")->required();
    kappa->callback([&o] {
        std::printf("%.6f\n",
                    guard::metrics::cohen_kappa(parse_labels(o.r1), parse_labels(o.r2)));
    });
}

struct ModelOptions {
    std::string ckpt, out, trace, features, mode = "safety", data = "safety";
    std::string placement = "last";
    guard::model::ToyModelConfig config;
    std::uint64_t seed = 0;
    int steps = 500;
    int batch = 8;
    double lr = 0.3;
    int samples = 96;
    std::uint64_t data_seed = 11;
    double eps = 1e-3;
    int min_per_group = 200;
};

void add_config_flags(CLI::App* cmd, ModelOptions& o) {
    cmd->add_option("--d-model", o.config.d_model);
    cmd->add_option("--heads", o.config.n_heads);
    cmd->add_option("--layers", o.config.n_layers);
    cmd->add_option("--cma-layers", o.config.cma_layers);
    cmd->add_option("--vocab", o.config.vocab_size);
    cmd->add_option("--vision-tokens", o.config.n_vision_tokens);
    cmd->add_option("--raw-dim", o.config.raw_vision_dim);
    cmd->add_option("--max-seq", o.config.max_seq_len);
    cmd->add_option("--tau", o.config.tau);
    cmd->add_option("--lambda", o.config.lambda,
                    "contrastive weight (0.01 default, 0.1 strong preset)");
    cmd->add_option("--placement", o.placement, "cma placement: last or evenly-spaced")
        ->check(CLI::IsMember({"last", "evenly-spaced"}));
}

guard::model::SyntheticKind kind_of(const std::string& s) {
    return s == "fairness" ? guard::model::SyntheticKind::Fairness
                           : guard::model::SyntheticKind::Safety;
}

void add_model_commands(CLI::App& app, ModelOptions& o) {
    auto* model = app.add_subcommand("model", "toy multimodal evaluator core");
    model->require_subcommand(1);

    auto* init = model->add_subcommand("init", "initialize a checkpoint");
    init->add_option("--out", o.out)->required();
    init->add_option("--seed", o.seed);
    add_config_flags(init, o);
    init->callback([&o] {
        o.config.placement = o.placement == "last"
                                 ? guard::model::CmaPlacement::Last
                                 : guard::model::CmaPlacement::EvenlySpaced;
        const auto params = guard::model::init_model(o.config, o.seed);
        guard::model::save_checkpoint(params, o.out);
        std::cout << "initialized " << params.tensors.size() << " tensors\n";
    });

    auto* train = model->add_subcommand("train", "train on the bundled synthetic task");
    train->add_option("--ckpt", o.ckpt)->required();
    train->add_option("--out", o.out)->required();
    train->add_option("--steps", o.steps);
    train->add_option("--lr", o.lr);
    train->add_option("--batch", o.batch);
    train->add_option("--seed", o.seed);
    train->add_option("--data", o.data, "synthetic task kind: safety or fairness")
        ->check(CLI::IsMember({"safety", "fairness"}));
    train->add_option("--samples", o.samples);
    train->add_option("--data-seed", o.data_seed);
    train->add_option("--trace", o.trace, "write per-step loss CSV");
    train->callback([&o] {
        auto params = guard::model::load_checkpoint(o.ckpt);
        guard::model::SyntheticSpec spec;
        spec.kind = kind_of(o.data);
        spec.samples = o.samples;
        spec.raw_vision_dim = params.config.raw_vision_dim;
        spec.seed = o.data_seed;
        const auto data = guard::model::make_synthetic_dataset(spec);
        guard::model::TrainOptions opts;
        opts.steps = o.steps;
        opts.batch_size = o.batch;
        opts.learning_rate = o.lr;
        opts.seed = o.seed;
        const auto result = guard::model::train(params, data, opts);
        guard::model::save_checkpoint(params, o.out);
        if (!o.trace.empty()) {
            std::ofstream trace(o.trace);
            if (!trace) throw guard::FatalIO("cannot write " + o.trace);
            trace << "step,total_loss\n";
            for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
                trace << i << ',' << result.loss_trace[i] << "\n";
        }
        double max_gate = 0.0;
        for (double g : params.gates()) max_gate = std::max(max_gate, std::abs(g));
        std::printf("loss %.4f -> %.4f over %d steps, max|gate| %.5f\n",
                    result.loss_trace.front(), result.loss_trace.back(), o.steps, max_gate);
    });

    auto* gradcheck = model->add_subcommand(
        "gradcheck", "analytic vs central finite-difference gradients");
    gradcheck->add_option("--ckpt", o.ckpt, "checkpoint (a fresh init when omitted)");
    gradcheck->add_option("--eps", o.eps);
    gradcheck->add_option("--min-per-group", o.min_per_group);
    gradcheck->add_option("--seed", o.seed);
    gradcheck->add_option("--batch", o.batch);
    add_config_flags(gradcheck, o);
    gradcheck->callback([&o] {
        guard::model::ToyModelParams params;
        if (!o.ckpt.empty()) {
            params = guard::model::load_checkpoint(o.ckpt);
        } else {
            o.config.placement = o.placement == "last"
                                     ? guard::model::CmaPlacement::Last
                                     : guard::model::CmaPlacement::EvenlySpaced;
            params = guard::model::init_model(o.config, o.seed);
        }
        guard::model::SyntheticSpec spec;
        spec.samples = std::max(2, o.batch);
        spec.raw_vision_dim = params.config.raw_vision_dim;
        spec.seed = o.data_seed;
        const auto data = guard::model::make_synthetic_dataset(spec);
        guard::model::Batch batch;
        const int b = std::min<int>(std::max(2, o.batch), static_cast<int>(data.size()));
        batch.features.resize(b, params.config.raw_vision_dim);
        for (int i = 0; i < b; ++i) {
            batch.features.row(i) = data[static_cast<std::size_t>(i)].features;
            batch.tokens.push_back(data[static_cast<std::size_t>(i)].tokens);
            batch.captions.push_back(data[static_cast<std::size_t>(i)].captions);
        }
        const auto report =
            guard::model::grad_check(params, batch, o.eps, o.min_per_group, o.seed);
        std::printf("max relative error %.3e over %d coordinates (worst: %s)\n",
                    report.max_rel_error, report.coordinates_checked,
                    report.worst_tensor.c_str());
        if (report.max_rel_error >= 1e-4)
            throw guard::NonFiniteGradient("gradient check failed the 1e-4 bound");
    });

    auto* score = model->add_subcommand("score", "greedy decode one feature file");
    score->add_option("--ckpt", o.ckpt)->required();
    score->add_option("--features", o.features, "JSON {\"features\": [...]}")->required();
    score->add_option("--mode", o.mode)->check(CLI::IsMember({"safety", "fairness"}));
    score->callback([&o] {
        const auto params = guard::model::load_checkpoint(o.ckpt);
        const auto row = features_from_file(o.features, params.config.raw_vision_dim);
        std::cout << guard::scoring::local_toy_score(
                         params, row, guard::scoring::mode_from_string(o.mode))
                  << "\n";
    });
}

struct EvalOptions {
    std::string config_path;
    std::string prompts_path, out, records, report, taxonomy_file;
    std::string t2i_dir, t2i_ext = "png", t2i_url;
    std::string scorer_url, scorer_script, scorer_toy, scorer_model;
    bool scorer_chat = false;
    bool deterministic = false;
    bool strict_counts = false;
    bool strict_unparsed = false;
    std::string policy = "any-unsafe";
    std::string format = "console";
    std::string backend_id = "backend";
    int images_per_prompt = 1;
    int concurrency = 1;
};

/// Run configuration file; explicit command-line flags take precedence.
/// {"images_per_prompt", "concurrency", "backend_id", "deterministic",
///  "policy", "strict_unparsed", "strict_counts",
///  "t2i": {"dir"|"url", "ext"}, "scorer": {"url"|"script"|"toy", "chat", "model"}}
void apply_eval_config(EvalOptions& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw guard::FatalIO("cannot open config " + path);
    json doc;
    try {
        in >> doc;
        o.images_per_prompt = doc.value("images_per_prompt", o.images_per_prompt);
        o.concurrency = doc.value("concurrency", o.concurrency);
        o.backend_id = doc.value("backend_id", o.backend_id);
        o.deterministic = doc.value("deterministic", o.deterministic);
        o.policy = doc.value("policy", o.policy);
        o.strict_unparsed = doc.value("strict_unparsed", o.strict_unparsed);
        o.strict_counts = doc.value("strict_counts", o.strict_counts);
        o.taxonomy_file = doc.value("taxonomy", o.taxonomy_file);
        if (doc.contains("t2i")) {
            const auto& t = doc.at("t2i");
            o.t2i_dir = t.value("dir", o.t2i_dir);
            o.t2i_url = t.value("url", o.t2i_url);
            o.t2i_ext = t.value("ext", o.t2i_ext);
        }
        if (doc.contains("scorer")) {
            const auto& s = doc.at("scorer");
            o.scorer_url = s.value("url", o.scorer_url);
            o.scorer_script = s.value("script", o.scorer_script);
            o.scorer_toy = s.value("toy", o.scorer_toy);
            o.scorer_chat = s.value("chat", o.scorer_chat);
            o.scorer_model = s.value("model", o.scorer_model);
        }
    } catch (const json::exception& e) {
        throw guard::SchemaError(std::string("bad config file: ") + e.what());
    }
}

void add_eval_commands(CLI::App& app, EvalOptions& o) {
    auto* eval = app.add_subcommand("eval", "benchmark runs and reports");
    eval->require_subcommand(1);

    auto* run = eval->add_subcommand("run", "generate and score a prompt set");
    run->add_option("--prompts", o.prompts_path)->required();
    run->add_option("--out", o.out, "run records JSONL (appended, resumable)")->required();
    run->add_option("--config", o.config_path,
                    "JSON run configuration; explicit flags win");
    std::vector<std::pair<CLI::Option*, std::function<void(EvalOptions&, const EvalOptions&)>>>
        overrides;
    auto track = [&overrides](CLI::Option* opt,
                              std::function<void(EvalOptions&, const EvalOptions&)> copy) {
        overrides.emplace_back(opt, std::move(copy));
    };
    track(run->add_option("--taxonomy", o.taxonomy_file),
          [](EvalOptions& to, const EvalOptions& from) { to.taxonomy_file = from.taxonomy_file; });
    track(run->add_option("--images-per-prompt", o.images_per_prompt),
          [](EvalOptions& to, const EvalOptions& from) {
              to.images_per_prompt = from.images_per_prompt;
          });
    track(run->add_option("--concurrency", o.concurrency),
          [](EvalOptions& to, const EvalOptions& from) { to.concurrency = from.concurrency; });
    track(run->add_option("--backend-id", o.backend_id),
          [](EvalOptions& to, const EvalOptions& from) { to.backend_id = from.backend_id; });
    track(run->add_flag("--deterministic", o.deterministic,
                        "zero timestamps for golden files"),
          [](EvalOptions& to, const EvalOptions& from) {
              to.deterministic = from.deterministic;
          });
    track(run->add_flag("--strict-counts", o.strict_counts,
                        "require the reference per-task prompt counts"),
          [](EvalOptions& to, const EvalOptions& from) {
              to.strict_counts = from.strict_counts;
          });
    track(run->add_option("--t2i-dir", o.t2i_dir, "directory of pre-generated images"),
          [](EvalOptions& to, const EvalOptions& from) { to.t2i_dir = from.t2i_dir; });
    track(run->add_option("--t2i-ext", o.t2i_ext),
          [](EvalOptions& to, const EvalOptions& from) { to.t2i_ext = from.t2i_ext; });
    track(run->add_option("--t2i-url", o.t2i_url, "remote generation endpoint"),
          [](EvalOptions& to, const EvalOptions& from) { to.t2i_url = from.t2i_url; });
    track(run->add_option("--scorer-url", o.scorer_url, "remote scorer endpoint"),
          [](EvalOptions& to, const EvalOptions& from) { to.scorer_url = from.scorer_url; });
    track(run->add_flag("--scorer-chat", o.scorer_chat,
                        "use the chat-completions adapter"),
          [](EvalOptions& to, const EvalOptions& from) { to.scorer_chat = from.scorer_chat; });
    track(run->add_option("--scorer-model", o.scorer_model,
                          "model name for the chat adapter"),
          [](EvalOptions& to, const EvalOptions& from) {
              to.scorer_model = from.scorer_model;
          });
    track(run->add_option("--scorer-script", o.scorer_script,
                          "JSON map image_ref -> response (\"*\" = fallback)"),
          [](EvalOptions& to, const EvalOptions& from) {
              to.scorer_script = from.scorer_script;
          });
    track(run->add_option("--scorer-toy", o.scorer_toy, "toy model checkpoint"),
          [](EvalOptions& to, const EvalOptions& from) { to.scorer_toy = from.scorer_toy; });
    run->callback([&o, overrides] {
        if (!o.config_path.empty()) {
            const EvalOptions from_cli = o;
            apply_eval_config(o, o.config_path);
            for (const auto& [opt, copy] : overrides)
                if (opt->count() > 0) copy(o, from_cli);
        }
        const auto tax = load_taxonomy_arg(o.taxonomy_file);
        guard::bench::LoadOptions lo;
        lo.strict_counts = o.strict_counts;
        const auto prompts = guard::bench::load_prompt_set(o.prompts_path, tax, lo);

        std::unique_ptr<guard::bench::TextToImageClient> t2i;
        if (!o.t2i_dir.empty()) {
            t2i = std::make_unique<guard::bench::DirectoryImageSource>(o.t2i_dir, o.t2i_ext);
        } else if (!o.t2i_url.empty()) {
            guard::scoring::BackendEndpoint ep;
            ep.base_url = o.t2i_url;
            t2i = std::make_unique<guard::bench::RemoteT2IClient>(ep);
        } else {
            throw guard::PreconditionViolation("need --t2i-dir or --t2i-url");
        }

        std::unique_ptr<guard::bench::Scorer> scorer;
        if (!o.scorer_url.empty()) {
            guard::scoring::BackendEndpoint ep;
            ep.base_url = o.scorer_url;
            ep.chat_adapter = o.scorer_chat;
            ep.model = o.scorer_model;
            scorer = std::make_unique<guard::bench::RemoteScorer>(ep, tax);
        } else if (!o.scorer_script.empty()) {
            scorer = std::make_unique<guard::bench::ScriptedScorer>(
                guard::bench::ScriptedScorer::from_file(o.scorer_script));
        } else if (!o.scorer_toy.empty()) {
            scorer = std::make_unique<guard::bench::ToyModelScorer>(
                guard::model::load_checkpoint(o.scorer_toy));
        } else {
            throw guard::PreconditionViolation(
                "need --scorer-url, --scorer-script, or --scorer-toy");
        }

        guard::bench::RunConfig config;
        config.images_per_prompt = o.images_per_prompt;
        config.concurrency = o.concurrency;
        config.out_path = o.out;
        config.backend_id = o.backend_id;
        config.deterministic_timestamps = o.deterministic;
        const auto summary = guard::bench::run_evaluation(prompts, *t2i, *scorer, tax, config);
        std::cout << "jobs " << summary.total_jobs << " written " << summary.written
                  << " skipped " << summary.skipped_existing << " failures "
                  << summary.failures << "\n";
    });

    auto* aggregate = eval->add_subcommand("aggregate", "fold run records into a report");
    aggregate->add_option("--records", o.records)->required();
    aggregate->add_option("--out", o.report, "report JSON path (stdout when omitted)");
    aggregate->add_option("--config", o.config_path,
                          "JSON run configuration; explicit flags win");
    auto* agg_taxonomy = aggregate->add_option("--taxonomy", o.taxonomy_file);
    auto* agg_policy = aggregate->add_option("--policy", o.policy)
                           ->check(CLI::IsMember({"any-unsafe", "domain-scoped"}));
    auto* agg_strict = aggregate->add_flag("--strict-unparsed", o.strict_unparsed,
                                           "count unparseable safety records as unsafe");
    aggregate->callback([&o, agg_taxonomy, agg_policy, agg_strict] {
        if (!o.config_path.empty()) {
            const EvalOptions from_cli = o;
            apply_eval_config(o, o.config_path);
            if (agg_taxonomy->count() > 0) o.taxonomy_file = from_cli.taxonomy_file;
            if (agg_policy->count() > 0) o.policy = from_cli.policy;
            if (agg_strict->count() > 0) o.strict_unparsed = from_cli.strict_unparsed;
        }
        const auto tax = load_taxonomy_arg(o.taxonomy_file);
        const auto records = guard::bench::load_run_records(o.records);
        guard::bench::AggregateOptions opts;
        opts.policy = o.policy == "any-unsafe" ? guard::bench::SafetyPolicy::AnyUnsafe
                                               : guard::bench::SafetyPolicy::DomainScoped;
        opts.strict_unparsed_as_unsafe = o.strict_unparsed;
        const auto report = guard::bench::aggregate(records, tax, opts);
        const std::string text = guard::bench::report_to_json(report);
        if (o.report.empty()) {
            std::cout << text << "\n";
        } else {
            std::ofstream out(o.report);
            if (!out) throw guard::FatalIO("cannot write " + o.report);
            out << text << "\n";
            std::cout << "wrote " << o.report << "\n";
        }
    });

    auto* report = eval->add_subcommand("report", "render a report");
    report->add_option("--report", o.report)->required();
    report->add_option("--format", o.format)
        ->check(CLI::IsMember({"console", "json", "csv"}));
    report->callback([&o] {
        std::ifstream in(o.report);
        if (!in) throw guard::FatalIO("cannot open " + o.report);
        std::stringstream ss;
        ss << in.rdbuf();
        const auto rep = guard::bench::report_from_json(ss.str());
        if (o.format == "console")
            std::cout << guard::bench::render_report_console(rep);
        else if (o.format == "csv")
            std::cout << guard::bench::render_report_csv({rep});
        else
            std::cout << guard::bench::report_to_json(rep) << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"text-to-image safety evaluation toolkit"};
    app.require_subcommand(1);

    TaxonomyOptions taxonomy_options;
    PromptOptions prompt_options;
    AnnotateOptions annotate_options;
    MetricsOptions metrics_options;
    ModelOptions model_options;
    EvalOptions eval_options;

    add_taxonomy_commands(app, taxonomy_options);
    add_prompt_commands(app, prompt_options);
    add_annotate_commands(app, annotate_options);
    add_metrics_commands(app, metrics_options);
    add_model_commands(app, model_options);
    add_eval_commands(app, eval_options);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const guard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
