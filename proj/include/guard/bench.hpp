#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "guard/metrics.hpp"
#include "guard/prompts.hpp"
#include "guard/scoring.hpp"
#include "guard/taxonomy.hpp"

namespace guard::bench {

/// Per-task evaluation prompt counts of the reference benchmark layout.
const std::map<std::string, int>& reference_prompt_counts();

struct LoadOptions {
    bool strict_counts = false;  // enforce reference_prompt_counts exactly
};

/// Load and validate an evaluation prompt set. Every record must carry a
/// label whose task is "Fairness" or an unsafe task of the taxonomy.
/// Throws SchemaError; CountMismatch in strict mode.
std::vector<prompts::PromptRecord> load_prompt_set(const std::string& path,
                                                   const Taxonomy& taxonomy,
                                                   const LoadOptions& opts = {});

/// Synthetic evaluation set shaped like the reference benchmark (2,669
/// prompts across the ten tasks); deterministic for a fixed seed.
std::vector<prompts::PromptRecord> make_reference_shaped_prompt_set(const Taxonomy& taxonomy,
                                                                    std::uint64_t seed = 0);

class TextToImageClient {
public:
    virtual ~TextToImageClient() = default;
    /// Produce (or locate) the image for one prompt and return its ref.
    virtual std::string generate(const prompts::PromptRecord& prompt, int image_index) = 0;
};

/// Pre-generated images indexed by prompt id: <dir>/<prompt_id>_<k>.<ext>
class DirectoryImageSource : public TextToImageClient {
public:
    explicit DirectoryImageSource(std::string dir, std::string extension = "png");
    std::string generate(const prompts::PromptRecord& prompt, int image_index) override;

private:
    std::string dir_;
    std::string extension_;
};

/// Remote generator: POST {base_url}/generate {"prompt", "index"} ->
/// {"image_ref"}.
class RemoteT2IClient : public TextToImageClient {
public:
    explicit RemoteT2IClient(scoring::BackendEndpoint endpoint);
    std::string generate(const prompts::PromptRecord& prompt, int image_index) override;

private:
    scoring::BackendEndpoint endpoint_;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string score(const std::string& image_ref, scoring::ScoreMode mode) = 0;
};

/// Remote MLLM endpoint with the instructions rendered once up front.
class RemoteScorer : public Scorer {
public:
    RemoteScorer(scoring::BackendEndpoint endpoint, const Taxonomy& taxonomy);
    std::string score(const std::string& image_ref, scoring::ScoreMode mode) override;

private:
    scoring::BackendEndpoint endpoint_;
    std::string safety_instruction_;
    std::string fairness_instruction_;
};

/// Toy-model scorer; image refs point to JSON files {"features": [...]}.
class ToyModelScorer : public Scorer {
public:
    explicit ToyModelScorer(model::ToyModelParams params);
    std::string score(const std::string& image_ref, scoring::ScoreMode mode) override;

private:
    model::ToyModelParams params_;
};

/// Replay scorer for dry runs: a JSON object mapping image_ref -> response
/// text, with optional "*" fallback.
class ScriptedScorer : public Scorer {
public:
    explicit ScriptedScorer(std::map<std::string, std::string> responses);
    static ScriptedScorer from_file(const std::string& path);
    std::string score(const std::string& image_ref, scoring::ScoreMode mode) override;

private:
    std::map<std::string, std::string> responses_;
};

struct RunRecord {
    std::string prompt_id;
    int image_index = 0;
    std::string image_ref;
    std::string backend;
    std::string task;  // prompt's task at run time
    scoring::SampleJudgment judgment;
    std::string timestamp;  // RFC 3339, or the epoch when deterministic
    int attempt = 1;
};

std::string run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Lenient reader: malformed lines are dropped, later records win on
/// duplicate (prompt_id, image_index) keys.
std::vector<RunRecord> load_run_records(const std::string& path);

struct RunConfig {
    int images_per_prompt = 1;
    int concurrency = 1;
    std::string out_path;
    std::string backend_id = "backend";
    bool deterministic_timestamps = false;
};

struct RunSummary {
    int total_jobs = 0;
    int written = 0;
    int skipped_existing = 0;
    int failures = 0;  // transport errors recorded as unparsed judgments
};

/// Generate and score every (prompt, image index) pair, appending one JSONL
/// record per pair. Already-present pairs are skipped, so an interrupted
/// run resumes where it stopped. Scorer/transport errors are recorded on
/// the record rather than aborting the run.
RunSummary run_evaluation(const std::vector<prompts::PromptRecord>& prompt_set,
                          TextToImageClient& t2i, Scorer& scorer, const Taxonomy& taxonomy,
                          const RunConfig& config);

enum class SafetyPolicy { AnyUnsafe, DomainScoped };

struct AggregateOptions {
    SafetyPolicy policy = SafetyPolicy::AnyUnsafe;
    bool strict_unparsed_as_unsafe = false;  // count unparseable safety records as unsafe
};

struct EvalReport {
    std::string model_id;
    std::map<std::string, double> fairness;  // task -> normalized KL divergence
    std::map<std::string, double> toxicity;  // task -> safety rate
    std::map<std::string, double> privacy;   // task -> safety rate
    double toxicity_average = 0.0;
    double privacy_average = 0.0;
    std::map<std::string, std::int64_t> excluded;  // per task
    std::int64_t total_records = 0;
    std::int64_t total_excluded = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Fold run records into the per-task metric table: pooled attribute
/// distributions -> NKL for fairness tasks, safety rates elsewhere.
/// Throws EmptyRecords / AllExcluded.
EvalReport aggregate(const std::vector<RunRecord>& records, const Taxonomy& taxonomy,
                     const AggregateOptions& opts = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
std::string render_report_console(const EvalReport& report);
std::string render_report_csv(const std::vector<EvalReport>& reports);

/// Round half to even at three decimals (the table cell convention).
double round3(double v);

}  // namespace guard::bench
