#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guard/annotation.hpp"
#include "guard/model/model.hpp"
#include "guard/taxonomy.hpp"

namespace guard::scoring {

enum class ScoreMode { Safety, Fairness };

const char* to_string(ScoreMode m);
ScoreMode mode_from_string(const std::string& s);

struct FairnessTriple {
    std::string gender;
    std::string age;
    std::string race;

    bool operator==(const FairnessTriple&) const = default;
};

struct SampleJudgment {
    std::string image_ref;
    ScoreMode mode = ScoreMode::Safety;
    std::optional<annot::Verdict> safety;       // set iff mode == Safety and parse_ok
    std::optional<FairnessTriple> fairness;     // set iff mode == Fairness and parse_ok
    std::string raw_response;
    bool parse_ok = false;
    std::string failure;  // "refusal" | "unparseable" when !parse_ok
};

/// Unified toxicity+privacy instruction: task description, every unsafe
/// task with its category definitions, and the fixed output format.
std::string render_safety_instruction(const Taxonomy& taxonomy);

/// Fairness instruction enumerating the gender/age/race attribute values
/// and the fixed "gender: ...; age: ...; race: ..." answer format.
std::string render_fairness_instruction(const Taxonomy& taxonomy);

struct ParseOptions {
    std::vector<std::string> refusal_phrases = {
        "i cannot", "i can't", "i am unable", "i'm unable", "cannot determine",
        "can't determine", "i'm sorry", "i am sorry", "as an ai",
    };
};

/// Total function: any response yields a judgment, with parse_ok=false and
/// the raw text preserved when the grammar or taxonomy lookup fails.
SampleJudgment parse_verdict(const std::string& response, ScoreMode mode,
                             const Taxonomy& taxonomy, const ParseOptions& opts = {});

/// Well-formed responses in the grammar parse_verdict accepts; used by
/// round-trip tests and the scripted mock scorer.
std::string format_safety_response(const annot::Verdict& verdict);
std::string format_fairness_response(const FairnessTriple& triple);

struct BackendEndpoint {
    std::string base_url;
    std::string token_env = "GUARD_SCORER_TOKEN";  // empty = no auth header
    bool require_auth = false;                     // missing token -> AuthError
    double timeout_seconds = 30.0;
    int max_retries = 2;                // retries after the first attempt
    double backoff_seconds = 0.2;       // doubled per retry
    bool chat_adapter = false;          // map onto a chat-completions endpoint
    std::string model;                  // model name for the chat adapter
};

/// POST the instruction and image to the scoring endpoint and return the
/// model's raw text. File image refs are inlined as base64, URLs pass
/// through. Retries transient failures (HTTP 5xx/429) with exponential
/// backoff. Throws AuthError, TimeoutError, RateLimited, TransportError.
std::string remote_score(const BackendEndpoint& endpoint, const std::string& image_ref,
                         const std::string& instruction);

/// Text-only call on the same wire (image field null); used by the prompt
/// auto-labeling pipeline to query LLM labelers.
std::string remote_complete(const BackendEndpoint& endpoint, const std::string& instruction);

/// POST a JSON body and return the response body, retrying transient
/// failures (transport errors, timeouts, HTTP 429/5xx) with exponential
/// backoff. Shared by every remote client in this tool.
std::string post_json(const BackendEndpoint& endpoint, const std::string& path,
                      const std::string& body);

/// Greedy decode from the toy model, emitting text in the verdict grammar.
/// Throws ShapeMismatch when the feature width does not match the config.
std::string local_toy_score(const model::ToyModelParams& params, const model::Mat& features_row,
                            ScoreMode mode);

std::string base64_encode(const std::string& bytes);

}  // namespace guard::scoring
