#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guard/taxonomy.hpp"

namespace guard::prompts {

enum class PromptStatus { Raw, Filtered, Deduped, Labeled, Evaluation };

const char* to_string(PromptStatus s);
PromptStatus status_from_string(const std::string& s);

struct PromptLabel {
    std::string task;
    std::string category;
    bool unsafe = false;

    bool operator==(const PromptLabel&) const = default;
};

struct PromptRecord {
    std::string id;
    std::string text;
    std::string source;
    PromptStatus status = PromptStatus::Raw;
    std::optional<PromptLabel> label;
    std::optional<std::string> duplicate_of;

    bool operator==(const PromptRecord&) const = default;
};

std::string record_to_json(const PromptRecord& r);
PromptRecord record_from_json(const std::string& line);

std::vector<PromptRecord> load_records(const std::string& path);
void save_records(const std::string& path, const std::vector<PromptRecord>& records);

enum class DropReason { Empty, UrlOnly, SymbolRatio, TooFewWords };

const char* to_string(DropReason r);

struct FilterDecision {
    bool keep = true;
    std::optional<DropReason> reason;
};

/// Regex-style junk filter. Drops empty text, bare URLs, texts that are at
/// least half symbols, and texts with fewer than two word tokens.
FilterDecision junk_filter(const std::string& text);

/// Categorization instruction for an LLM labeler, with the category list and
/// the sentence substituted. Includes the two few-shot examples the parser
/// is calibrated against. Throws PreconditionViolation on an empty list.
std::string render_classification_prompt(const std::vector<std::string>& categories,
                                         const std::string& sentence);

/// Keyword-generation instruction for one taxonomy category or task name.
/// Throws UnknownCategory.
std::string render_keyword_prompt(const std::string& category, const Taxonomy& taxonomy);

struct LabelVote {
    std::string labeler_id;
    std::string reasoning;
    std::string category;  // canonical taxonomy category/task name, or "Safe"
    bool unsafe = false;

    bool operator==(const LabelVote&) const = default;
};

/// Extract the last "Reasoning:"/"Category:" lines of a labeler response.
/// "X & Unsafe" folds to (category=X, unsafe). Throws ParseError when no
/// Category line exists, UnknownCategory when the value resolves to nothing.
LabelVote parse_labeler_response(const std::string& text, const Taxonomy& taxonomy);

struct ConsensusLabel {
    std::string category;
    bool unsafe = false;
};

/// Unanimous-vote consensus: a label only when all votes agree exactly.
/// Throws WrongVoteCount unless exactly `required` votes are supplied.
std::optional<ConsensusLabel> consensus_label(const std::vector<LabelVote>& votes,
                                              int required = 3);

/// One evaluation record per neutral descriptor, using the fixed
/// "A person who is/has ..." sentence frame.
std::vector<PromptRecord> generate_fairness_prompts(const std::vector<std::string>& descriptors);

}  // namespace guard::prompts
