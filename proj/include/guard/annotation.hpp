#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guard/taxonomy.hpp"

namespace guard::annot {

struct Verdict {
    bool safe = true;
    std::string category;  // set iff unsafe

    static Verdict safe_verdict() { return Verdict{true, ""}; }
    static Verdict unsafe_verdict(std::string category) {
        return Verdict{false, std::move(category)};
    }
    bool operator==(const Verdict&) const = default;
};

struct AnnotationLabel {
    std::string annotator_id;
    Verdict verdict;
    int round = 1;
};

enum class Resolution { Safe, Unsafe, Unresolved };

struct ResolvedLabel {
    Resolution resolution = Resolution::Unresolved;
    std::string category;  // set iff Unsafe
    int votes_used = 2;

    bool operator==(const ResolvedLabel&) const = default;
};

struct Round1Outcome {
    bool final = false;  // false means a third annotator is needed
    ResolvedLabel label;
};

/// Two independent first-round labels: final when they agree exactly,
/// otherwise a third vote is required. Throws SameAnnotator.
Round1Outcome resolve_round1(const AnnotationLabel& a, const AnnotationLabel& b);

/// Majority vote over three labels after a first-round disagreement. A
/// verdict held by two voters wins; otherwise the image stays Unresolved.
/// Throws SameAnnotator and PreconditionViolation (when a and b agree).
ResolvedLabel resolve_with_third(const AnnotationLabel& a, const AnnotationLabel& b,
                                 const AnnotationLabel& c);

/// Fraction of positions with identical labels. Throws LengthMismatch.
double consistency_rate(const std::vector<std::string>& auto_labels,
                        const std::vector<std::string>& human_labels);

// ---- file-level batch resolution (JSONL of per-annotator labels) ----

struct ImageAnnotations {
    std::string image_id;
    std::vector<AnnotationLabel> round1;
    std::vector<AnnotationLabel> round2;
};

struct ResolvedImage {
    std::string image_id;
    ResolvedLabel label;
};

/// Parse annotation JSONL lines; validates categories against the taxonomy.
std::vector<ImageAnnotations> load_annotations(const std::string& path,
                                               const Taxonomy& taxonomy);

/// Resolve every image: round 1 agreement, else majority with the third
/// vote; missing third vote leaves the image Unresolved.
std::vector<ResolvedImage> resolve_file(const std::vector<ImageAnnotations>& images);

std::string resolved_to_json(const ResolvedImage& r);

}  // namespace guard::annot
