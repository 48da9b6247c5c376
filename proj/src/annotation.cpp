#include "guard/annotation.hpp"

#include <algorithm>

#include <json.hpp>

#include "guard/error.hpp"
#include "guard/jsonl.hpp"

namespace guard::annot {

using nlohmann::json;

Round1Outcome resolve_round1(const AnnotationLabel& a, const AnnotationLabel& b) {
    if (a.annotator_id == b.annotator_id)
        throw SameAnnotator("round-1 labels share annotator " + a.annotator_id);
    if (a.verdict == b.verdict) {
        ResolvedLabel label;
        label.resolution = a.verdict.safe ? Resolution::Safe : Resolution::Unsafe;
        label.category = a.verdict.category;
        label.votes_used = 2;
        return {true, label};
    }
    return {false, {}};
}

ResolvedLabel resolve_with_third(const AnnotationLabel& a, const AnnotationLabel& b,
                                 const AnnotationLabel& c) {
    if (a.annotator_id == b.annotator_id || a.annotator_id == c.annotator_id ||
        b.annotator_id == c.annotator_id)
        throw SameAnnotator("three distinct annotators required");
    if (a.verdict == b.verdict)
        throw PreconditionViolation("first two labels already agree; round 1 was final");

    ResolvedLabel out;
    out.votes_used = 3;
    // a != b, so only the third vote can create a 2-of-3 verdict majority
    const Verdict* majority = nullptr;
    if (c.verdict == a.verdict) majority = &a.verdict;
    if (c.verdict == b.verdict) majority = &b.verdict;
    if (majority != nullptr) {
        out.resolution = majority->safe ? Resolution::Safe : Resolution::Unsafe;
        out.category = majority->category;
        return out;
    }
    // No full-verdict majority. An unsafe safety-flag majority still needs
    // the two unsafe voters to agree on the category, which they do not
    // here, so everything falls through to Unresolved.
    out.resolution = Resolution::Unresolved;
    return out;
}

double consistency_rate(const std::vector<std::string>& auto_labels,
                        const std::vector<std::string>& human_labels) {
    if (auto_labels.size() != human_labels.size() || auto_labels.empty())
        throw LengthMismatch("label lists must have equal nonzero length");
    std::size_t same = 0;
    for (std::size_t i = 0; i < auto_labels.size(); ++i)
        if (auto_labels[i] == human_labels[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(auto_labels.size());
}

std::vector<ImageAnnotations> load_annotations(const std::string& path,
                                               const Taxonomy& taxonomy) {
    std::map<std::string, ImageAnnotations> by_image;
    std::vector<std::string> order;
    for (const auto& j : jsonl::read_file(path)) {
        try {
            AnnotationLabel label;
            const std::string image_id = j.at("image_id").get<std::string>();
            label.annotator_id = j.at("annotator_id").get<std::string>();
            label.round = j.at("round").get<int>();
            const bool safe = j.at("safe").get<bool>();
            if (safe) {
                label.verdict = Verdict::safe_verdict();
            } else {
                const std::string raw = j.at("category").get<std::string>();
                const std::string canon = taxonomy.resolve_category(raw);
                if (canon.empty())
                    throw SchemaError("annotation category not in taxonomy: " + raw);
                label.verdict = Verdict::unsafe_verdict(canon);
            }
            if (label.round != 1 && label.round != 2)
                throw SchemaError("annotation round must be 1 or 2");
            auto [it, inserted] = by_image.try_emplace(image_id);
            if (inserted) {
                it->second.image_id = image_id;
                order.push_back(image_id);
            }
            (label.round == 1 ? it->second.round1 : it->second.round2).push_back(label);
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad annotation record: ") + e.what());
        }
    }
    std::vector<ImageAnnotations> out;
    out.reserve(order.size());
    for (const auto& id : order) out.push_back(std::move(by_image[id]));
    return out;
}

std::vector<ResolvedImage> resolve_file(const std::vector<ImageAnnotations>& images) {
    std::vector<ResolvedImage> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        if (img.round1.size() != 2)
            throw SchemaError("image " + img.image_id + " needs exactly 2 round-1 labels");
        const auto round1 = resolve_round1(img.round1[0], img.round1[1]);
        if (round1.final) {
            out.push_back({img.image_id, round1.label});
            continue;
        }
        if (img.round2.empty()) {
            out.push_back({img.image_id, ResolvedLabel{Resolution::Unresolved, "", 2}});
            continue;
        }
        if (img.round2.size() != 1)
            throw SchemaError("image " + img.image_id + " has more than one round-2 label");
        out.push_back(
            {img.image_id, resolve_with_third(img.round1[0], img.round1[1], img.round2[0])});
    }
    return out;
}

std::string resolved_to_json(const ResolvedImage& r) {
    json j;
    j["image_id"] = r.image_id;
    switch (r.label.resolution) {
        case Resolution::Safe: j["verdict"] = "safe"; break;
        case Resolution::Unsafe: j["verdict"] = "unsafe"; break;
        case Resolution::Unresolved: j["verdict"] = "unresolved"; break;
    }
    j["category"] = r.label.category.empty() ? json(nullptr) : json(r.label.category);
    j["votes_used"] = r.label.votes_used;
    return j.dump();
}

}  // namespace guard::annot
