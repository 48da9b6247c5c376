#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace guard {

enum class TaskKind { FairnessAttribute, UnsafeClass };

struct Category {
    std::string name;
    std::string definition;  // rendered into scoring instructions
    bool authored = false;   // true when the definition was written for this tool

    bool operator==(const Category&) const = default;
};

struct Task {
    std::string name;
    TaskKind kind = TaskKind::UnsafeClass;
    std::vector<Category> categories;

    bool operator==(const Task&) const = default;
};

struct Domain {
    std::string name;  // Fairness | Toxicity | Privacy
    std::vector<Task> tasks;

    bool operator==(const Domain&) const = default;
};

/// Hierarchical safety taxonomy: 3 domains, 12 tasks, 44 leaf categories.
/// Immutable after construction; all accessors are safe for concurrent use.
class Taxonomy {
public:
    struct CategoryPath {
        std::string domain;
        std::string task;
        bool operator==(const CategoryPath&) const = default;
    };

    /// The tree this tool ships with. Always passes validation.
    static const Taxonomy& built_in();

    /// Parse and validate a taxonomy JSON document.
    /// Throws SchemaError for malformed documents, ValidationError for
    /// structural violations (domain/task/category counts, duplicates).
    static Taxonomy from_json(const std::string& text);
    static Taxonomy from_file(const std::string& path);

    std::string to_json(int indent = 2) const;

    const std::string& version() const { return version_; }
    const std::vector<Domain>& domains() const { return domains_; }

    /// Unique owning (domain, task) of a category. Name matching is
    /// case-insensitive. Throws NotFoundError.
    CategoryPath lookup_category(const std::string& name) const;

    /// Number of attribute values of a fairness task (Gender=2, Age=4,
    /// Race=5). Throws NotFairnessTask for anything else.
    int fairness_cardinality(const std::string& task) const;

    /// Case-insensitive task lookup; nullptr when absent.
    const Task* find_task(const std::string& name) const;
    const Domain* find_domain(const std::string& name) const;

    /// Canonical category name for a raw string (case-insensitive, folds
    /// spaces/hyphens/plural variants); empty string when unresolvable.
    std::string resolve_category(const std::string& raw) const;

    std::vector<const Task*> fairness_tasks() const;
    std::vector<const Task*> unsafe_tasks() const;
    std::vector<std::string> unsafe_category_names() const;

    std::size_t total_tasks() const;
    std::size_t total_categories() const;

    bool operator==(const Taxonomy& other) const {
        return version_ == other.version_ && domains_ == other.domains_;
    }

private:
    Taxonomy() = default;
    Taxonomy(std::string version, std::vector<Domain> domains);

    void validate() const;
    void build_index();

    std::string version_;
    std::vector<Domain> domains_;
    // normalized category name -> (path, canonical name)
    std::map<std::string, std::pair<CategoryPath, std::string>> index_;
};

/// Lowercase, trim, collapse runs of whitespace/hyphens to single spaces.
/// Shared by taxonomy lookup and verdict parsing.
std::string normalize_label(const std::string& raw);

}  // namespace guard
