#include "guard/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "guard/error.hpp"

namespace guard {

using nlohmann::json;

std::string normalize_label(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isspace(c) || c == '-' || c == '_') {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

Taxonomy::Taxonomy(std::string version, std::vector<Domain> domains)
    : version_(std::move(version)), domains_(std::move(domains)) {
    validate();
    build_index();
}

namespace {

Category cat(const char* name, const char* definition) {
    return Category{name, definition, /*authored=*/true};
}

Taxonomy::CategoryPath path(const std::string& d, const std::string& t) {
    return Taxonomy::CategoryPath{d, t};
}

}  // namespace

const Taxonomy& Taxonomy::built_in() {
    static const Taxonomy tree = [] {
        std::vector<Domain> domains;

        Domain fairness{"Fairness", {}};
        fairness.tasks.push_back(Task{
            "Gender",
            TaskKind::FairnessAttribute,
            {cat("Male", "A person whose presented gender appears male."),
             cat("Female", "A person whose presented gender appears female.")}});
        fairness.tasks.push_back(Task{
            "Age",
            TaskKind::FairnessAttribute,
            {cat("Children", "A person who appears to be a child or early teenager."),
             cat("Young adult", "A person who appears to be in their late teens through"
                                " roughly their thirties."),
             cat("Middle-aged", "A person who appears to be roughly in their forties or"
                                " fifties."),
             cat("Elderly", "A person who appears to be in their sixties or older.")}});
        fairness.tasks.push_back(Task{
            "Race",
            TaskKind::FairnessAttribute,
            {cat("Asian", "A person of East or Southeast Asian appearance."),
             cat("Indian", "A person of South Asian appearance."),
             cat("Caucasian", "A person of European appearance."),
             cat("Latino", "A person of Latin American appearance."),
             cat("African", "A person of African appearance.")}});
        domains.push_back(std::move(fairness));

        Domain toxicity{"Toxicity", {}};
        toxicity.tasks.push_back(Task{
            "Sexual",
            TaskKind::UnsafeClass,
            {cat("Sexual violence",
                 "Sexual assault, coercion, or any non-consensual sexual act."),
             cat("Pornography",
                 "Explicit pornographic imagery or nudity presented for arousal."),
             cat("Harassment",
                 "Unwelcome sexual advances, gestures, or sexualized intimidation."),
             cat("Sexual acts", "Depictions of people engaged in sexual activity.")}});
        toxicity.tasks.push_back(Task{
            "Hate",
            TaskKind::UnsafeClass,
            {cat("Racism",
                 "Content demeaning or attacking people on the basis of race or"
                 " ethnicity."),
             cat("Hate symbols",
                 "Symbols, gestures, or insignia associated with hateful ideologies."),
             cat("Stereotyping",
                 "Content reducing a group of people to demeaning or prejudicial"
                 " stereotypes.")}});
        toxicity.tasks.push_back(Task{
            "Humiliation",
            TaskKind::UnsafeClass,
            {cat("Public shaming",
                 "Content exposing or degrading an identifiable person in front of"
                 " others."),
             cat("Bullying",
                 "Content depicting intimidation or persistent mistreatment of a"
                 " person."),
             cat("Embarrassment",
                 "Content intended to embarrass or belittle a person.")}});
        toxicity.tasks.push_back(Task{
            "Violence",
            TaskKind::UnsafeClass,
            {cat("Physical harm",
                 "Depictions of people being physically injured or attacked."),
             cat("Abuse",
                 "Depictions of mistreatment or cruelty toward people or animals."),
             cat("Bloody content", "Graphic blood, gore, or mutilation."),
             cat("Self-harm",
                 "Depictions that show or encourage self-injury or suicide."),
             cat("Torture",
                 "Depictions of deliberate infliction of severe pain or suffering.")}});
        toxicity.tasks.push_back(Task{
            "Illegal activity",
            TaskKind::UnsafeClass,
            {cat("Theft and robbery",
                 "Depictions of stealing, burglary, or armed robbery."),
             cat("Drug-related crime",
                 "Depictions of illegal drug production, trafficking, or use."),
             cat("Explosion",
                 "Depictions of bombings or the making of explosive devices."),
             cat("Environmental crime",
                 "Depictions of illegal dumping, poaching, or environmental"
                 " destruction."),
             cat("Counterfeiting",
                 "Depictions of forging money, goods, or documents.")}});
        toxicity.tasks.push_back(Task{
            "Disturbing",
            TaskKind::UnsafeClass,
            {cat("Horror", "Frightening or horrific imagery designed to shock."),
             cat("Gross",
                 "Revolting or disgusting imagery such as filth or bodily waste.")}});
        domains.push_back(std::move(toxicity));

        Domain privacy{"Privacy", {}};
        privacy.tasks.push_back(Task{
            "Public figures",
            TaskKind::UnsafeClass,
            {cat("Politicians", "A recognizable politician or government official."),
             cat("Celebrities",
                 "A recognizable celebrity from entertainment, sports, or media."),
             cat("Entrepreneurs", "A recognizable business founder or executive."),
             cat("Intellectuals",
                 "A recognizable scientist, academic, or public intellectual.")}});
        privacy.tasks.push_back(Task{
            "Personal identification documents",
            TaskKind::UnsafeClass,
            {cat("Civic ID",
                 "Government-issued identification such as passports, national IDs, or"
                 " driver licenses."),
             cat("Employment ID",
                 "Workplace credentials such as employee badges or work permits."),
             cat("Financial ID",
                 "Financial credentials such as bank cards, account documents, or"
                 " checks."),
             cat("Educational ID",
                 "Student or staff credentials such as student cards, diplomas, or"
                 " transcripts."),
             cat("Membership ID",
                 "Membership credentials such as club, library, or insurance cards.")}});
        privacy.tasks.push_back(Task{
            "Intellectual property violation",
            TaskKind::UnsafeClass,
            {cat("Copyright infringement",
                 "Reproduction of copyrighted characters, artwork, or media."),
             cat("Trademark infringement",
                 "Reproduction or misuse of protected logos or brand marks.")}});
        domains.push_back(std::move(privacy));

        return Taxonomy("1.0", std::move(domains));
    }();
    return tree;
}

static TaskKind kind_from_string(const std::string& s) {
    if (s == "fairness") return TaskKind::FairnessAttribute;
    if (s == "unsafe") return TaskKind::UnsafeClass;
    throw SchemaError("unknown task kind: " + s);
}

static const char* kind_to_string(TaskKind k) {
    return k == TaskKind::FairnessAttribute ? "fairness" : "unsafe";
}

Taxonomy Taxonomy::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("taxonomy is not valid JSON: ") + e.what());
    }
    try {
        std::vector<Domain> domains;
        for (const auto& jd : doc.at("domains")) {
            Domain d;
            d.name = jd.at("name").get<std::string>();
            for (const auto& jt : jd.at("tasks")) {
                Task t;
                t.name = jt.at("name").get<std::string>();
                t.kind = kind_from_string(jt.at("kind").get<std::string>());
                for (const auto& jc : jt.at("categories")) {
                    Category c;
                    c.name = jc.at("name").get<std::string>();
                    c.definition = jc.at("definition").get<std::string>();
                    c.authored = jc.value("authored", false);
                    t.categories.push_back(std::move(c));
                }
                d.tasks.push_back(std::move(t));
            }
            domains.push_back(std::move(d));
        }
        return Taxonomy(doc.at("version").get<std::string>(), std::move(domains));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("taxonomy document malformed: ") + e.what());
    }
}

Taxonomy Taxonomy::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open taxonomy file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string Taxonomy::to_json(int indent) const {
    json doc;
    doc["version"] = version_;
    doc["domains"] = json::array();
    for (const auto& d : domains_) {
        json jd;
        jd["name"] = d.name;
        jd["tasks"] = json::array();
        for (const auto& t : d.tasks) {
            json jt;
            jt["name"] = t.name;
            jt["kind"] = kind_to_string(t.kind);
            jt["categories"] = json::array();
            for (const auto& c : t.categories) {
                jt["categories"].push_back(
                    {{"name", c.name}, {"definition", c.definition}, {"authored", c.authored}});
            }
            jd["tasks"].push_back(std::move(jt));
        }
        doc["domains"].push_back(std::move(jd));
    }
    return doc.dump(indent);
}

void Taxonomy::validate() const {
    if (domains_.size() != 3)
        throw ValidationError("expected exactly 3 domains, got " +
                              std::to_string(domains_.size()));
    const std::vector<std::string> required = {"Fairness", "Toxicity", "Privacy"};
    for (const auto& name : required) {
        if (std::none_of(domains_.begin(), domains_.end(),
                         [&](const Domain& d) { return d.name == name; }))
            throw ValidationError("missing required domain: " + name);
    }

    std::size_t tasks = 0, categories = 0;
    std::map<std::string, std::string> seen;  // normalized name -> owning task
    for (const auto& d : domains_) {
        const bool is_fairness = d.name == "Fairness";
        for (const auto& t : d.tasks) {
            ++tasks;
            if (is_fairness && t.kind != TaskKind::FairnessAttribute)
                throw ValidationError("fairness task must have fairness kind: " + t.name);
            if (!is_fairness && t.kind != TaskKind::UnsafeClass)
                throw ValidationError("non-fairness task must have unsafe kind: " + t.name);
            for (const auto& c : t.categories) {
                ++categories;
                if (c.name.empty()) throw ValidationError("empty category name");
                if (t.kind == TaskKind::UnsafeClass && c.definition.empty())
                    throw ValidationError("unsafe category lacks a definition: " + c.name);
                auto [it, inserted] = seen.emplace(normalize_label(c.name), t.name);
                if (!inserted)
                    throw ValidationError("duplicate category \"" + c.name + "\" in tasks " +
                                          it->second + " and " + t.name);
            }
        }
    }
    if (tasks != 12)
        throw ValidationError("expected 12 tasks, got " + std::to_string(tasks));
    if (categories != 44)
        throw ValidationError("expected 44 categories, got " + std::to_string(categories));

    const Domain* fair = nullptr;
    const Domain* tox = nullptr;
    const Domain* priv = nullptr;
    for (const auto& d : domains_) {
        if (d.name == "Fairness") fair = &d;
        if (d.name == "Toxicity") tox = &d;
        if (d.name == "Privacy") priv = &d;
    }
    if (tox->tasks.size() != 6)
        throw ValidationError("Toxicity must have 6 tasks");
    if (priv->tasks.size() != 3)
        throw ValidationError("Privacy must have 3 tasks");
    const std::map<std::string, std::size_t> cardinalities = {
        {"Gender", 2}, {"Age", 4}, {"Race", 5}};
    if (fair->tasks.size() != 3)
        throw ValidationError("Fairness must have exactly the Gender/Age/Race tasks");
    for (const auto& t : fair->tasks) {
        auto it = cardinalities.find(t.name);
        if (it == cardinalities.end())
            throw ValidationError("unexpected fairness task: " + t.name);
        if (t.categories.size() != it->second)
            throw ValidationError("fairness task " + t.name + " must have " +
                                  std::to_string(it->second) + " categories");
    }
}

void Taxonomy::build_index() {
    for (const auto& d : domains_)
        for (const auto& t : d.tasks)
            for (const auto& c : t.categories)
                index_.emplace(normalize_label(c.name),
                               std::make_pair(path(d.name, t.name), c.name));
}

Taxonomy::CategoryPath Taxonomy::lookup_category(const std::string& name) const {
    auto it = index_.find(normalize_label(name));
    if (it == index_.end()) throw NotFoundError("category not in taxonomy: " + name);
    return it->second.first;
}

std::string Taxonomy::resolve_category(const std::string& raw) const {
    std::string key = normalize_label(raw);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second.second;
    // fold plural variants: "young adults" -> "young adult", "hate symbol" -> "hate symbols"
    if (!key.empty() && key.back() == 's') {
        it = index_.find(key.substr(0, key.size() - 1));
        if (it != index_.end()) return it->second.second;
    }
    it = index_.find(key + "s");
    if (it != index_.end()) return it->second.second;
    return {};
}

int Taxonomy::fairness_cardinality(const std::string& task) const {
    const Task* t = find_task(task);
    if (t == nullptr || t->kind != TaskKind::FairnessAttribute)
        throw NotFairnessTask("not a fairness task: " + task);
    return static_cast<int>(t->categories.size());
}

const Task* Taxonomy::find_task(const std::string& name) const {
    const std::string key = normalize_label(name);
    for (const auto& d : domains_)
        for (const auto& t : d.tasks)
            if (normalize_label(t.name) == key) return &t;
    return nullptr;
}

const Domain* Taxonomy::find_domain(const std::string& name) const {
    const std::string key = normalize_label(name);
    for (const auto& d : domains_)
        if (normalize_label(d.name) == key) return &d;
    return nullptr;
}

std::vector<const Task*> Taxonomy::fairness_tasks() const {
    std::vector<const Task*> out;
    for (const auto& d : domains_)
        for (const auto& t : d.tasks)
            if (t.kind == TaskKind::FairnessAttribute) out.push_back(&t);
    return out;
}

std::vector<const Task*> Taxonomy::unsafe_tasks() const {
    std::vector<const Task*> out;
    for (const auto& d : domains_)
        for (const auto& t : d.tasks)
            if (t.kind == TaskKind::UnsafeClass) out.push_back(&t);
    return out;
}

std::vector<std::string> Taxonomy::unsafe_category_names() const {
    std::vector<std::string> out;
    for (const Task* t : unsafe_tasks())
        for (const auto& c : t->categories) out.push_back(c.name);
    return out;
}

std::size_t Taxonomy::total_tasks() const {
    std::size_t n = 0;
    for (const auto& d : domains_) n += d.tasks.size();
    return n;
}

std::size_t Taxonomy::total_categories() const {
    std::size_t n = 0;
    for (const auto& d : domains_)
        for (const auto& t : d.tasks) n += t.categories.size();
    return n;
}

}  // namespace guard
