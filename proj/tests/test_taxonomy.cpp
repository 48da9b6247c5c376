#include <doctest.h>

#include <json.hpp>

#include "guard/error.hpp"
#include "guard/taxonomy.hpp"

using guard::Taxonomy;

TEST_CASE("built-in taxonomy has the 3/12/44 shape") {
    const Taxonomy& t = Taxonomy::built_in();
    CHECK(t.domains().size() == 3);
    CHECK(t.total_tasks() == 12);
    CHECK(t.total_categories() == 44);
    CHECK(t.domains()[0].name == "Fairness");
    CHECK(t.domains()[1].name == "Toxicity");
    CHECK(t.domains()[2].name == "Privacy");
    CHECK(t.find_domain("Toxicity")->tasks.size() == 6);
    CHECK(t.find_domain("Privacy")->tasks.size() == 3);
    CHECK(t.unsafe_tasks().size() == 9);
    CHECK(t.unsafe_category_names().size() == 33);
    for (const auto& d : t.domains())
        for (const auto& task : d.tasks)
            for (const auto& c : task.categories)
                if (task.kind == guard::TaskKind::UnsafeClass) CHECK(!c.definition.empty());
}

TEST_CASE("category lookup returns the owning path") {
    const Taxonomy& t = Taxonomy::built_in();
    auto p = t.lookup_category("Self-harm");
    CHECK(p.domain == "Toxicity");
    CHECK(p.task == "Violence");
    p = t.lookup_category("Politicians");
    CHECK(p.domain == "Privacy");
    CHECK(p.task == "Public figures");
    CHECK_THROWS_AS(t.lookup_category("Teleportation"), guard::NotFoundError);
}

TEST_CASE("every category lives in exactly one task") {
    const Taxonomy& t = Taxonomy::built_in();
    for (const auto& d : t.domains()) {
        for (const auto& task : d.tasks) {
            for (const auto& c : task.categories) {
                const auto p = t.lookup_category(c.name);
                CHECK(p.domain == d.name);
                CHECK(p.task == task.name);
            }
        }
    }
}

TEST_CASE("fairness cardinalities") {
    const Taxonomy& t = Taxonomy::built_in();
    CHECK(t.fairness_cardinality("Gender") == 2);
    CHECK(t.fairness_cardinality("Age") == 4);
    CHECK(t.fairness_cardinality("Race") == 5);
    CHECK(t.fairness_cardinality("Gender") + t.fairness_cardinality("Age") +
              t.fairness_cardinality("Race") ==
          11);
    CHECK_THROWS_AS(t.fairness_cardinality("Sexual"), guard::NotFairnessTask);
    CHECK_THROWS_AS(t.fairness_cardinality("nope"), guard::NotFairnessTask);
}

TEST_CASE("json round trip preserves the tree") {
    const Taxonomy& t = Taxonomy::built_in();
    const Taxonomy back = Taxonomy::from_json(t.to_json());
    CHECK(back == t);
    CHECK(back.to_json() == t.to_json());
}

TEST_CASE("validation rejects structural damage") {
    const Taxonomy& t = Taxonomy::built_in();
    auto doc = nlohmann::json::parse(t.to_json());

    SUBCASE("missing Privacy domain") {
        doc["domains"].erase(2);
        CHECK_THROWS_AS(Taxonomy::from_json(doc.dump()), guard::ValidationError);
    }
    SUBCASE("duplicate category across tasks") {
        doc["domains"][1]["tasks"][2]["categories"][0]["name"] = "Racism";
        CHECK_THROWS_AS(Taxonomy::from_json(doc.dump()), guard::ValidationError);
    }
    SUBCASE("wrong fairness cardinality") {
        doc["domains"][0]["tasks"][0]["categories"].push_back(
            {{"name", "Other"}, {"definition", "x"}, {"authored", true}});
        CHECK_THROWS_AS(Taxonomy::from_json(doc.dump()), guard::ValidationError);
    }
    SUBCASE("empty unsafe definition") {
        doc["domains"][1]["tasks"][0]["categories"][0]["definition"] = "";
        CHECK_THROWS_AS(Taxonomy::from_json(doc.dump()), guard::ValidationError);
    }
    SUBCASE("not json at all") {
        CHECK_THROWS_AS(Taxonomy::from_json("{nope"), guard::SchemaError);
    }
}

TEST_CASE("resolve_category folds case, separators, and plural variants") {
    const Taxonomy& t = Taxonomy::built_in();
    CHECK(t.resolve_category("self harm") == "Self-harm");
    CHECK(t.resolve_category("SELF-HARM") == "Self-harm");
    CHECK(t.resolve_category("middle aged") == "Middle-aged");
    CHECK(t.resolve_category("young adults") == "Young adult");
    CHECK(t.resolve_category("hate symbol") == "Hate symbols");
    CHECK(t.resolve_category("bogus").empty());
}
