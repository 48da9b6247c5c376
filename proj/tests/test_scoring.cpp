#include <doctest.h>

#include "guard/error.hpp"
#include "guard/model/synthetic.hpp"
#include "guard/scoring.hpp"
#include "guard/taxonomy.hpp"

using namespace guard::scoring;
using guard::Taxonomy;

TEST_CASE("safety instruction covers every unsafe task and the image token") {
    const Taxonomy& tax = Taxonomy::built_in();
    const std::string text = render_safety_instruction(tax);
    CHECK(text.find("<ImageHere>") != std::string::npos);
    for (const auto* task : tax.unsafe_tasks()) {
        CHECK(text.find(task->name + ":") != std::string::npos);
        for (const auto& c : task->categories)
            CHECK(text.find(c.name + ": " + c.definition) != std::string::npos);
    }
    CHECK(text.find("category: <category name>") != std::string::npos);
    CHECK(render_safety_instruction(tax) == text);
}

TEST_CASE("fairness instruction enumerates the attribute values") {
    const Taxonomy& tax = Taxonomy::built_in();
    const std::string text = render_fairness_instruction(tax);
    CHECK(text.find("<ImageHere>") != std::string::npos);
    CHECK(text.find("male or female") != std::string::npos);
    CHECK(text.find("children, young adults, middle-aged, and elderly") != std::string::npos);
    for (const char* race : {"Asian", "Indian", "Caucasian", "Latino", "African"})
        CHECK(text.find(race) != std::string::npos);
    CHECK(text.find("gender: <gender>; age: <age>; race: <race>") != std::string::npos);
    CHECK(render_fairness_instruction(tax) == text);
}

TEST_CASE("safety verdict parsing") {
    const Taxonomy& tax = Taxonomy::built_in();

    auto j = parse_verdict("unsafe\ncategory: self-harm", ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(!j.safety->safe);
    CHECK(j.safety->category == "Self-harm");

    j = parse_verdict("safe", ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(j.safety->safe);

    j = parse_verdict("  SAFE.  ", ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(j.safety->safe);

    j = parse_verdict("UNSAFE\n  Category:  Bloody Content ", ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(j.safety->category == "Bloody content");

    j = parse_verdict("unsafe category: horror", ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(j.safety->category == "Horror");

    j = parse_verdict("I cannot determine this.", ScoreMode::Safety, tax);
    CHECK(!j.parse_ok);
    CHECK(j.failure == "refusal");
    CHECK(j.raw_response == "I cannot determine this.");

    j = parse_verdict("the weather is nice", ScoreMode::Safety, tax);
    CHECK(!j.parse_ok);
    CHECK(j.failure == "unparseable");

    // a fairness category is not a safety verdict
    j = parse_verdict("unsafe\ncategory: male", ScoreMode::Safety, tax);
    CHECK(!j.parse_ok);

    j = parse_verdict("unsafe\ncategory: flying cars", ScoreMode::Safety, tax);
    CHECK(!j.parse_ok);
}

TEST_CASE("fairness verdict parsing") {
    const Taxonomy& tax = Taxonomy::built_in();

    auto j = parse_verdict("gender: female; age: elderly; race: asian", ScoreMode::Fairness,
                           tax);
    REQUIRE(j.parse_ok);
    CHECK(j.fairness->gender == "Female");
    CHECK(j.fairness->age == "Elderly");
    CHECK(j.fairness->race == "Asian");

    j = parse_verdict("Gender: MALE\nAge: young adults\nRace: Caucasian",
                      ScoreMode::Fairness, tax);
    REQUIRE(j.parse_ok);
    CHECK(j.fairness->gender == "Male");
    CHECK(j.fairness->age == "Young adult");
    CHECK(j.fairness->race == "Caucasian");

    j = parse_verdict("gender: male; age: middle aged; race: latino", ScoreMode::Fairness,
                      tax);
    REQUIRE(j.parse_ok);
    CHECK(j.fairness->age == "Middle-aged");

    CHECK(!parse_verdict("gender: male; age: elderly", ScoreMode::Fairness, tax).parse_ok);
    CHECK(!parse_verdict("gender: other; age: elderly; race: asian", ScoreMode::Fairness, tax)
               .parse_ok);
    CHECK(!parse_verdict("", ScoreMode::Fairness, tax).parse_ok);
}

TEST_CASE("parse_verdict is total on arbitrary bytes") {
    const Taxonomy& tax = Taxonomy::built_in();
    const std::vector<std::string> garbage = {
        "", "\n\n\n", "unsafe", "category:", std::string(1000, 'x'),
        std::string("\x01\x02\xff\xfe", 4), "unsafe\ncategory:", "safe unsafe safe"};
    for (const auto& text : garbage) {
        for (const auto mode : {ScoreMode::Safety, ScoreMode::Fairness}) {
            const auto j = parse_verdict(text, mode, tax);
            CHECK(j.raw_response == text);
            if (!j.parse_ok) CHECK(!j.failure.empty());
        }
    }
    // bare "unsafe" with no category is not a usable verdict
    CHECK(!parse_verdict("unsafe", ScoreMode::Safety, tax).parse_ok);
}

TEST_CASE("verdict round trip over every unsafe category and fairness triple") {
    const Taxonomy& tax = Taxonomy::built_in();

    const auto categories = tax.unsafe_category_names();
    CHECK(categories.size() == 33);
    auto j = parse_verdict(format_safety_response(guard::annot::Verdict::safe_verdict()),
                           ScoreMode::Safety, tax);
    CHECK(j.parse_ok);
    CHECK(j.safety->safe);
    for (const auto& name : categories) {
        const auto verdict = guard::annot::Verdict::unsafe_verdict(name);
        j = parse_verdict(format_safety_response(verdict), ScoreMode::Safety, tax);
        REQUIRE(j.parse_ok);
        CHECK(j.safety->category == name);
    }

    int triples = 0;
    for (const auto& g : tax.find_task("Gender")->categories) {
        for (const auto& a : tax.find_task("Age")->categories) {
            for (const auto& r : tax.find_task("Race")->categories) {
                const FairnessTriple t{g.name, a.name, r.name};
                j = parse_verdict(format_fairness_response(t), ScoreMode::Fairness, tax);
                REQUIRE(j.parse_ok);
                CHECK(*j.fairness == t);
                ++triples;
            }
        }
    }
    CHECK(triples == 40);
}

TEST_CASE("local toy scorer: untrained model output is handled, shapes checked") {
    using namespace guard::model;
    ToyModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.n_layers = 2;
    cfg.cma_layers = 1;
    const auto params = init_model(cfg, 3);
    Mat row = Mat::Zero(1, cfg.raw_vision_dim);
    row(0, 0) = 3.0;
    const std::string text = local_toy_score(params, row, ScoreMode::Safety);
    const auto j = parse_verdict(text, ScoreMode::Safety, Taxonomy::built_in());
    CHECK(j.raw_response == text);  // total: parsed or cleanly rejected

    Mat bad = Mat::Zero(1, cfg.raw_vision_dim + 2);
    CHECK_THROWS_AS(local_toy_score(params, bad, ScoreMode::Safety), guard::ShapeMismatch);
}
