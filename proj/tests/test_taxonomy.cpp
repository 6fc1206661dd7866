// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "agentbug/text_util.hpp"

using namespace agentbug;
using agentbug::testing::make_record;

TEST_SUITE("taxonomy") {

TEST_CASE("member counts") {
    CHECK(all_members<BugType>().size() == 11);
    CHECK(all_members<RootCause>().size() == 9);
    CHECK(all_members<RootCauseSubclass>().size() == 10);
    CHECK(all_members<Effect>().size() == 14);
    CHECK(all_members<AgentComponent>().size() == 5);

    int with_subclasses = 0;
    for (auto rc : all_members<RootCause>()) {
        const auto subs = subclasses_of(rc);
        CHECK((subs.empty() || subs.size() == 2));
        with_subclasses += !subs.empty();
    }
    CHECK(with_subclasses == 5);
}

TEST_CASE_TEMPLATE("render then parse is the identity", E, BugType, RootCause, RootCauseSubclass, Effect,
                   AgentComponent) {
    for (auto m : all_members<E>()) {
        for (auto style : {LabelStyle::Long, LabelStyle::Abbrev}) {
            const auto text = render_label(m, style);
            CHECK(parse_label<E>(text) == m);
        }
    }
}

TEST_CASE_TEMPLATE("names and abbreviations are unique", E, BugType, RootCause, RootCauseSubclass, Effect,
                   AgentComponent) {
    std::set<std::string> seen;
    for (const auto& info : label_table<E>()) {
        CHECK(seen.insert(text::to_lower(info.long_name)).second);
        if (info.abbrev != info.long_name) CHECK(seen.insert(text::to_lower(info.abbrev)).second);
        CHECK_FALSE(info.definition.empty());
    }
}

TEST_CASE("documented label examples") {
    CHECK(std::get<BugType>(parse_label(Category::BugType, "Logic Bug (LB)")) == BugType::LogicBug);
    CHECK(std::get<Effect>(parse_label(Category::Effect, "crash")) == Effect::Crash);
    CHECK_THROWS_AS(parse_label(Category::RootCause, "Prompt Bug"), UnknownLabel);
    CHECK(render_label(BugType::ResourceLimitationBug, LabelStyle::Abbrev) == "RLB");
    CHECK(render_label(Effect::Crash, LabelStyle::Long) == "Crash");

    auto r = make_record("p", BugType::ModelBug, RootCause::ApiLimitation, RootCauseSubclass::MissingFlow);
    const auto v = validate_record(r);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::SubclassViolation);
    CHECK(validate_record(r) == v);
}

TEST_CASE("parse examples") {
    CHECK(parse_label<BugType>("API Bug") == BugType::ApiBug);
    CHECK(parse_label<BugType>("APIB") == BugType::ApiBug);
    CHECK(parse_label<BugType>("  logic bug ") == BugType::LogicBug);
    CHECK(parse_label<BugType>("Prompting Bug (PPB)") == BugType::PromptingBug);
    CHECK(parse_label<Effect>("IL") == Effect::IndeterminateLoop);
    CHECK(parse_label<AgentComponent>("Not Applicable") == AgentComponent::NotApplicable);
    CHECK(std::get<RootCause>(parse_label(Category::RootCause, "IMCF")) == RootCause::IncorrectOrMissingControlFlow);
    CHECK(render_label(LabelValue{Effect::SilentFail}, LabelStyle::Long) == "Silent Fail");
}

TEST_CASE("unknown labels name the category and the text") {
    try {
        parse_label<BugType>("Quantum Bug");
        FAIL("expected UnknownLabel");
    } catch (const UnknownLabel& e) {
        CHECK(e.category() == "bug_type");
        CHECK(e.text() == "Quantum Bug");
    }
    CHECK_THROWS_AS(parse_label<RootCauseSubclass>("Missing Everything"), UnknownLabel);
    CHECK_THROWS_AS(parse_label(Category::Effect, ""), UnknownLabel);
    CHECK_FALSE(try_parse_label<Effect>("Crashes").has_value());
}

TEST_CASE("lenient parsing accepts transcription noise only") {
    CHECK(parse_label_lenient<BugType>("api bug") == BugType::ApiBug);
    CHECK(parse_label_lenient<BugType>("logic_bug") == BugType::LogicBug);
    CHECK(parse_label_lenient<Effect>("IncorrectOutput") == Effect::IncorrectOutput);
    CHECK(parse_label_lenient<BugType>("LB: the loop condition is wrong") == BugType::LogicBug);
    CHECK(parse_label_lenient<AgentComponent>("N/A") == AgentComponent::NotApplicable);
    CHECK_FALSE(parse_label_lenient<BugType>("Logik Bug").has_value());
    CHECK_FALSE(parse_label_lenient<Effect>("API Bug").has_value());
}

TEST_CASE("subclass parents") {
    for (auto rc : all_members<RootCause>()) {
        for (auto sub : subclasses_of(rc)) CHECK(parent_of(sub) == rc);
    }
    for (auto sub : all_members<RootCauseSubclass>()) CHECK(parent_of(sub).has_value());
}

TEST_CASE("validate_record rules") {
    SUBCASE("a consistent record passes") { CHECK(validate_record(make_record("p1")).empty()); }
    SUBCASE("subclass must belong to the root cause") {
        auto r = make_record("p1", BugType::LogicBug, RootCause::ApiMisuse, RootCauseSubclass::IncorrectFlow);
        const auto v = validate_record(r);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == ViolationKind::SubclassViolation);
    }
    SUBCASE("root causes without subclasses reject any subclass") {
        auto r = make_record("p1", BugType::ModelBug, RootCause::ApiLimitation, RootCauseSubclass::MissingValue);
        CHECK(validate_record(r).at(0).kind == ViolationKind::SubclassViolation);
        r.root_cause_subclass.reset();
        CHECK(validate_record(r).empty());
    }
    SUBCASE("Not Applicable component needs RLB") {
        auto r = make_record("p1", BugType::ModelBug, RootCause::ApiLimitation, std::nullopt, Effect::Crash,
                             AgentComponent::NotApplicable);
        CHECK(validate_record(r).at(0).kind == ViolationKind::ComponentRuleViolation);
        r.bug_type = BugType::ResourceLimitationBug;
        CHECK(validate_record(r).empty());
    }
    SUBCASE("RLB may still name a real component") {
        auto r = make_record("p1", BugType::ResourceLimitationBug, RootCause::ApiLimitation, std::nullopt,
                             Effect::Crash, AgentComponent::Memory);
        CHECK(validate_record(r).empty());
    }
    SUBCASE("empty rationale and negative index") {
        auto r = make_record("p1");
        r.rationale_effect = "  ";
        r.bug_index = -1;
        const auto v = validate_record(r);
        REQUIRE(v.size() == 2);
        CHECK(v[0].kind == ViolationKind::NegativeBugIndex);
        CHECK(v[1].kind == ViolationKind::EmptyRationale);
    }
}

TEST_CASE("exhaustive component rule") {
    for (auto bt : all_members<BugType>()) {
        for (auto c : all_members<AgentComponent>()) {
            auto r = make_record("p", bt, RootCause::Others, std::nullopt, Effect::Unknown, c);
            const bool ok = validate_record(r).empty();
            CHECK(ok == (c != AgentComponent::NotApplicable || bt == BugType::ResourceLimitationBug));
        }
    }
}

TEST_CASE("record json round trip") {
    auto r = make_record("so-42", BugType::ArgumentBug, RootCause::IncorrectOrMissingParameter,
                         RootCauseSubclass::MissingValue, Effect::Crash, AgentComponent::Tools);
    r.bug_index = 2;
    nlohmann::json j = r;
    CHECK(j["bug_type"] == "AB");
    CHECK(j["root_cause"] == "IMP");
    CHECK(j["root_cause_subclass"] == "Missing Value");
    CHECK(j["component"] == "Tools");
    CHECK(j.get<AnnotationRecord>() == r);

    r.root_cause_subclass.reset();
    j = r;
    CHECK(j["root_cause_subclass"].is_null());
    CHECK(j.get<AnnotationRecord>() == r);
}

TEST_CASE("from_json normalizes language and framework") {
    nlohmann::json j = make_record("x");
    j["language"] = "C#";
    j["framework"] = "Semantic Kernel";
    const auto r = j.get<AnnotationRecord>();
    CHECK(r.language == "csharp");
    CHECK(r.framework == "semantic-kernel");
    CHECK(normalize_language("  Python3 ") == "python");
    CHECK(normalize_framework("LangChainJS") == "langchain-js");
    CHECK(normalize_framework("Haystack") == "haystack");
}

TEST_CASE("duplicate keys") {
    std::vector<AnnotationRecord> rs{make_record("a"), make_record("b"), make_record("a")};
    CHECK(duplicate_record_keys(rs).size() == 1);
    rs[2].annotator = "human-b";
    CHECK(duplicate_record_keys(rs).empty());
}

}  // TEST_SUITE
