#include <doctest.h>

#include <algorithm>

#include "cig/core/error.hpp"
#include "cig/model/guideline.hpp"
#include "support/random_guideline.hpp"

using namespace cig;
using namespace cig::model;

namespace {

const char* medication_doc = R"json({
  "id": "fever_management",
  "version": "1",
  "description": "fragment",
  "data_items": [
    {"name": "temp_grade", "value_type": "integer",
     "meta": {"sourceType": "patient", "source": "kdom", "abstractionId": "temp_grade_rule"}},
    {"name": "treatment_related", "value_type": "boolean",
     "meta": {"resourceType": "Communication", "valueExpression": "cancer-treatment-related", "x-local": "kept as is"}}
  ],
  "tasks": [
    {"name": "root", "kind": "plan", "components": ["choose", "give_paracetamol"]},
    {"name": "choose", "kind": "decision",
     "candidates": [{"name": "paracetamol", "arguments": [{"condition": "temp_grade >= 1", "weight": 1}]}],
     "meta": {"gate": "XOR"}},
    {"name": "give_paracetamol", "kind": "action", "antecedents": ["choose"],
     "precondition": "is_committed(choose, paracetamol)", "procedure": "paracetamol 1 g",
     "meta": {"interventionType": "medication-proposal", "medication": "paracetamol"}}
  ],
  "root_plan": "root"
})json";

bool has_issue(const std::vector<ValidationIssue>& issues, std::string_view text, std::string_view location = {})
{
    return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) {
        return i.severity == Severity::error && i.message.find(text) != std::string::npos &&
               (location.empty() || i.location == location);
    });
}

bool has_error(const std::vector<ValidationIssue>& issues)
{
    return std::any_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::error; });
}

GuidelineDefinition two_plans()
{
    return parse_guideline(R"json({
      "id": "g", "version": "1",
      "data_items": [{"name": "x", "value_type": "integer"}],
      "tasks": [
        {"name": "root", "kind": "plan", "components": ["p1", "p2"]},
        {"name": "p1", "kind": "plan", "components": ["a1"]},
        {"name": "p2", "kind": "plan", "components": ["a2", "a3"]},
        {"name": "a1", "kind": "action"},
        {"name": "a2", "kind": "action"},
        {"name": "a3", "kind": "action", "antecedents": ["a2"]}
      ],
      "root_plan": "root"
    })json");
}

}  // namespace

TEST_CASE("meta entries parse into the property map")
{
    auto def = parse_guideline(medication_doc);
    REQUIRE(def.data_items.size() == 2);
    CHECK(def.data_items[0].meta.at("sourceType") == "patient");
    CHECK(def.data_items[1].meta.at("x-local") == "kept as is");
    CHECK(validate_guideline(def).empty());
}

TEST_CASE("zero tasks parses but fails validation")
{
    auto def = parse_guideline(R"json({"id": "empty", "version": "1", "tasks": []})json");
    CHECK(def.tasks.empty());
    CHECK(has_issue(validate_guideline(def), "missing root_plan"));
    CHECK_THROWS_AS(ValidatedGuideline::from(def), InvalidDefinition);
}

TEST_CASE("duplicate task name")
{
    const char* doc = R"json({"id": "d", "tasks": [
        {"name": "t1", "kind": "plan", "components": ["t1"]},
        {"name": "t1", "kind": "action"}], "root_plan": "t1"})json";
    CHECK_THROWS_AS(parse_guideline(doc), DuplicateIdentifier);
}

TEST_CASE("parse errors")
{
    CHECK_THROWS_AS(parse_guideline("{\"id\": "), SyntaxError);
    CHECK_THROWS_AS(parse_guideline(R"json({"id": "x", "tasks": [{"name": "a", "kind": "procedure"}]})json"), FormatError);
    CHECK_THROWS_AS(parse_guideline(R"json({"id": "x", "extra": 1})json"), FormatError);
    CHECK_THROWS_AS(parse_guideline(R"json({"id": "x", "tasks": [{"name": "a", "kind": "action", "meta": {"k": 1}}]})json"),
                    FormatError);
    try {
        parse_guideline(R"json({"id": "x", "tasks": [{"name": "a", "kind": "action", "precondition": "1 +"}]})json");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.path() == "tasks[0].precondition");
    }
}

TEST_CASE("cross-plan antecedent")
{
    auto def = two_plans();
    REQUIRE(validate_guideline(def).empty());
    def.tasks[5].antecedents = {"a1"};
    CHECK(has_issue(validate_guideline(def), "cross-plan antecedent", "task:a3"));
}

TEST_CASE("gate outside AND|OR|XOR")
{
    auto def = parse_guideline(medication_doc);
    def.tasks[1].meta["gate"] = "NAND";
    CHECK(has_issue(validate_guideline(def), "gate must be AND|OR|XOR", "task:choose"));
}

TEST_CASE("antecedent cycle")
{
    auto def = two_plans();
    def.tasks[4].antecedents = {"a3"};
    CHECK(has_issue(validate_guideline(def), "antecedent cycle"));
}

TEST_CASE("get_meta lookups")
{
    auto def = parse_guideline(medication_doc);
    const auto* task = def.find_task("give_paracetamol");
    REQUIRE(task);
    CHECK(get_meta(*task, "interventionType") == std::optional<std::string>("medication-proposal"));
    CHECK(get_meta(*def.find_item("treatment_related"), "resourceType") == std::optional<std::string>("Communication"));
    CHECK_FALSE(get_meta(*task, "gate").has_value());
    auto copy = *task;
    (void)get_meta(copy, "absent");
    CHECK(copy == *task);
}

TEST_CASE("strip_meta empties every map")
{
    auto def = strip_meta(parse_guideline(medication_doc));
    for (const auto& item : def.data_items) CHECK(item.meta.empty());
    for (const auto& task : def.tasks) {
        CHECK(task.meta.empty());
        for (const auto& c : task.candidates) CHECK(c.meta.empty());
    }
    CHECK(validate_guideline(def).empty());
}

TEST_CASE("ValidatedGuideline indexes the tree")
{
    auto g = ValidatedGuideline::from(two_plans());
    CHECK(g.task(g.root()).name == "root");
    auto a3 = g.task_index("a3");
    CHECK(g.task(g.parent(a3)).name == "p2");
    CHECK(g.antecedents(a3) == std::vector<std::size_t>{g.task_index("a2")});
    const auto& order = g.post_order();
    auto pos = [&](std::string_view n) { return std::find(order.begin(), order.end(), g.task_index(n)) - order.begin(); };
    CHECK(pos("a1") < pos("p1"));
    CHECK(pos("p2") < pos("root"));
}

TEST_CASE("property: parse(serialize(def)) == def")
{
    testing::GuidelineGenerator gen(7);
    for (int i = 0; i < 500; ++i) {
        auto def = gen.generate(8).to_definition(i % 3 != 0);
        def.description = i % 2 ? "with \"quotes\" and unicode \xc3\xa9" : "";
        auto text = serialize_guideline(def);
        auto back = parse_guideline(text);
        REQUIRE(back == def);
        CHECK(serialize_guideline(back) == text);
        CHECK_FALSE(has_error(validate_guideline(def)));
    }
}

TEST_CASE("property: every invariant violation is reported at its element")
{
    // Each mutation breaks one listed invariant of an otherwise valid
    // definition; validation must name the offending element.
    testing::GuidelineGenerator gen(99);
    int mutated = 0;
    for (int i = 0; i < 400; ++i) {
        auto spec = gen.generate(8);
        auto def = spec.to_definition();
        const int n = static_cast<int>(def.tasks.size());
        int victim = gen.pick(1, n - 1);
        auto& t = def.tasks[victim];
        std::string loc = "task:" + t.name;
        switch (i % 8) {
        case 0:  // unresolved antecedent
            t.antecedents.push_back("ghost");
            break;
        case 1:  // self antecedent
            t.antecedents.push_back(t.name);
            break;
        case 2:  // unknown item in precondition
            t.precondition = parse_expression("ghost_item > 1");
            break;
        case 3:  // bad gate
            t.meta["gate"] = "MAYBE";
            break;
        case 4:  // component of two plans
            def.tasks[0].components.push_back(t.name);
            if (spec.tasks[victim].parent == 0) def.tasks[0].components.push_back("ghost_component");
            loc = spec.tasks[victim].parent == 0 ? "task:t0" : loc;
            break;
        case 5:  // zero weight
            if (t.kind != TaskKind::decision) continue;
            t.candidates[0].arguments[0].weight = 0;
            loc += ".candidate:" + t.candidates[0].name;
            break;
        case 6:  // kind/field mismatch
            if (t.kind == TaskKind::enquiry) t.sources.clear();
            else t.sources.push_back("x0");
            break;
        case 7:  // duplicate candidate
            if (t.kind != TaskKind::decision) continue;
            t.candidates.push_back(t.candidates[0]);
            loc += ".candidate:" + t.candidates[0].name;
            break;
        }
        ++mutated;
        auto issues = validate_guideline(def);
        INFO(serialize_guideline(def));
        REQUIRE(has_error(issues));
        bool named = std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& is) {
            return is.severity == Severity::error && is.location.rfind(loc, 0) == 0;
        });
        CHECK(named);
    }
    CHECK(mutated > 250);
}
