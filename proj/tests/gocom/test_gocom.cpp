#include <doctest.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <set>

#include "cig/gocom/gocom.hpp"
#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace cig;
using namespace cig::gocom;
using namespace cig::testing;
using model::Gate;
using platform::DataPlatform;
using platform::Resource;
using platform::ResourceStatus;
using platform::ResourceType;

namespace {

Resource statement(std::string id, std::string patient, std::string drug, ResourceStatus status = ResourceStatus::active)
{
    Resource r;
    r.id = std::move(id);
    r.type = ResourceType::MedicationStatement;
    r.patient_id = std::move(patient);
    r.code = std::move(drug);
    r.source_type = "physician";
    r.status = status;
    return r;
}

Resource pending_proposal(std::string id, std::string patient, std::string cig, std::vector<std::string> drugs)
{
    Resource r;
    r.id = std::move(id);
    r.type = ResourceType::Communication;
    r.patient_id = std::move(patient);
    r.code = std::string(proposal_code);
    r.source_type = "pdss";
    r.status = ResourceStatus::pending;
    r.properties["sourceCig"] = std::move(cig);
    auto opts = nlohmann::json::array();
    for (auto& d : drugs) opts.push_back({{"medication", d}});
    r.properties["options"] = opts.dump();
    return r;
}

MedicationProposal proposal(Gate gate, std::vector<std::string> drugs)
{
    MedicationProposal p;
    p.patient_id = "p1";
    p.source_cig = "fever_management";
    p.decision_task = "choose";
    p.gate = gate;
    for (auto& d : drugs) p.options.push_back({d, "give_" + d, "evidence for " + d});
    return p;
}

/// Always down; stands in for an unreachable remote service.
class DownSource : public InteractionSource {
public:
    std::optional<InteractionRecord> lookup(const std::string&, const std::string&) const override
    {
        throw SourceUnavailable("interaction service unreachable");
    }
};

}  // namespace

TEST_CASE("load_interaction_kb")
{
    InteractionKb kb;
    SUBCASE("three pairs")
    {
        CHECK(kb.load_text("a,b,major,x\nc,d,minor,y\n\n# note\ne,f,moderate,z, with a comma\n") == 3);
        CHECK(kb.lookup("f", "e")->description == "z, with a comma");
        CHECK(kb.lookup("a", "b")->severity == Severity::major);
    }
    SUBCASE("pair listed twice")
    {
        CHECK_THROWS_AS(kb.load_text("a,b,major,x\nb,a,minor,y\n"), InvalidArgument);
        CHECK_THROWS_AS(InteractionKb().load_text("a,b,major,x\na,b,major,x\n"), InvalidArgument);
    }
    SUBCASE("empty file")
    {
        TempDir tmp;
        { std::ofstream(tmp / "kb.csv") << ""; }
        CHECK(kb.load(tmp / "kb.csv") == 0);
        CHECK_FALSE(kb.lookup("a", "b"));
    }
    SUBCASE("malformed lines")
    {
        CHECK_THROWS_AS(InteractionKb().load_text("a,b,major\n"), InvalidArgument);
        CHECK_THROWS_AS(InteractionKb().load_text("a,b,fatal,x\n"), InvalidArgument);
        CHECK_THROWS_AS(InteractionKb().load_text(",b,minor,x\n"), InvalidArgument);
        CHECK_THROWS_AS(InteractionKb().load(std::filesystem::path("/nonexistent/kb.csv")), NotFound);
    }
    SUBCASE("shipped kb")
    {
        CHECK(kb.load(data_path("kb/interactions.csv")) == 9);
        CHECK(kb.lookup("warfarin", "ibuprofen")->severity == Severity::major);
    }
}

TEST_CASE("check_option")
{
    VirtualClock clock;
    DataPlatform dp(clock);
    InteractionKb kb;
    kb.load_text("drugA,drugB,major,bleeding\ndrugA,drugC,moderate,sedation\n");
    Gocom gocom(dp, kb);

    SUBCASE("active medication")
    {
        dp.store(statement("ms1", "p1", "drugB"));
        auto conflicts = gocom.check_option("p1", "drugA");
        REQUIRE(conflicts.size() == 1);
        CHECK(conflicts[0].other == "drugB");
        CHECK(conflicts[0].severity == Severity::major);
        CHECK(conflicts[0].origin == origin_active);
        CHECK(conflicts[0].reference == "ms1");
        CHECK(conflicts[0].explanation.find("bleeding") != std::string::npos);
        CHECK(gocom.check_option("p2", "drugA").empty());
    }
    SUBCASE("nothing on record")
    {
        CHECK(gocom.check_option("p1", "drugA").empty());
    }
    SUBCASE("pending recommendation from another guideline")
    {
        dp.store(pending_proposal("c1", "p1", "pain_management", {"drugC"}));
        dp.store(statement("ms1", "p1", "drugB"));
        auto conflicts = gocom.check_option("p1", "drugA", "fever_management");
        REQUIRE(conflicts.size() == 2);
        CHECK(conflicts[0].origin == origin_active);
        CHECK(conflicts[1].origin == origin_other_guideline);
        CHECK(conflicts[1].other == "drugC");
        CHECK(conflicts[1].reference == "c1");
        CHECK(conflicts[1].explanation.find("pain_management") != std::string::npos);
    }
    SUBCASE("own, answered and inactive records do not count")
    {
        dp.store(pending_proposal("c1", "p1", "fever_management", {"drugC"}));
        auto answered = pending_proposal("c2", "p1", "pain_management", {"drugC"});
        dp.store(answered);
        dp.update_status("c2", ResourceStatus::rejected);
        dp.store(statement("ms1", "p1", "drugB", ResourceStatus::completed));
        CHECK(gocom.check_option("p1", "drugA", "fever_management").empty());
    }
}

TEST_CASE("mitigate and format_by_gate")
{
    VirtualClock clock;
    DataPlatform dp(clock);
    InteractionKb kb;
    kb.load_text("ibuprofen,warfarin,major,bleeding risk\n");
    Gocom gocom(dp, kb);

    SUBCASE("XOR with both options safe")
    {
        auto rev = gocom.mitigate(proposal(Gate::exactly_one, {"paracetamol", "ibuprofen"}));
        CHECK(rev.instruction == "choose exactly one");
        CHECK_FALSE(rev.escalation);
        CHECK(rev.options.size() == 2);
        CHECK(rev.options[0].evidence == "evidence for paracetamol");
    }
    dp.store(statement("ms1", "p1", "warfarin"));
    SUBCASE("AND with one unsafe option")
    {
        auto rev = gocom.mitigate(proposal(Gate::all_of, {"paracetamol", "ibuprofen"}));
        CHECK(rev.escalation);
        CHECK(rev.options[0].safe);
        CHECK_FALSE(rev.options[1].safe);
        REQUIRE(rev.options[1].conflicts.size() == 1);
        CHECK(rev.options[1].conflicts[0].other == "warfarin");
    }
    SUBCASE("OR with one unsafe option")
    {
        auto rev = gocom.mitigate(proposal(Gate::any_of, {"paracetamol", "ibuprofen"}));
        CHECK(rev.instruction == "follow at least one safe option");
        CHECK_FALSE(rev.escalation);
        REQUIRE(rev.options.size() == 2);
        CHECK_FALSE(rev.options[1].safe);
        CHECK(rev.options[1].evidence == "evidence for ibuprofen");
    }
    SUBCASE("gate counts")
    {
        auto all = format_by_gate(3, 3, Gate::all_of);
        CHECK(all.required == 3);
        CHECK_FALSE(all.escalation);
        auto any = format_by_gate(2, 2, Gate::any_of);
        CHECK(any.required == 1);
        CHECK(any.allowed == 2);
        CHECK(format_by_gate(0, 2, Gate::exactly_one).escalation);
    }
    SUBCASE("json round trip")
    {
        auto rev = gocom.mitigate(proposal(Gate::any_of, {"paracetamol", "ibuprofen"}));
        CHECK(to_json(revised_from_json(nlohmann::json::parse(to_json(rev).dump()))) == to_json(rev));
    }
    SUBCASE("interaction source down")
    {
        DownSource down;
        Gocom offline(dp, down);
        auto p = proposal(Gate::exactly_one, {"paracetamol"});
        CHECK_THROWS_AS(offline.mitigate(p), SourceUnavailable);
        auto rev = Gocom::unverified(p);
        CHECK(rev.escalation);
        CHECK_FALSE(rev.verified);
        CHECK(rev.options.size() == 1);
        CHECK(rev.instruction.find("unverified") != std::string::npos);
    }
}

TEST_CASE("property: lookup symmetry")
{
    std::mt19937 rng(31);
    const std::vector<std::string> drugs{"d0", "d1", "d2", "d3", "d4", "d5"};
    for (int round = 0; round < 200; ++round) {
        InteractionKb kb;
        std::set<std::pair<std::string, std::string>> listed;
        for (std::size_t i = 0; i < drugs.size(); ++i)
            for (std::size_t j = i + 1; j < drugs.size(); ++j) {
                if (rng() % 3 != 0) continue;
                auto a = drugs[i], b = drugs[j];
                if (rng() % 2) std::swap(a, b);  // listed in either order
                kb.add({a, b, Severity::moderate, "x"});
                listed.insert({a, b});
            }
        VirtualClock clock;
        DataPlatform dp(clock);
        auto active = drugs[rng() % drugs.size()];
        dp.store(statement("ms", "p", active));
        Gocom gocom(dp, kb);
        for (const auto& d : drugs) {
            bool expected = d != active && (listed.count({d, active}) || listed.count({active, d}));
            auto conflicts = gocom.check_option("p", d);
            CHECK(conflicts.size() == (expected ? 1u : 0u));
            CHECK(kb.lookup(d, active).has_value() == kb.lookup(active, d).has_value());
        }
    }
}

TEST_CASE("property: mitigate keeps every option")
{
    std::mt19937 rng(5);
    InteractionKb kb;
    kb.load(data_path("kb/interactions.csv"));
    const std::vector<std::string> drugs{"ibuprofen", "paracetamol", "warfarin", "ondansetron", "tramadol", "aspirin"};
    for (int round = 0; round < 200; ++round) {
        VirtualClock clock;
        DataPlatform dp(clock);
        for (int i = 0; i < 2; ++i)
            if (rng() % 2) dp.store(statement("ms" + std::to_string(i), "p1", drugs[rng() % drugs.size()]));
        Gocom gocom(dp, kb);
        auto gate = std::array{Gate::all_of, Gate::any_of, Gate::exactly_one}[rng() % 3];
        std::vector<std::string> picked;
        for (std::size_t n = 1 + rng() % 4; picked.size() < n;) picked.push_back(drugs[rng() % drugs.size()]);
        auto p = proposal(gate, picked);
        auto rev = gocom.mitigate(p);
        REQUIRE(rev.options.size() == p.options.size());
        for (std::size_t i = 0; i < p.options.size(); ++i) {
            CHECK(rev.options[i].medication == p.options[i].medication);
            CHECK(rev.options[i].task == p.options[i].task);
            CHECK(rev.options[i].evidence == p.options[i].evidence);
            CHECK(rev.options[i].safe == rev.options[i].conflicts.empty());
        }
    }
}

TEST_CASE("property: gate soundness over every small configuration")
{
    // Brute force: the gate is satisfiable iff some subset of the safe
    // options has a size the gate accepts.
    auto satisfiable = [](Gate gate, std::size_t safe, std::size_t total) {
        for (std::size_t mask = 0; mask < (1u << safe); ++mask) {
            auto k = static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
            bool ok = gate == Gate::all_of ? k == total : gate == Gate::any_of ? k >= 1 : k == 1;
            if (ok) return true;
        }
        return false;
    };

    InteractionKb kb;
    for (int i = 0; i < 4; ++i) kb.add({"bad" + std::to_string(i), "warfarin", Severity::major, "x"});
    VirtualClock clock;
    DataPlatform dp(clock);
    dp.store(statement("ms", "p1", "warfarin"));
    Gocom gocom(dp, kb);

    int checked = 0;
    for (auto gate : {Gate::all_of, Gate::any_of, Gate::exactly_one})
        for (std::size_t total = 1; total <= 4; ++total)
            for (std::size_t unsafe = 0; unsafe <= total; ++unsafe) {
                std::vector<std::string> drugs;
                for (std::size_t i = 0; i < total; ++i)
                    drugs.push_back(i < unsafe ? "bad" + std::to_string(i) : "good" + std::to_string(i));
                auto rev = gocom.mitigate(proposal(gate, drugs));
                auto safe = static_cast<std::size_t>(std::count_if(rev.options.begin(), rev.options.end(),
                                                                   [](const auto& o) { return o.safe; }));
                CHECK(safe == total - unsafe);
                CHECK(rev.escalation == !satisfiable(gate, safe, total));
                CHECK(format_by_gate(safe, total, gate).escalation == rev.escalation);
                ++checked;
            }
    CHECK(checked == 3 * (2 + 3 + 4 + 5));
}
