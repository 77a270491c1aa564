#include <doctest.h>

#include <atomic>
#include <random>
#include <set>

#include "cig/pdss/pdss.hpp"
#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace cig;
using namespace cig::pdss;
using namespace cig::testing;
using platform::DataPlatform;
using platform::EventEnvelope;
using platform::Resource;
using platform::ResourceStatus;
using platform::ResourceType;

namespace {

/// Counts lookups so tests can see how often GoCom consulted the KB.
class CountingSource : public gocom::InteractionSource {
public:
    explicit CountingSource(const gocom::InteractionKb& kb) : kb_(kb) {}
    std::optional<gocom::InteractionRecord> lookup(const std::string& a, const std::string& b) const override
    {
        ++calls;
        return kb_.lookup(a, b);
    }
    mutable std::atomic<int> calls{0};

private:
    const gocom::InteractionKb& kb_;
};

struct Rig {
    VirtualClock clock{VirtualTime{86400}};
    DataPlatform dp{clock};
    kdom::Kdom kdom{dp};
    gocom::InteractionKb kb;
    CountingSource source{kb};
    gocom::Gocom gocom{dp, source};

    Rig()
    {
        kdom.load(data_path("kdom"));
        kb.load(data_path("kb/interactions.csv"));
    }

    Pdss make(CigSet cigs = load_cig_dir(data_path("cigs/pdss")), bool with_gocom = true)
    {
        return Pdss(dp, kdom, with_gocom ? &gocom : nullptr, std::move(cigs),
                    RoutingTable::load(data_path("routing/pdss_routes.json")));
    }

    void observe(std::string id, std::string code, Value v, std::string source = "patient", std::int64_t ago = 60)
    {
        Resource r;
        r.id = std::move(id);
        r.type = ResourceType::Observation;
        r.patient_id = "p1";
        r.code = std::move(code);
        r.value = std::move(v);
        r.source_type = std::move(source);
        r.effective_at = VirtualTime{clock.now().seconds - ago};
        dp.store(r);
    }

    EventEnvelope event(std::uint64_t seq = 1, std::string patient = "p1")
    {
        EventEnvelope ev;
        ev.event_type = "symptom-reported";
        ev.patient_id = std::move(patient);
        ev.seq = seq;
        ev.event_id = "ev/" + ev.patient_id + "/" + std::to_string(seq);
        ev.at = clock.now();
        return ev;
    }

    std::vector<Resource> communications(const std::string& patient = "p1")
    {
        platform::ResourceQuery q;
        q.type = ResourceType::Communication;
        q.patient_id = patient;
        return dp.query(q);
    }
};

std::set<std::string> option_tasks(const Resource& comm)
{
    std::set<std::string> out;
    for (const auto& o : nlohmann::json::parse(comm.properties.at("options"))) out.insert(o["task"].get<std::string>());
    return out;
}

}  // namespace

TEST_CASE("exemplar guidelines load")
{
    auto cigs = load_cig_dir(data_path("cigs/pdss"));
    CHECK(cigs.errors.empty());
    REQUIRE(cigs.guidelines.size() == 5);
    std::set<std::string> ids;
    for (const auto& g : cigs.guidelines) ids.insert(g.id());
    CHECK(ids == std::set<std::string>{"diarrhea", "fatigue", "fever_management", "mucositis", "nausea_vomiting"});
    CHECK(RoutingTable::defaults().entries() == RoutingTable::load(data_path("routing/pdss_routes.json")).entries());
    CHECK(RoutingTable::defaults().route("telepathy") == Route::direct_communication);
}

TEST_CASE("fever assessment")
{
    Rig rig;
    auto pdss = rig.make();
    rig.observe("t1", "body-temperature", Value(37.2), "patient", 7200);
    rig.observe("t2", "body-temperature", Value(38.6));

    auto run = pdss.handle_event(rig.event());
    CHECK(run.status == RunStatus::done);
    CHECK(run.run_id == "pdss/p1/1");
    CHECK(run.failures.empty());
    CHECK(run.instances.size() == 5);
    CHECK(run.gathered.at("temp_grade") == Value(1));
    // only the fever guideline is applicable
    CHECK(run.routed_tasks == std::vector<std::string>{"fever_management/hydration_tip",
                                                       "fever_management/give_paracetamol",
                                                       "fever_management/give_ibuprofen"});
    REQUIRE(run.outputs.size() == 2);

    auto comms = rig.communications();
    REQUIRE(comms.size() == 2);
    const auto& tip = comms[0];
    CHECK(tip.id == "pdss/p1/1/fever_management/hydration_tip");
    CHECK(tip.code == "tip");
    CHECK(tip.status == ResourceStatus::pending);
    CHECK(tip.properties.at("audience") == "physician");
    CHECK_FALSE(tip.properties.count("instruction"));
    const auto& proposal = comms[1];
    CHECK(proposal.code == "medication-proposal");
    CHECK(proposal.properties.at("gate") == "XOR");
    CHECK(proposal.properties.at("instruction") == "choose exactly one");
    CHECK(proposal.properties.at("escalation") == "false");
    CHECK(option_tasks(proposal) == std::set<std::string>{"give_paracetamol", "give_ibuprofen"});

    // every instance left a trace and ended terminal
    for (const auto& id : run.instances) {
        auto trace = rig.dp.get_trace(id);
        REQUIRE_FALSE(trace.empty());
        CHECK(trace.back().seq == trace.size());
    }
}

TEST_CASE("patient with no data")
{
    Rig rig;
    auto pdss = rig.make();
    auto run = pdss.handle_event(rig.event());
    CHECK(run.status == RunStatus::done);
    CHECK(run.outputs.empty());
    CHECK(run.routed_tasks.empty());
    CHECK(rig.communications().empty());
}

TEST_CASE("routing")
{
    Rig rig;
    rig.observe("t1", "body-temperature", Value(38.6));

    SUBCASE("GoCom consulted once per decision")
    {
        Resource warfarin;
        warfarin.id = "ms1";
        warfarin.type = ResourceType::MedicationStatement;
        warfarin.patient_id = "p1";
        warfarin.code = "warfarin";
        rig.dp.store(warfarin);
        auto pdss = rig.make();
        pdss.handle_event(rig.event());
        CHECK(rig.source.calls == 2);  // two options, one active medication
        auto comms = rig.communications();
        REQUIRE(comms.size() == 2);
        auto options = nlohmann::json::parse(comms[1].properties.at("options"));
        CHECK(options[1]["medication"] == "ibuprofen");
        CHECK(options[1]["safe"] == false);
        CHECK(options[1]["conflicts"][0]["severity"] == "major");
        CHECK(options[0]["safe"] == false);  // paracetamol/warfarin is moderate
        CHECK(comms[1].properties.at("escalation") == "true");
    }
    SUBCASE("tips never reach GoCom")
    {
        auto cigs = load_cig_dir(data_path("cigs/pdss"));
        auto pdss = rig.make();
        rig.observe("f1", "fatigue-score", Value(4));
        pdss.handle_event(rig.event());
        // fatigue adds a tip and no proposal; GoCom still sees only the fever decision
        CHECK(rig.source.calls == 0);  // nothing active, nothing pending
        CHECK(rig.communications().size() == 3);
    }
    SUBCASE("neutropenia removes ibuprofen")
    {
        rig.observe("n1", "neutropenia", Value(true), "physician");
        auto pdss = rig.make();
        auto run = pdss.handle_event(rig.event());
        CHECK(run.routed_tasks == std::vector<std::string>{"fever_management/hydration_tip",
                                                           "fever_management/give_paracetamol",
                                                           "fever_management/neutropenia_alert"});
        auto comms = rig.communications();
        REQUIRE(comms.size() == 3);
        CHECK(option_tasks(comms[1]) == std::set<std::string>{"give_paracetamol"});
        CHECK(comms[2].code == "alert");
    }
    SUBCASE("GoCom unavailable")
    {
        auto pdss = rig.make(load_cig_dir(data_path("cigs/pdss")), false);
        pdss.handle_event(rig.event());
        auto comms = rig.communications();
        REQUIRE(comms.size() == 2);
        CHECK(comms[1].properties.at("escalation") == "true");
        CHECK(comms[1].properties.at("verified") == "false");
        CHECK(comms[1].properties.at("instruction").find("unverified") != std::string::npos);
    }
}

TEST_CASE("fault isolation")
{
    Rig rig;
    rig.observe("t1", "body-temperature", Value(38.6));
    TempDir tmp;
    for (const auto& e : std::filesystem::directory_iterator(data_path("cigs/pdss")))
        std::filesystem::copy_file(e.path(), tmp / e.path().filename().string());

    SUBCASE("corrupted file")
    {
        { std::ofstream(tmp / "diarrhea.json") << "{ \"id\": \"diarrhea\", "; }
        auto cigs = load_cig_dir(tmp.path());
        REQUIRE(cigs.errors.size() == 1);
        CHECK(cigs.errors[0].first == "diarrhea.json");
        auto pdss = rig.make(std::move(cigs));
        auto run = pdss.handle_event(rig.event());
        CHECK(run.outputs.size() == 2);
        CHECK(run.instances.size() == 4);
    }
    SUBCASE("engine failure at run time")
    {
        // passes validation, then fails evaluation once n is known
        std::ofstream(tmp / "broken.json") << R"json({
          "id": "broken", "version": "1",
"data_items": [{"name": "n", "value_type": "integer", "meta": {"source": "calc", "calc": "hour_of_day"}}],
          "tasks": [{"name": "root", "kind": "plan", "components": ["a"]},
                    {"name": "a", "kind": "action", "precondition": "n / 0 > 1 and n + 'x' > 1",
                     "meta": {"interventionType": "tip"}}],
          "root_plan": "root"})json";
        auto cigs = load_cig_dir(tmp.path());
        auto pdss = rig.make(std::move(cigs));
        auto run = pdss.handle_event(rig.event());
        CHECK(run.status == RunStatus::done);
        CHECK(run.outputs.size() == 2);
        CHECK(pdss.cigs().errors.empty());
        REQUIRE(run.failures.size() == 1);
        CHECK(run.failures[0].first == "broken");
        CHECK(run.instances.size() == 5);
    }
}

TEST_CASE("re-delivered event is not handled twice")
{
    Rig rig;
    rig.observe("t1", "body-temperature", Value(38.6));
    auto pdss = rig.make();
    auto first = pdss.handle_event(rig.event());
    auto again = pdss.handle_event(rig.event());
    CHECK(again.replayed);
    CHECK(again.outputs == first.outputs);
    CHECK(rig.communications().size() == 2);
}

TEST_CASE("attached to the case manager")
{
    Rig rig;
    auto pdss = rig.make();
    std::mutex m;
    std::vector<std::string> runs;
    pdss.on_run([&](const AssessmentRun& r) {
        std::lock_guard lock(m);
        runs.push_back(r.run_id);
    });
    platform::CaseManager cm(rig.dp, 3);
    pdss.attach(cm);
    for (int p = 0; p < 4; ++p) {
        Resource patient;
        patient.id = "p" + std::to_string(p);
        patient.type = ResourceType::Patient;
        rig.dp.store(patient);
    }
    for (int p = 0; p < 4; ++p) {
        EventEnvelope ev;
        ev.event_type = "symptom-reported";
        ev.patient_id = "p" + std::to_string(p);
        cm.publish(ev);
        ev.event_type = "time-tick";  // not a PDSS event
        cm.publish(ev);
    }
    cm.drain();
    cm.unsubscribe(std::string(subscriber_id));
    CHECK(runs.size() == 4);
    CHECK(cm.failed_deliveries() == 0);
}

TEST_CASE("property: restart equivalence, exactly-once routing, relevance passthrough")
{
    std::mt19937 rng(808);
    auto cigs = load_cig_dir(data_path("cigs/pdss"));
    const std::vector<std::pair<std::string, int>> codes{{"body-temperature", 0}, {"nausea-score", 1},
                                                         {"diarrhea-episode", 2}, {"fatigue-score", 3},
                                                         {"oral-pain-score", 4}};
    for (int round = 0; round < 40; ++round) {
        // identical store contents built twice
        Rig a, b;
        struct Step {
            int code;
            double value;
            bool event;
        };
        std::vector<Step> steps;
        for (int i = 0; i < 12; ++i) steps.push_back({static_cast<int>(rng() % 5), static_cast<double>(rng() % 10), rng() % 3 == 0});

        auto pa = a.make(cigs);
        std::uint64_t seq = 0;
        std::vector<AssessmentRun> runs_a;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            for (auto* rig : {&a, &b}) {
                rig->clock.advance_to(rig->clock.now() + 600);
                const auto& s = steps[i];
                Value v = s.code == 0 ? Value(36.5 + s.value * 0.4) : s.code == 2 ? Value(true) : Value(static_cast<std::int64_t>(s.value));
                rig->observe("o" + std::to_string(i), codes[s.code].first, v, "patient", 0);
            }
            if (!steps[i].event) continue;
            ++seq;
            runs_a.push_back(pa.handle_event(a.event(seq)));
            // b: a fresh PDSS per event, as if restarted between runs
            auto pb = b.make(cigs);
            pb.handle_event(b.event(seq));
        }
        auto ca = a.communications(), cb = b.communications();
        REQUIRE(ca.size() == cb.size());
        for (std::size_t i = 0; i < ca.size(); ++i) CHECK(platform::to_json(ca[i]) == platform::to_json(cb[i]));
        CHECK(a.dp.trace_instances("p1") == b.dp.trace_instances("p1"));

        for (const auto& run : runs_a) {
            // every routed task lands in exactly one Communication of its run
            std::multiset<std::string> delivered;
            for (const auto& id : run.outputs) {
                auto c = a.dp.get(id);
                REQUIRE(c);
                auto cig = c->properties.at("sourceCig");
                if (c->code == "medication-proposal")
                    for (const auto& t : option_tasks(*c)) delivered.insert(cig + "/" + t);
                else
                    delivered.insert(cig + "/" + c->properties.at("task"));
            }
            std::multiset<std::string> routed(run.routed_tasks.begin(), run.routed_tasks.end());
            CHECK(delivered == routed);

            // routed set equals the engines' reported actions, recomputed from the traces
            std::multiset<std::string> activated;
            for (const auto& inst : run.instances) {
                auto cig = inst.substr(run.run_id.size() + 1);
                auto g = std::find_if(cigs.guidelines.begin(), cigs.guidelines.end(),
                                      [&](const auto& x) { return x.id() == cig; });
                for (const auto& rec : a.dp.get_trace(inst)) {
                    if (rec.to != engine::TaskState::in_progress) continue;
                    if (g->definition().find_task(rec.task)->kind == model::TaskKind::action) activated.insert(cig + "/" + rec.task);
                }
            }
            CHECK(activated == routed);
        }
    }
}
