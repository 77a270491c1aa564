#include "cig/pdss/pdss.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace cig::pdss {

using engine::ReportedTask;
using model::get_meta;
using platform::Resource;
using platform::ResourceStatus;
using platform::ResourceType;
namespace meta = model::meta;

std::string_view to_string(Route r)
{
    return r == Route::gocom_mediation ? "gocom-mediation" : "direct-communication";
}

std::string_view to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::done: return "done";
    case RunStatus::failed: return "failed";
    }
    return "?";
}

RoutingTable RoutingTable::defaults()
{
    RoutingTable t;
    t.routes_ = {{"tip", Route::direct_communication},
                 {"reminder", Route::direct_communication},
                 {"alert", Route::direct_communication},
                 {"medication-proposal", Route::gocom_mediation}};
    return t;
}

RoutingTable RoutingTable::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw NotFound("cannot read routing table " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (!doc.is_object()) throw InvalidArgument("routing table " + path.string() + " must be a JSON object");
    RoutingTable t;
    for (auto& [type, route] : doc.items()) {
        auto name = route.is_string() ? route.get<std::string>() : std::string();
        if (name == "direct-communication") t.routes_[type] = Route::direct_communication;
        else if (name == "gocom-mediation") t.routes_[type] = Route::gocom_mediation;
        else throw InvalidArgument("routing table: unknown route for " + type);
    }
    return t;
}

Route RoutingTable::route(const std::string& intervention_type) const
{
    auto it = routes_.find(intervention_type);
    if (it != routes_.end()) return it->second;
    spdlog::warn("pdss: no route for interventionType '{}', sending it directly", intervention_type);
    return Route::direct_communication;
}

nlohmann::ordered_json to_json(const AssessmentRun& run)
{
    nlohmann::ordered_json j;
    j["run_id"] = run.run_id;
    j["patient"] = run.patient_id;
    j["trigger"] = run.trigger_event.event_id;
    j["status"] = std::string(to_string(run.status));
    j["instances"] = run.instances;
    nlohmann::ordered_json gathered = nlohmann::ordered_json::object();
    for (const auto& [k, v] : run.gathered) gathered[k] = to_json(v);
    j["gathered"] = gathered;
    j["routed"] = run.routed_tasks;
    j["outputs"] = run.outputs;
    auto failures = nlohmann::ordered_json::array();
    for (const auto& [g, msg] : run.failures) failures.push_back({{"guideline", g}, {"error", msg}});
    j["failures"] = failures;
    if (run.replayed) j["replayed"] = true;
    return j;
}

Pdss::Pdss(platform::DataPlatform& platform, const kdom::Kdom& kdom, const gocom::Gocom* gocom, CigSet cigs,
           RoutingTable routes)
    : platform_(platform), kdom_(kdom), gocom_(gocom), cigs_(std::move(cigs)), routes_(std::move(routes)),
      resolver_(platform, &kdom)
{
}

void Pdss::attach(platform::CaseManager& cm)
{
    platform::Subscription sub;
    sub.subscriber_id = std::string(subscriber_id);
    sub.event_types = {std::string(platform::event_types::symptom_reported),
                       std::string(platform::event_types::assessment_requested)};
    cm.subscribe(sub, [this](const platform::EventEnvelope& ev) { handle_event(ev); });
}

AssessmentRun Pdss::handle_event(const platform::EventEnvelope& ev) const
{
    AssessmentRun run;
    run.run_id = "pdss/" + ev.patient_id + "/" + std::to_string(ev.seq);
    run.patient_id = ev.patient_id;
    run.trigger_event = ev;
    auto now = ev.at;

    // Re-delivery of an event already handled: report what is on record.
    bool seen = std::any_of(cigs_.guidelines.begin(), cigs_.guidelines.end(),
                            [&](const auto& g) { return platform_.has_trace(run.run_id + "/" + g.id()); });
    if (seen) {
        platform::ResourceQuery q;
        q.type = ResourceType::Communication;
        q.patient_id = ev.patient_id;
        for (const auto& r : platform_.query(q))
            if (r.properties.count("runId") && r.properties.at("runId") == run.run_id) run.outputs.push_back(r.id);
        for (const auto& g : cigs_.guidelines)
            if (platform_.has_trace(run.run_id + "/" + g.id())) run.instances.push_back(run.run_id + "/" + g.id());
        run.replayed = true;
        run.status = RunStatus::done;
        spdlog::info("pdss: {} already handled, skipping", run.run_id);
        if (observer_) observer_(run);
        return run;
    }

    // Instantiate every guideline, gather inputs, run to completion. Each
    // guideline is isolated: a failure skips it, the run continues.
    std::vector<Outcome> outcomes;
    for (const auto& g : cigs_.guidelines) {
        auto instance_id = run.run_id + "/" + g.id();
        try {
            engine::EnactOptions opts;
            opts.instance_id = instance_id;
            opts.mode = engine::DecisionMode::automatic;
            opts.at = now;
            auto inst = engine::EngineInstance::enact(g, ev.patient_id, {}, opts);
            auto bindings = resolver_.gather(g.definition(), ev.patient_id, now);
            for (const auto& b : bindings) run.gathered[b.item] = b.value;
            inst.set_data_values(bindings);
            auto report = inst.run_to_completion();
            inst.terminate();
            platform_.append_trace(instance_id, ev.patient_id, inst.transition_log());
            run.instances.push_back(instance_id);
            run.recorded.push_back({instance_id, g.id(), inst.recording()});
            outcomes.push_back({instance_id, &g, std::move(report)});
        } catch (const std::exception& e) {
            spdlog::error("pdss: {} failed in {}: {}", g.id(), run.run_id, e.what());
            run.failures.emplace_back(g.id(), e.what());
        }
    }

    // Routing happens after every engine has finished.
    for (const auto& o : outcomes) {
        try {
            route(run, o);
        } catch (const std::exception& e) {
            spdlog::error("pdss: routing {} failed: {}", o.instance_id, e.what());
            run.failures.emplace_back(o.guideline->id(), e.what());
        }
    }
    run.status = RunStatus::done;
    spdlog::info("pdss: {} done, {} outputs, {} failures", run.run_id, run.outputs.size(), run.failures.size());
    if (observer_) observer_(run);
    return run;
}

void Pdss::route(AssessmentRun& run, const Outcome& o) const
{
    // Proposals are grouped by the decision named in decisionRef and
    // written where their first member appears.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ReportedTask*>> groups;
    std::vector<std::pair<std::string, const ReportedTask*>> items;  // (group key or "", direct task)
    for (const auto& task : o.report.recommended) {
        auto type = task.meta.count(std::string(meta::intervention_type)) ? task.meta.at(std::string(meta::intervention_type))
                                                                          : std::string();
        run.routed_tasks.push_back(o.guideline->id() + "/" + task.name);
        if (routes_.route(type) == Route::gocom_mediation) {
            auto ref = task.meta.count(std::string(meta::decision_ref)) ? task.meta.at(std::string(meta::decision_ref))
                                                                       : task.name;
            if (!groups.count(ref)) items.emplace_back(ref, nullptr);
            groups[ref].push_back(&task);
        } else {
            items.emplace_back("", &task);
        }
    }
    for (const auto& [key, task] : items) {
        if (task) run.outputs.push_back(write_direct(run, o, *task));
        else run.outputs.push_back(write_proposal(run, o, key, groups[key]));
    }
}

namespace {

std::string meta_or(const model::MetaPropertyMap& m, std::string_view key, std::string fallback = {})
{
    auto it = m.find(std::string(key));
    return it == m.end() ? fallback : it->second;
}

}  // namespace

std::string Pdss::write_direct(const AssessmentRun& run, const Outcome& o, const ReportedTask& task) const
{
    const auto& def = o.guideline->definition();
    const auto* t = def.find_task(task.name);
    Resource r;
    r.id = o.instance_id + "/" + task.name;
    r.type = ResourceType::Communication;
    r.patient_id = run.patient_id;
    r.code = meta_or(task.meta, meta::intervention_type, "tip");
    r.value = Value(meta_or(task.meta, meta::title, task.name));
    r.source_type = "pdss";
    r.status = ResourceStatus::pending;
    r.effective_at = run.trigger_event.at;
    r.properties["audience"] = "physician";
    r.properties["sourceCig"] = o.guideline->id();
    r.properties["instanceId"] = o.instance_id;
    r.properties["runId"] = run.run_id;
    r.properties["task"] = task.name;
    r.properties["title"] = meta_or(task.meta, meta::title, task.name);
    if (t && !t->procedure.empty()) r.properties["text"] = t->procedure;
    if (auto ev = meta_or(task.meta, meta::evidence); !ev.empty()) r.properties["evidence"] = ev;
    r.properties["trigger"] = run.trigger_event.event_id;
    return platform_.store(std::move(r));
}

std::string Pdss::write_proposal(const AssessmentRun& run, const Outcome& o, const std::string& decision,
                                 const std::vector<const ReportedTask*>& members) const
{
    const auto& def = o.guideline->definition();
    gocom::MedicationProposal p;
    p.patient_id = run.patient_id;
    p.source_cig = o.guideline->id();
    p.decision_task = decision;
    if (const auto* d = def.find_task(decision)) {
        if (auto g = get_meta(*d, meta::gate)) {
            if (auto gate = model::parse_gate(*g)) p.gate = *gate;
            else spdlog::warn("pdss: {}.{} has unknown gate '{}', using AND", p.source_cig, decision, *g);
        }
    }
    for (const auto* m : members) {
        gocom::ProposalOption opt;
        opt.medication = meta_or(m->meta, meta::medication, m->name);
        opt.task = m->name;
        opt.evidence = meta_or(m->meta, meta::evidence);
        p.options.push_back(std::move(opt));
    }

    gocom::RevisedRecommendation rev;
    if (!gocom_) {
        spdlog::warn("pdss: GoCom unavailable, {} written unverified", decision);
        rev = gocom::Gocom::unverified(p);
    } else {
        try {
            rev = gocom_->mitigate(p);
        } catch (const gocom::SourceUnavailable& e) {
            spdlog::warn("pdss: GoCom unavailable ({}), {} written unverified", e.what(), decision);
            rev = gocom::Gocom::unverified(p);
        }
    }

    std::string title = decision;
    if (const auto* d = def.find_task(decision)) title = get_meta(*d, meta::title).value_or(decision);

    Resource r;
    r.id = o.instance_id + "/" + decision;
    r.type = ResourceType::Communication;
    r.patient_id = run.patient_id;
    r.code = std::string(gocom::proposal_code);
    r.value = Value(title);
    r.source_type = "pdss";
    r.status = ResourceStatus::pending;
    r.effective_at = run.trigger_event.at;
    r.properties["audience"] = "physician";
    r.properties["sourceCig"] = o.guideline->id();
    r.properties["instanceId"] = o.instance_id;
    r.properties["runId"] = run.run_id;
    r.properties["task"] = decision;
    r.properties["title"] = title;
    r.properties["decisionTask"] = decision;
    r.properties["gate"] = std::string(model::to_string(rev.gate));
    r.properties["instruction"] = rev.instruction;
    r.properties["required"] = std::to_string(rev.required);
    r.properties["allowed"] = std::to_string(rev.allowed);
    r.properties["escalation"] = rev.escalation ? "true" : "false";
    r.properties["verified"] = rev.verified ? "true" : "false";
    auto options = nlohmann::ordered_json::array();
    for (const auto& opt : rev.options) options.push_back(gocom::to_json(opt));
    r.properties["options"] = options.dump();
    r.properties["trigger"] = run.trigger_event.event_id;
    return platform_.store(std::move(r));
}

}  // namespace cig::pdss
