#include "cig/gateway/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

namespace cig::gateway {

using platform::Resource;
using platform::ResourceType;
using json = nlohmann::json;

namespace {

std::int64_t time_field(const json& j, const char* key, std::int64_t fallback)
{
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) throw InvalidArgument(std::string(key) + " must be an integer number of seconds");
    auto v = it->get<std::int64_t>();
    if (v < 0) throw InvalidArgument(std::string(key) + " must not be negative");
    return v;
}

std::map<std::string, std::string> string_map(const json& j, const std::string& what)
{
    std::map<std::string, std::string> out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw InvalidArgument(what + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) out[k] = v.get<std::string>();
        else if (v.is_number() || v.is_boolean()) out[k] = v.dump();
        else throw InvalidArgument(what + "." + k + " must be a scalar");
    }
    return out;
}

ScenarioStep parse_step(const json& j, VirtualTime start)
{
    if (!j.is_object()) throw InvalidArgument("each event must be an object");
    ScenarioStep s;
    s.at = VirtualTime{time_field(j, "at", start.seconds)};
    if (s.at < start) throw InvalidArgument("event at " + std::to_string(s.at.seconds) + " precedes the start time");
    if (j.contains("store")) {
        s.kind = ScenarioStep::Kind::store;
        s.resource = platform::resource_from_json(j.at("store"));
        if (s.resource.id.empty()) throw InvalidArgument("stored resources need an id");
    } else if (j.contains("respond")) {
        s.kind = ScenarioStep::Kind::respond;
        s.response = response_from_json(j.at("respond"));
        if (s.response.communication_id.empty()) throw InvalidArgument("respond needs a communication id");
        s.response.at = s.at;
    } else {
        s.kind = ScenarioStep::Kind::event;
        s.event_type = j.value("type", "");
        s.patient = j.value("patient", "");
        if (s.event_type.empty() || s.patient.empty()) throw InvalidArgument("events need a type and a patient");
        if (j.contains("payload")) s.payload = string_map(j.at("payload"), "payload");
    }
    return s;
}

std::string prop(const Resource& r, const std::string& key)
{
    auto it = r.properties.find(key);
    return it == r.properties.end() ? std::string() : it->second;
}

std::vector<Resource> of_type(const platform::DataPlatform& dp, const std::string& patient, ResourceType type)
{
    platform::ResourceQuery q;
    q.type = type;
    q.patient_id = patient;
    auto out = dp.query(q);
    std::sort(out.begin(), out.end(), [](const Resource& a, const Resource& b) { return a.id < b.id; });
    return out;
}

template <class T>
std::string listed(const T& items)
{
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return "[" + out + "]";
}

ExpectationResult check_communications(const Environment& env, const json& c)
{
    ExpectationResult r;
    auto patient = c.value("patient", "");
    auto found = of_type(env.platform(), patient, ResourceType::Communication);
    std::erase_if(found, [&](const Resource& x) {
        if (c.contains("code") && x.code != c.at("code").get<std::string>()) return true;
        if (c.contains("status") && platform::to_string(x.status) != c.at("status").get<std::string>()) return true;
        if (c.contains("audience") && prop(x, "audience") != c.at("audience").get<std::string>()) return true;
        if (c.contains("source_cig") && prop(x, "sourceCig") != c.at("source_cig").get<std::string>()) return true;
        return false;
    });
    r.passed = true;
    if (c.contains("count")) {
        auto want = c.at("count").get<std::size_t>();
        if (found.size() != want) {
            r.passed = false;
            r.detail = "expected " + std::to_string(want) + " communications, found " + std::to_string(found.size());
        }
    }
    if (c.contains("tasks")) {
        std::multiset<std::string> want, got;
        for (const auto& t : c.at("tasks")) want.insert(t.get<std::string>());
        for (const auto& x : found) got.insert(prop(x, "sourceCig") + "/" + prop(x, "task"));
        if (want != got) {
            r.passed = false;
            r.detail += (r.detail.empty() ? "" : "; ") + std::string("expected tasks ") + listed(want) + ", found " +
                        listed(got);
        }
    }
    if (r.passed) r.detail = std::to_string(found.size()) + " communications";
    return r;
}

ExpectationResult check_resource(const Environment& env, const json& c)
{
    ExpectationResult r;
    auto id = c.value("id", "");
    auto res = env.platform().get(id);
    bool want_exists = c.value("exists", true);
    if (!res) {
        r.passed = !want_exists;
        r.detail = id + " not found";
        return r;
    }
    if (!want_exists) {
        r.detail = id + " exists";
        return r;
    }
    std::vector<std::string> problems;
    if (c.contains("status") && platform::to_string(res->status) != c.at("status").get<std::string>())
        problems.push_back("status is " + std::string(platform::to_string(res->status)));
    if (c.contains("code") && res->code != c.at("code").get<std::string>()) problems.push_back("code is " + res->code);
    auto props = c.value("properties", json::object());
    auto contains = c.value("contains", json::object());
    for (const auto& [k, v] : props.items())
        if (prop(*res, k) != v.get<std::string>()) problems.push_back(k + " is '" + prop(*res, k) + "'");
    for (const auto& [k, v] : contains.items())
        if (prop(*res, k).find(v.get<std::string>()) == std::string::npos)
            problems.push_back(k + " lacks '" + v.get<std::string>() + "'");
    r.passed = problems.empty();
    r.detail = r.passed ? id + " matches" : listed(problems);
    return r;
}

ExpectationResult check_medications(const Environment& env, const json& c)
{
    ExpectationResult r;
    std::set<std::string> want, got;
    for (const auto& m : c.at("active")) want.insert(m.get<std::string>());
    for (const auto& ms : of_type(env.platform(), c.value("patient", ""), ResourceType::MedicationStatement))
        if (ms.status == platform::ResourceStatus::active) got.insert(ms.code);
    r.passed = want == got;
    r.detail = "active " + listed(got);
    return r;
}

ExpectationResult check_task_states(const Environment& env, const json& c)
{
    ExpectationResult r;
    auto instance = c.value("instance", "");
    std::map<std::string, std::string> final_state;
    for (const auto& rec : env.platform().get_trace(instance))
        final_state[rec.task] = std::string(engine::to_string(rec.to));
    std::vector<std::string> problems;
    for (const auto& [task, state] : c.at("states").items()) {
        auto it = final_state.find(task);
        auto got = it == final_state.end() ? std::string("dormant") : it->second;
        if (got != state.get<std::string>()) problems.push_back(task + " is " + got);
    }
    r.passed = problems.empty();
    r.detail = r.passed ? instance + " matches" : listed(problems);
    return r;
}

}  // namespace

ScenarioScript parse_scenario(const json& j)
{
    if (!j.is_object()) throw InvalidArgument("scenario must be a JSON object");
    ScenarioScript s;
    try {
        s.name = j.value("name", "");
        s.description = j.value("description", "");
        s.start = VirtualTime{time_field(j, "start", 0)};
        for (const auto& p : j.value("patients", json::array())) {
            if (p.is_string()) s.patients.emplace_back(p.get<std::string>(), "");
            else s.patients.emplace_back(p.at("id").get<std::string>(), p.value("name", ""));
        }
        for (const auto& r : j.value("initial_resources", json::array())) {
            auto res = platform::resource_from_json(r);
            if (res.id.empty()) throw InvalidArgument("initial resources need an id");
            s.initial_resources.push_back(std::move(res));
        }
        for (const auto& e : j.value("events", json::array())) s.steps.push_back(parse_step(e, s.start));
        for (const auto& e : j.value("expectations", json::array())) {
            if (!e.is_object()) throw InvalidArgument("each expectation must be an object");
            Expectation x;
            x.description = e.value("description", "");
            x.check = e;
            x.check.erase("description");
            s.expectations.push_back(std::move(x));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed scenario: ") + e.what());
    }
    std::stable_sort(s.steps.begin(), s.steps.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw NotFound("cannot read scenario " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    auto s = parse_scenario(j);
    if (s.name.empty()) s.name = path.stem().string();
    return s;
}

ExpectationResult evaluate(const Environment& env, const Expectation& e)
{
    ExpectationResult r;
    try {
        if (e.check.contains("communications")) r = check_communications(env, e.check.at("communications"));
        else if (e.check.contains("resource")) r = check_resource(env, e.check.at("resource"));
        else if (e.check.contains("medications")) r = check_medications(env, e.check.at("medications"));
        else if (e.check.contains("task_states")) r = check_task_states(env, e.check.at("task_states"));
        else r.detail = "unknown expectation kind";
    } catch (const std::exception& ex) {
        r.passed = false;
        r.detail = std::string("malformed expectation: ") + ex.what();
    }
    r.description = e.description.empty() ? e.check.dump() : e.description;
    return r;
}

nlohmann::ordered_json patient_report(const platform::DataPlatform& dp, const std::string& patient)
{
    nlohmann::ordered_json p;
    p["id"] = patient;
    p["events"] = nlohmann::ordered_json::array();
    for (const auto& ev : dp.events(patient)) p["events"].push_back(platform::to_json(ev));
    p["communications"] = nlohmann::ordered_json::array();
    for (const auto& c : of_type(dp, patient, ResourceType::Communication)) p["communications"].push_back(to_json(c));
    p["medication_statements"] = nlohmann::ordered_json::array();
    for (const auto& m : of_type(dp, patient, ResourceType::MedicationStatement))
        p["medication_statements"].push_back(to_json(m));
    auto instances = dp.trace_instances(patient);
    std::sort(instances.begin(), instances.end());
    p["traces"] = nlohmann::ordered_json::array();
    for (const auto& id : instances) {
        nlohmann::ordered_json t;
        t["instance"] = id;
        t["records"] = nlohmann::ordered_json::array();
        for (const auto& rec : dp.get_trace(id)) t["records"].push_back(engine::to_json(rec));
        p["traces"].push_back(std::move(t));
    }
    return p;
}

bool ScenarioResult::passed() const
{
    return std::all_of(expectations.begin(), expectations.end(), [](const auto& e) { return e.passed; });
}

ScenarioRunner::ScenarioRunner(Environment& env, const ScenarioScript& script, RunOptions options)
    : env_(env), script_(script), options_(options)
{
}

void ScenarioRunner::setup()
{
    env_.clock().advance_to(script_.start);
    for (const auto& [id, name] : script_.patients) env_.add_patient(id, name);
    for (auto r : script_.initial_resources) {
        if (env_.platform().get(r.id)) continue;
        if (!r.effective_at) r.effective_at = script_.start;
        env_.platform().store(std::move(r));
    }
}

void ScenarioRunner::run_step(std::size_t i)
{
    const auto& step = script_.steps.at(i);
    env_.clock().advance_to(step.at);
    switch (step.kind) {
    case ScenarioStep::Kind::event:
        env_.post_event(step.event_type, step.patient, step.payload);
        break;
    case ScenarioStep::Kind::store: {
        auto r = step.resource;
        if (!r.effective_at) r.effective_at = step.at;
        env_.platform().store(std::move(r));
        break;
    }
    case ScenarioStep::Kind::respond:
        env_.respond(step.response);
        break;
    }
    const auto* next = i + 1 < script_.steps.size() ? &script_.steps[i + 1] : nullptr;
    bool barrier = !next || next->at != step.at || next->kind != ScenarioStep::Kind::event ||
                   step.kind != ScenarioStep::Kind::event;
    if (barrier) {
        env_.drain();
        if (options_.restart_between_events) env_.restart_components();
    }
}

void ScenarioRunner::run_all()
{
    for (std::size_t i = 0; i < steps(); ++i) run_step(i);
    env_.drain();
}

ScenarioResult ScenarioRunner::finish() const
{
    ScenarioResult out;
    for (const auto& e : script_.expectations) out.expectations.push_back(evaluate(env_, e));

    auto& rep = out.report;
    rep["scenario"] = script_.name;
    rep["start"] = script_.start.seconds;
    rep["load_errors"] = nlohmann::ordered_json::array();
    for (const auto& [file, msg] : env_.load_errors())
        rep["load_errors"].push_back({{"file", std::filesystem::path(file).filename().string()}, {"error", msg}});
    std::set<std::string> ids;
    for (const auto& [id, name] : script_.patients) ids.insert(id);
    for (const auto& id : env_.platform().patients()) ids.insert(id);
    rep["patients"] = nlohmann::ordered_json::array();
    std::size_t comms = 0;
    for (const auto& id : ids) {
        auto p = patient_report(env_.platform(), id);
        comms += p["communications"].size();
        rep["patients"].push_back(std::move(p));
    }
    rep["expectations"] = nlohmann::ordered_json::array();
    std::size_t passed = 0;
    for (const auto& e : out.expectations) {
        passed += e.passed;
        rep["expectations"].push_back({{"description", e.description}, {"passed", e.passed}, {"detail", e.detail}});
    }
    rep["summary"] = {{"communications", comms},
                      {"expectations_passed", passed},
                      {"expectations_failed", out.expectations.size() - passed}};
    return out;
}

ScenarioResult run_scenario(const ScenarioScript& script, const EnvironmentConfig& config, RunOptions options)
{
    Environment env(config, script.start);
    ScenarioRunner runner(env, script, options);
    runner.setup();
    runner.run_all();
    return runner.finish();
}

}  // namespace cig::gateway
