#include "cig/gateway/environment.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "cig/gateway/gate.hpp"

namespace cig::gateway {

using platform::Resource;
using platform::ResourceStatus;
using platform::ResourceType;

EnvironmentConfig EnvironmentConfig::from_data_dir(const std::filesystem::path& data)
{
    EnvironmentConfig c;
    c.pdss_cigs = data / "cigs" / "pdss";
    c.vc_cigs = data / "cigs" / "vc" / "specialized";
    c.master = data / "cigs" / "vc" / "master.json";
    c.kdom_rules = data / "kdom";
    c.interaction_kb = data / "kb" / "interactions.csv";
    c.routes = data / "routing" / "pdss_routes.json";
    c.external = data / "external";
    return c;
}

RecommendationResponse response_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw InvalidArgument("response must be a JSON object");
    RecommendationResponse r;
    try {
        if (j.contains("communication")) r.communication_id = j.at("communication").get<std::string>();
        r.responder = j.value("responder", std::string("physician"));
        auto verdict = j.at("verdict").get<std::string>();
        if (verdict == "accepted") r.verdict = Verdict::accepted;
        else if (verdict == "rejected") r.verdict = Verdict::rejected;
        else throw InvalidArgument("verdict must be accepted or rejected, got '" + verdict + "'");
        if (j.contains("chosen")) r.chosen_options = j.at("chosen").get<std::vector<std::string>>();
        if (j.contains("at")) r.at = VirtualTime{j.at("at").get<std::int64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed response: ") + e.what());
    }
    if (r.responder != "physician" && r.responder != "patient")
        throw InvalidArgument("responder must be physician or patient");
    return r;
}

nlohmann::ordered_json recommendation_view(const Resource& comm)
{
    auto prop = [&](const char* key) {
        auto it = comm.properties.find(key);
        return it == comm.properties.end() ? std::string() : it->second;
    };
    bool proposal = comm.code == gocom::proposal_code;
    nlohmann::ordered_json j;
    j["id"] = comm.id;
    j["kind"] = proposal ? "proposal" : comm.code;
    j["title"] = comm.value.is_known() ? comm.value.to_text() : prop("title");
    j["text"] = prop("text");
    j["audience"] = prop("audience");
    j["status"] = std::string(platform::to_string(comm.status));
    j["created_at"] = comm.effective_at.value_or(VirtualTime{}).seconds;
    j["source"] = comm.source_type;
    j["source_cig"] = prop("sourceCig");
    j["evidence"] = prop("evidence");
    if (auto s = prop("scheduledFor"); !s.empty()) j["scheduled_for"] = std::stoll(s);
    if (proposal) {
        j["gate"] = prop("gate");
        j["instruction"] = prop("instruction");
        j["required"] = std::stoul(prop("required").empty() ? "0" : prop("required"));
        j["allowed"] = std::stoul(prop("allowed").empty() ? "0" : prop("allowed"));
        j["escalation"] = prop("escalation") == "true";
        j["verified"] = prop("verified") != "false";
        auto options = nlohmann::ordered_json::parse(prop("options").empty() ? "[]" : prop("options"), nullptr, false);
        j["options"] = options.is_discarded() ? nlohmann::ordered_json::array() : options;
    }
    if (auto r = prop("responder"); !r.empty()) {
        j["responder"] = r;
        j["responded_at"] = std::stoll(prop("respondedAt"));
        j["chosen"] = nlohmann::ordered_json::parse(prop("chosen"), nullptr, false);
    }
    return j;
}

Environment::Environment(EnvironmentConfig config, VirtualTime start)
    : config_(std::move(config)), clock_(start),
      platform_(std::make_unique<platform::DataPlatform>(
          clock_, platform::PlatformOptions{config_.journal, config_.fsync})),
      kdom_(*platform_)
{
    if (config_.kdom_rules) kdom_.load(*config_.kdom_rules);
    if (config_.interaction_kb) kb_.load(*config_.interaction_kb);
    if (config_.external) external_.load(*config_.external);
    if (config_.master && !std::filesystem::exists(*config_.master))
        throw NotFound("master guideline " + config_.master->string() + " not found");
    if (config_.gocom_available) gocom_ = std::make_unique<gocom::Gocom>(*platform_, kb_);
    cm_ = std::make_unique<platform::CaseManager>(*platform_, config_.workers);
    start_components();
}

Environment::~Environment()
{
    cm_->drain();
    cm_.reset();
}

void Environment::start_components()
{
    load_errors_.clear();
    auto load_set = [&](const std::filesystem::path& dir) {
        bridge::CigSet set;
        if (dir.empty()) return set;
        if (!std::filesystem::is_directory(dir)) {
            spdlog::warn("guideline directory {} not found", dir.string());
            return set;
        }
        set = bridge::load_cig_dir(dir);
        for (const auto& e : set.errors) load_errors_.push_back(e);
        return set;
    };
    auto routes = config_.routes ? pdss::RoutingTable::load(*config_.routes) : pdss::RoutingTable::defaults();
    pdss_ = std::make_unique<pdss::Pdss>(*platform_, kdom_, gocom_.get(), load_set(config_.pdss_cigs), routes);

    std::optional<model::ValidatedGuideline> master;
    if (config_.master) {
        try {
            master = bridge::load_cig_file(*config_.master);
        } catch (const std::exception& e) {
            load_errors_.emplace_back(config_.master->string(), e.what());
            spdlog::error("master guideline not loaded: {}", e.what());
        }
    }
    vc_ = std::make_unique<vc::Vc>(*platform_, &kdom_, &external_, std::move(master), load_set(config_.vc_cigs),
                                   vc::HandlerCatalog::defaults(), config_.vc);
    if (pdss_observer_) pdss_->on_run(pdss_observer_);
    if (vc_observer_) vc_->on_session(vc_observer_);
    pdss_->attach(*cm_);
    vc_->attach(*cm_);
}

void Environment::restart_components()
{
    cm_->drain();
    cm_->unsubscribe(std::string(pdss::subscriber_id));
    cm_->unsubscribe(std::string(vc::subscriber_id));
    pdss_.reset();
    vc_.reset();
    start_components();
}

void Environment::on_pdss_run(std::function<void(const pdss::AssessmentRun&)> f)
{
    pdss_observer_ = std::move(f);
    pdss_->on_run(pdss_observer_);
}

void Environment::on_vc_session(std::function<void(const vc::CoachingSession&)> f)
{
    vc_observer_ = std::move(f);
    vc_->on_session(vc_observer_);
}

void Environment::add_patient(const std::string& id, const std::string& name)
{
    if (platform_->has_patient(id)) return;
    Resource r;
    r.id = id;
    r.type = ResourceType::Patient;
    r.patient_id = id;
    r.value = Value(name.empty() ? id : name);
    r.source_type = "system";
    platform_->store(std::move(r));
}

platform::EventEnvelope Environment::post_event(const std::string& type, const std::string& patient,
                                                std::map<std::string, std::string> payload)
{
    static const std::set<std::string> known{
        platform::event_types::symptom_reported, platform::event_types::time_tick,
        platform::event_types::recommendation_response, platform::event_types::capsule_completed,
        platform::event_types::assessment_requested};
    if (!known.count(type)) throw InvalidArgument("unknown event type '" + type + "'");
    if (!platform_->has_patient(patient)) throw NotFound("unknown patient '" + patient + "'");
    platform::EventEnvelope ev;
    ev.event_type = type;
    ev.patient_id = patient;
    ev.payload = std::move(payload);
    return cm_->publish(std::move(ev));
}

std::vector<Resource> Environment::list_recommendations(const std::string& patient,
                                                        std::optional<ResourceStatus> status,
                                                        std::optional<std::string> audience) const
{
    if (!platform_->has_patient(patient)) throw NotFound("unknown patient '" + patient + "'");
    platform::ResourceQuery q;
    q.type = ResourceType::Communication;
    q.patient_id = patient;
    q.status = status;
    auto found = platform_->query(q);
    if (audience) {
        std::erase_if(found, [&](const Resource& r) {
            auto it = r.properties.find("audience");
            return it == r.properties.end() || it->second != *audience;
        });
    }
    // PDSS and VC write concurrently, so insertion order is not a stable tie-break
    std::sort(found.begin(), found.end(), [](const Resource& a, const Resource& b) {
        auto ta = a.effective_at.value_or(VirtualTime{}), tb = b.effective_at.value_or(VirtualTime{});
        if (ta != tb) return ta > tb;
        return a.id < b.id;
    });
    return found;
}

Resource Environment::respond(const RecommendationResponse& resp)
{
    std::lock_guard lock(respond_mutex_);
    auto comm = platform_->get(resp.communication_id);
    if (!comm || comm->type != ResourceType::Communication)
        throw NotFound("unknown recommendation '" + resp.communication_id + "'");
    if (comm->status != ResourceStatus::pending)
        throw Conflict(resp.communication_id + " was already " + std::string(platform::to_string(comm->status)));
    auto audience = comm->properties.count("audience") ? comm->properties.at("audience") : std::string();
    if (!audience.empty() && audience != resp.responder)
        throw InvalidArgument(resp.communication_id + " is addressed to the " + audience);

    bool proposal = comm->code == gocom::proposal_code;
    std::vector<std::string> options = proposal ? gocom::proposal_medications(*comm) : std::vector<std::string>{};
    std::set<std::string> seen;
    for (const auto& c : resp.chosen_options) {
        if (std::find(options.begin(), options.end(), c) == options.end())
            throw InvalidArgument("'" + c + "' is not an option of " + resp.communication_id);
        if (!seen.insert(c).second) throw InvalidArgument("'" + c + "' chosen twice");
    }
    if (resp.verdict == Verdict::rejected && !resp.chosen_options.empty())
        throw InvalidArgument("a rejection chooses no options");
    if (resp.verdict == Verdict::accepted && proposal) {
        auto gate = model::parse_gate(comm->properties.count("gate") ? comm->properties.at("gate") : "AND")
                        .value_or(model::Gate::all_of);
        if (!gate_admits(gate, resp.chosen_options.size(), options.size()))
            throw GateViolation(std::string(model::to_string(gate)) + " proposal with " +
                                std::to_string(options.size()) + " options does not admit " +
                                std::to_string(resp.chosen_options.size()) + " choices");
    }

    auto at = resp.at.value_or(clock_.now());
    auto chosen = nlohmann::json(resp.chosen_options).dump();
    auto updated = platform_->update_status(
        comm->id, resp.verdict == Verdict::accepted ? ResourceStatus::accepted : ResourceStatus::rejected,
        {{"responder", resp.responder}, {"respondedAt", std::to_string(at.seconds)}, {"chosen", chosen}});

    for (const auto& med : resp.chosen_options) {
        Resource ms;
        ms.id = comm->id + "/ms/" + med;
        ms.type = ResourceType::MedicationStatement;
        ms.patient_id = comm->patient_id;
        ms.code = med;
        ms.source_type = resp.responder;
        ms.status = ResourceStatus::active;
        ms.effective_at = at;
        ms.properties["proposal"] = comm->id;
        if (comm->properties.count("sourceCig")) ms.properties["sourceCig"] = comm->properties.at("sourceCig");
        platform_->store(std::move(ms));
    }
    cm_->publish({.event_type = platform::event_types::recommendation_response,
                  .patient_id = comm->patient_id,
                  .payload = {{"communication", comm->id},
                              {"verdict", resp.verdict == Verdict::accepted ? "accepted" : "rejected"},
                              {"chosen", chosen}}});
    spdlog::info("gateway: {} {} by {}", comm->id, platform::to_string(updated.status), resp.responder);
    return updated;
}

}  // namespace cig::gateway
