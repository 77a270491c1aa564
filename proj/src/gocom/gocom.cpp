#include "cig/gocom/gocom.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

namespace cig::gocom {

using platform::Resource;
using platform::ResourceQuery;
using platform::ResourceStatus;
using platform::ResourceType;

std::string_view to_string(Severity s)
{
    switch (s) {
    case Severity::minor: return "minor";
    case Severity::moderate: return "moderate";
    case Severity::major: return "major";
    }
    return "?";
}

std::optional<Severity> parse_severity(std::string_view text)
{
    for (auto s : {Severity::minor, Severity::moderate, Severity::major})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

namespace {

std::string trim(std::string s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::pair<std::string, std::string> InteractionKb::key(const std::string& a, const std::string& b)
{
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

void InteractionKb::add(InteractionRecord rec)
{
    if (rec.drug_a.empty() || rec.drug_b.empty()) throw InvalidArgument("interaction needs two drugs");
    auto k = key(rec.drug_a, rec.drug_b);
    if (records_.count(k))
        throw InvalidArgument("interaction " + rec.drug_a + "/" + rec.drug_b + " is listed twice");
    records_.emplace(k, std::move(rec));
}

std::size_t InteractionKb::load_text(const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0, added = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        // the description is the remainder and may itself contain commas
        std::vector<std::string> fields;
        std::size_t pos = 0;
        for (int i = 0; i < 3; ++i) {
            auto comma = stripped.find(',', pos);
            if (comma == std::string::npos) break;
            fields.push_back(trim(stripped.substr(pos, comma - pos)));
            pos = comma + 1;
        }
        auto where = origin + ":" + std::to_string(lineno);
        if (fields.size() != 3) throw InvalidArgument(where + ": expected drug_a,drug_b,severity,description");
        auto sev = parse_severity(fields[2]);
        if (!sev) throw InvalidArgument(where + ": unknown severity '" + fields[2] + "'");
        if (fields[0].empty() || fields[1].empty()) throw InvalidArgument(where + ": empty drug code");
        try {
            add({fields[0], fields[1], *sev, trim(stripped.substr(pos))});
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(where + ": " + e.what());
        }
        ++added;
    }
    return added;
}

std::size_t InteractionKb::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw NotFound("cannot read interaction KB " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return load_text(buf.str(), path.string());
}

std::optional<InteractionRecord> InteractionKb::lookup(const std::string& a, const std::string& b) const
{
    auto it = records_.find(key(a, b));
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

GateFormat format_by_gate(std::size_t safe, std::size_t total, model::Gate gate)
{
    GateFormat f;
    switch (gate) {
    case model::Gate::all_of:
        f.required = total;
        f.allowed = total;
        f.instruction = "follow all " + std::to_string(total) + " recommendations";
        break;
    case model::Gate::any_of:
        f.required = 1;
        f.allowed = safe;
        f.instruction = "follow at least one safe option";
        break;
    case model::Gate::exactly_one:
        f.required = 1;
        f.allowed = 1;
        f.instruction = "choose exactly one";
        break;
    }
    f.escalation = f.required > safe;
    if (f.escalation) f.instruction += "; no safe way to satisfy the gate, escalate for physician review";
    return f;
}

std::vector<std::string> proposal_medications(const Resource& comm)
{
    std::vector<std::string> out;
    auto it = comm.properties.find("options");
    if (it == comm.properties.end()) return out;
    auto arr = nlohmann::json::parse(it->second, nullptr, false);
    if (!arr.is_array()) return out;
    for (const auto& o : arr)
        if (o.is_object() && o.contains("medication") && o["medication"].is_string())
            out.push_back(o["medication"].get<std::string>());
    return out;
}

std::vector<DrugConflict> Gocom::check_option(const std::string& patient, const std::string& medication,
                                              const std::string& source_cig) const
{
    std::vector<DrugConflict> out;
    auto hit = [&](const std::string& other, const std::string& origin, const std::string& ref, const std::string& note) {
        if (other == medication) return;
        auto rec = source_.lookup(medication, other);
        if (!rec) return;
        DrugConflict c;
        c.other = other;
        c.severity = rec->severity;
        c.description = rec->description;
        c.origin = origin;
        c.reference = ref;
        c.explanation = medication + " interacts with " + other + " (" + std::string(to_string(rec->severity)) +
                        "): " + rec->description + " " + note;
        out.push_back(std::move(c));
    };

    ResourceQuery active;
    active.type = ResourceType::MedicationStatement;
    active.patient_id = patient;
    active.status = ResourceStatus::active;
    for (const auto& r : platform_.query(active))
        hit(r.code, std::string(origin_active), r.id, "The patient is currently taking " + r.code + ".");

    ResourceQuery pending;
    pending.type = ResourceType::Communication;
    pending.patient_id = patient;
    pending.code = std::string(proposal_code);
    pending.status = ResourceStatus::pending;
    for (const auto& r : platform_.query(pending)) {
        auto src = r.properties.count("sourceCig") ? r.properties.at("sourceCig") : std::string();
        if (!source_cig.empty() && src == source_cig) continue;
        for (const auto& med : proposal_medications(r))
            hit(med, std::string(origin_other_guideline), r.id, "Guideline " + src + " also proposes " + med + ".");
    }
    return out;
}

RevisedRecommendation Gocom::mitigate(const MedicationProposal& proposal) const
{
    RevisedRecommendation rev;
    rev.source_cig = proposal.source_cig;
    rev.decision_task = proposal.decision_task;
    rev.gate = proposal.gate;
    std::size_t safe = 0;
    for (const auto& opt : proposal.options) {
        RevisedOption o;
        o.medication = opt.medication;
        o.task = opt.task;
        o.evidence = opt.evidence;
        o.conflicts = check_option(proposal.patient_id, opt.medication, proposal.source_cig);
        o.safe = o.conflicts.empty();
        if (o.safe) ++safe;
        rev.options.push_back(std::move(o));
    }
    auto f = format_by_gate(safe, rev.options.size(), rev.gate);
    rev.instruction = f.instruction;
    rev.required = f.required;
    rev.allowed = f.allowed;
    rev.escalation = f.escalation;
    spdlog::debug("gocom: {} {} -> {} of {} safe, escalation {}", proposal.source_cig, proposal.decision_task, safe,
                  rev.options.size(), rev.escalation);
    return rev;
}

RevisedRecommendation Gocom::unverified(const MedicationProposal& proposal)
{
    RevisedRecommendation rev;
    rev.source_cig = proposal.source_cig;
    rev.decision_task = proposal.decision_task;
    rev.gate = proposal.gate;
    for (const auto& opt : proposal.options) rev.options.push_back({opt.medication, opt.task, false, {}, opt.evidence});
    auto f = format_by_gate(0, rev.options.size(), rev.gate);
    rev.required = f.required;
    rev.allowed = f.allowed;
    rev.instruction = f.instruction + " (unverified: interaction check unavailable)";
    rev.escalation = true;
    rev.verified = false;
    return rev;
}

nlohmann::ordered_json to_json(const DrugConflict& c)
{
    return {{"other", c.other},
            {"severity", std::string(to_string(c.severity))},
            {"description", c.description},
            {"origin", c.origin},
            {"reference", c.reference},
            {"explanation", c.explanation}};
}

nlohmann::ordered_json to_json(const RevisedOption& o)
{
    nlohmann::ordered_json j;
    j["medication"] = o.medication;
    j["task"] = o.task;
    j["safe"] = o.safe;
    j["conflicts"] = nlohmann::ordered_json::array();
    for (const auto& c : o.conflicts) j["conflicts"].push_back(to_json(c));
    j["evidence"] = o.evidence;
    return j;
}

nlohmann::ordered_json to_json(const RevisedRecommendation& r)
{
    nlohmann::ordered_json j;
    j["sourceCig"] = r.source_cig;
    j["decisionTask"] = r.decision_task;
    j["gate"] = std::string(model::to_string(r.gate));
    j["instruction"] = r.instruction;
    j["required"] = r.required;
    j["allowed"] = r.allowed;
    j["escalation"] = r.escalation;
    j["verified"] = r.verified;
    j["options"] = nlohmann::ordered_json::array();
    for (const auto& o : r.options) j["options"].push_back(to_json(o));
    return j;
}

RevisedRecommendation revised_from_json(const nlohmann::json& j)
{
    RevisedRecommendation r;
    r.source_cig = j.value("sourceCig", "");
    r.decision_task = j.value("decisionTask", "");
    auto gate = model::parse_gate(j.value("gate", "AND"));
    if (!gate) throw InvalidArgument("unknown gate");
    r.gate = *gate;
    r.instruction = j.value("instruction", "");
    r.required = j.value("required", std::size_t{0});
    r.allowed = j.value("allowed", std::size_t{0});
    r.escalation = j.value("escalation", false);
    r.verified = j.value("verified", true);
    for (const auto& o : j.value("options", nlohmann::json::array())) {
        RevisedOption opt;
        opt.medication = o.value("medication", "");
        opt.task = o.value("task", "");
        opt.safe = o.value("safe", true);
        opt.evidence = o.value("evidence", "");
        for (const auto& c : o.value("conflicts", nlohmann::json::array())) {
            DrugConflict dc;
            dc.other = c.value("other", "");
            dc.severity = parse_severity(c.value("severity", "minor")).value_or(Severity::minor);
            dc.description = c.value("description", "");
            dc.origin = c.value("origin", "");
            dc.reference = c.value("reference", "");
            dc.explanation = c.value("explanation", "");
            opt.conflicts.push_back(std::move(dc));
        }
        r.options.push_back(std::move(opt));
    }
    return r;
}

}  // namespace cig::gocom
