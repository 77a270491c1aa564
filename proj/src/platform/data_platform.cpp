#include "cig/platform/data_platform.hpp"

#include <algorithm>
#include <mutex>

#include <spdlog/spdlog.h>

#include "cig/core/error.hpp"

namespace cig::platform {

using nlohmann::json;
using nlohmann::ordered_json;

DataPlatform::DataPlatform(const Clock& clock, PlatformOptions options) : clock_(clock)
{
    if (!options.journal) return;
    journal_ = std::make_unique<Journal>(*options.journal, options.fsync);
    auto records = journal_->load();
    for (const auto& rec : records) apply(rec);
    spdlog::debug("platform: replayed {} journal records from {}", records.size(), options.journal->string());
}

void DataPlatform::apply(const json& record)
{
    const auto kind = record.value("kind", "");
    if (kind == "resource") {
        apply_resource(resource_from_json(record.at("resource")));
    } else if (kind == "status") {
        PropertyMap props;
        for (const auto& [k, v] : record.at("properties").items()) props[k] = v.get<std::string>();
        apply_status(record.at("id").get<std::string>(),
                     *parse_resource_status(record.at("status").get<std::string>()),
                     VirtualTime{record.at("at").get<std::int64_t>()}, props);
    } else if (kind == "trace") {
        apply_trace(record.at("instance_id").get<std::string>(), record.at("patient").get<std::string>(),
                    engine::transition_from_json(record.at("record")));
    } else if (kind == "event") {
        apply_event(event_from_json(record.at("event")));
    } else {
        throw Error("unknown journal record kind '" + kind + "'");
    }
}

void DataPlatform::apply_resource(Resource res)
{
    auto idx = resources_.size();
    by_id_[res.id] = idx;
    by_patient_type_[{res.patient_id, res.type}].push_back(idx);
    auto at = res.effective_at.value_or(VirtualTime{});
    resources_.push_back({std::move(res), {}});
    resources_.back().history.push_back({resources_.back().resource.status, at});
}

void DataPlatform::apply_status(const std::string& id, ResourceStatus status, VirtualTime at, const PropertyMap& props)
{
    auto& stored = resources_[by_id_.at(id)];
    stored.resource.status = status;
    for (const auto& [k, v] : props) stored.resource.properties[k] = v;
    stored.history.push_back({status, at});
}

void DataPlatform::apply_trace(const std::string& instance_id, const std::string& patient_id, engine::TransitionRecord rec)
{
    auto& trace = traces_[instance_id];
    if (trace.empty()) trace_index_[patient_id].push_back(instance_id);
    trace.push_back(std::move(rec));
}

void DataPlatform::apply_event(EventEnvelope ev)
{
    events_[ev.patient_id].push_back(std::move(ev));
}

std::string DataPlatform::store(Resource res)
{
    if (res.id.empty()) throw InvalidArgument("resource id is required");
    if (res.type == ResourceType::Patient && res.patient_id.empty()) res.patient_id = res.id;
    if (res.patient_id.empty())
        throw InvalidArgument(std::string(to_string(res.type)) + " " + res.id + " has no patient");
    if (!res.effective_at) res.effective_at = clock_.now();

    std::unique_lock lock(mutex_);
    if (by_id_.count(res.id)) throw Conflict("duplicate resource id '" + res.id + "'");
    if (journal_) {
        ordered_json rec;
        rec["kind"] = "resource";
        rec["resource"] = to_json(res);
        journal_->append(rec);
    }
    auto id = res.id;
    apply_resource(std::move(res));
    return id;
}

std::optional<Resource> DataPlatform::get(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return resources_[it->second].resource;
}

std::vector<Resource> DataPlatform::query(const ResourceQuery& q) const
{
    if (q.window && q.window->second < q.window->first) throw InvalidArgument("query window ends before it starts");
    std::vector<std::size_t> hits;
    std::shared_lock lock(mutex_);
    auto it = by_patient_type_.find({q.patient_id, q.type});
    if (it == by_patient_type_.end()) return {};
    for (auto idx : it->second)
        if (q.matches(resources_[idx].resource)) hits.push_back(idx);

    auto at = [&](std::size_t i) { return resources_[i].resource.effective_at.value_or(VirtualTime{}); };
    // Ties keep insertion order in both directions so results are stable.
    std::stable_sort(hits.begin(), hits.end(), [&](auto a, auto b) { return at(a) < at(b); });
    if (q.order == ResourceQuery::Order::newest_first) {
        std::stable_sort(hits.begin(), hits.end(), [&](auto a, auto b) {
            if (at(a) != at(b)) return at(a) > at(b);
            return a > b;
        });
    }
    if (q.limit && hits.size() > *q.limit) hits.resize(*q.limit);

    std::vector<Resource> out;
    out.reserve(hits.size());
    for (auto idx : hits) out.push_back(resources_[idx].resource);
    return out;
}

bool DataPlatform::has_patient(const std::string& patient_id) const
{
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(patient_id);
    return it != by_id_.end() && resources_[it->second].resource.type == ResourceType::Patient;
}

std::vector<std::string> DataPlatform::patients() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& s : resources_)
        if (s.resource.type == ResourceType::Patient) out.push_back(s.resource.id);
    std::sort(out.begin(), out.end());
    return out;
}

Resource DataPlatform::update_status(const std::string& id, ResourceStatus status, const PropertyMap& properties)
{
    std::unique_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw NotFound("no resource '" + id + "'");
    const auto from = resources_[it->second].resource.status;
    if (!is_legal_status_change(from, status))
        throw InvalidState("illegal status change " + std::string(to_string(from)) + " -> " +
                           std::string(to_string(status)) + " for " + id);
    const auto at = clock_.now();
    if (journal_) {
        ordered_json rec;
        rec["kind"] = "status";
        rec["id"] = id;
        rec["status"] = std::string(to_string(status));
        rec["at"] = at.seconds;
        rec["properties"] = ordered_json::object();
        for (const auto& [k, v] : properties) rec["properties"][k] = v;
        journal_->append(rec);
    }
    apply_status(id, status, at, properties);
    return resources_[it->second].resource;
}

std::vector<StatusChange> DataPlatform::status_history(const std::string& id) const
{
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw NotFound("no resource '" + id + "'");
    return resources_[it->second].history;
}

void DataPlatform::check_trace(const std::string& instance_id, std::span<const engine::TransitionRecord> records) const
{
    std::uint64_t last = 0;
    if (auto it = traces_.find(instance_id); it != traces_.end() && !it->second.empty()) last = it->second.back().seq;
    for (const auto& r : records) {
        if (r.seq <= last)
            throw InvalidState("trace seq regression for " + instance_id + ": " + std::to_string(r.seq) + " after " +
                               std::to_string(last));
        last = r.seq;
    }
}

std::size_t DataPlatform::append_trace(const std::string& instance_id, const std::string& patient_id,
                                       std::span<const engine::TransitionRecord> records)
{
    std::unique_lock lock(mutex_);
    check_trace(instance_id, records);
    for (const auto& r : records) {
        if (journal_) {
            ordered_json rec;
            rec["kind"] = "trace";
            rec["instance_id"] = instance_id;
            rec["patient"] = patient_id;
            rec["record"] = engine::to_json(r);
            journal_->append(rec);
        }
        apply_trace(instance_id, patient_id, r);
    }
    return records.size();
}

std::vector<engine::TransitionRecord> DataPlatform::get_trace(const std::string& instance_id) const
{
    std::shared_lock lock(mutex_);
    auto it = traces_.find(instance_id);
    return it == traces_.end() ? std::vector<engine::TransitionRecord>{} : it->second;
}

bool DataPlatform::has_trace(const std::string& instance_id) const
{
    std::shared_lock lock(mutex_);
    return traces_.count(instance_id) > 0;
}

std::vector<std::string> DataPlatform::trace_instances(const std::string& patient_id) const
{
    std::shared_lock lock(mutex_);
    auto it = trace_index_.find(patient_id);
    return it == trace_index_.end() ? std::vector<std::string>{} : it->second;
}

void DataPlatform::archive_event(const EventEnvelope& ev)
{
    std::unique_lock lock(mutex_);
    if (journal_) {
        ordered_json rec;
        rec["kind"] = "event";
        rec["event"] = to_json(ev);
        journal_->append(rec);
    }
    apply_event(ev);
}

std::vector<EventEnvelope> DataPlatform::events(const std::string& patient_id) const
{
    std::shared_lock lock(mutex_);
    auto it = events_.find(patient_id);
    return it == events_.end() ? std::vector<EventEnvelope>{} : it->second;
}

std::uint64_t DataPlatform::last_event_seq(const std::string& patient_id) const
{
    std::shared_lock lock(mutex_);
    auto it = events_.find(patient_id);
    return it == events_.end() || it->second.empty() ? 0 : it->second.back().seq;
}

}  // namespace cig::platform
