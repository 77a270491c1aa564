#include "cig/bridge/resolver.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <spdlog/spdlog.h>

#include "cig/core/error.hpp"

namespace cig::bridge {

using model::get_meta;
namespace meta = model::meta;

std::string_view to_string(SourceKind kind)
{
    switch (kind) {
    case SourceKind::kdom: return "kdom";
    case SourceKind::dp: return "dp";
    case SourceKind::external: return "external";
    case SourceKind::calc: return "calc";
    case SourceKind::context: return "context";
    }
    return "?";
}

SourceKind source_of(const model::DataItemDefinition& item)
{
    if (auto s = get_meta(item, meta::source)) {
        for (auto k : {SourceKind::kdom, SourceKind::dp, SourceKind::external, SourceKind::calc})
            if (to_string(k) == *s) return k;
        spdlog::warn("item {}: unknown source '{}', using the event context", item.name, *s);
        return SourceKind::context;
    }
    if (get_meta(item, meta::resource_type)) return SourceKind::dp;
    return SourceKind::context;
}

void JsonExternalStore::put(const std::string& key, nlohmann::json value)
{
    entries_[key] = std::move(value);
}

void JsonExternalStore::load(const std::filesystem::path& path)
{
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw NotFound("cannot read external store " + f.string());
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (!doc.is_object()) throw InvalidArgument("external store " + f.string() + " must be a JSON object");
        for (auto& [k, v] : doc.items()) entries_[k] = v;
    }
}

std::optional<Value> JsonExternalStore::fetch(const std::string& key, const std::string&, VirtualTime now) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    const auto* v = &it->second;
    if (v->is_array()) {
        if (v->empty()) return std::nullopt;
        auto day = now.seconds / 86400;
        auto n = static_cast<std::int64_t>(v->size());
        v = &(*v)[static_cast<std::size_t>(((day % n) + n) % n)];
    }
    return value_from_json(*v);
}

std::vector<Value> JsonExternalStore::fetch_all(const std::string& key) const
{
    std::vector<Value> out;
    auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    if (it->second.is_array())
        for (const auto& v : it->second) out.push_back(value_from_json(v));
    else
        out.push_back(value_from_json(it->second));
    return out;
}

std::optional<Value> calculate(const std::string& name, VirtualTime now)
{
    if (name == "hour_of_day") return Value(static_cast<std::int64_t>(now.hour_of_day()));
    if (name == "day_index") {
        auto d = now.seconds / 86400;
        if (now.seconds < 0 && now.seconds % 86400) --d;
        return Value(d);
    }
    if (name == "minute_of_hour") {
        auto m = (now.seconds / 60) % 60;
        return Value(m < 0 ? m + 60 : m);
    }
    if (name == "now_seconds") return Value(now.seconds);
    return std::nullopt;
}

Value DataResolver::from_platform(const model::DataItemDefinition& item, const std::string& patient, VirtualTime now,
                                  std::string& note) const
{
    platform::ResourceQuery q;
    auto type_name = get_meta(item, meta::resource_type).value_or("Observation");
    auto type = platform::parse_resource_type(type_name);
    if (!type) {
        note = "unknown resourceType " + type_name;
        return {};
    }
    q.type = *type;
    q.patient_id = patient;
    q.code = get_meta(item, meta::code_query);
    q.source_type = get_meta(item, meta::source_type);
    q.window = {{VirtualTime{std::numeric_limits<std::int64_t>::min()}, now}};
    q.order = platform::ResourceQuery::Order::newest_first;
    q.limit = 1;
    auto found = platform_.query(q);
    if (found.empty()) {
        note = "no matching resource";
        return {};
    }
    const auto& r = found.front();
    auto expr = get_meta(item, meta::value_expression).value_or("value");
    std::optional<Value> v;
    if (expr == "value") {
        v = coerce_to(r.value, item.value_type);
    } else if (expr == "code") {
        v = parse_as(r.code, item.value_type);
    } else if (expr == "status") {
        v = parse_as(platform::to_string(r.status), item.value_type);
    } else {
        auto it = r.properties.find(expr);
        if (it == r.properties.end()) {
            note = r.id + " has no property " + expr;
            return {};
        }
        v = parse_as(it->second, item.value_type);
    }
    if (!v) {
        note = r.id + ": value does not fit " + std::string(to_string(item.value_type));
        spdlog::warn("resolver: item {} for {}: {}", item.name, patient, note);
        return {};
    }
    note = r.id;
    return *v;
}

Resolution DataResolver::resolve(const model::DataItemDefinition& item, const std::string& patient, VirtualTime now,
                                 const std::map<std::string, Value>& context) const
{
    Resolution res;
    res.item = item.name;
    res.kind = source_of(item);
    try {
        switch (res.kind) {
        case SourceKind::kdom: {
            if (!kdom_) {
                res.note = "no kdom configured";
                break;
            }
            auto key = get_meta(item, meta::abstraction_id).value_or(item.name);
            auto out = kdom_->compute(key, patient, now);
            if (out.value.is_known()) {
                auto v = coerce_to(out.value, item.value_type);
                if (v) res.value = *v;
                else res.note = "abstraction " + key + " does not fit " + std::string(to_string(item.value_type));
            } else {
                res.note = "abstraction " + key + " has no input";
            }
            break;
        }
        case SourceKind::dp:
            res.value = from_platform(item, patient, now, res.note);
            break;
        case SourceKind::external: {
            if (!external_) {
                res.note = "no external source configured";
                break;
            }
            auto key = get_meta(item, meta::external_key).value_or(item.name);
            auto v = external_->fetch(key, patient, now);
            if (v) v = coerce_to(*v, item.value_type);
            if (v) res.value = *v;
            else res.note = "external key " + key + " unavailable";
            break;
        }
        case SourceKind::calc: {
            auto name = get_meta(item, meta::calc).value_or(item.name);
            auto v = calculate(name, now);
            if (v) v = coerce_to(*v, item.value_type);
            if (v) res.value = *v;
            else res.note = "unknown calculation " + name;
            break;
        }
        case SourceKind::context: {
            auto it = context.find(item.name);
            if (it == context.end()) {
                res.note = "not in context";
                break;
            }
            auto v = coerce_to(it->second, item.value_type);
            if (!v && it->second.is_string()) v = parse_as(it->second.as_string(), item.value_type);
            if (v) res.value = *v;
            else res.note = "context value does not fit";
            break;
        }
        }
    } catch (const std::exception& e) {
        spdlog::warn("resolver: item {} for {} failed: {}", item.name, patient, e.what());
        res.value = {};
        res.note = e.what();
    }
    return res;
}

std::vector<engine::DataValueBinding> DataResolver::gather(const model::GuidelineDefinition& def,
                                                           const std::string& patient, VirtualTime now,
                                                           const std::map<std::string, Value>& context,
                                                           const std::vector<std::string>& items,
                                                           engine::BindingOrigin origin) const
{
    std::vector<engine::DataValueBinding> out;
    auto one = [&](const model::DataItemDefinition& item) {
        auto r = resolve(item, patient, now, context);
        if (r.value.is_known()) out.push_back({item.name, r.value, now, origin});
    };
    if (items.empty()) {
        for (const auto& item : def.data_items) one(item);
    } else {
        for (const auto& name : items)
            if (const auto* item = def.find_item(name)) one(*item);
    }
    return out;
}

}  // namespace cig::bridge
