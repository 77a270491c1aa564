#include "cig/kdom/kdom.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cig/core/error.hpp"

namespace cig::kdom {

using platform::Resource;
using platform::ResourceQuery;

std::string_view to_string(Aggregator a)
{
    switch (a) {
    case Aggregator::latest: return "latest";
    case Aggregator::max: return "max";
    case Aggregator::min: return "min";
    case Aggregator::count: return "count";
    case Aggregator::exists: return "exists";
    }
    return "?";
}

std::optional<Aggregator> parse_aggregator(std::string_view text)
{
    for (auto a : {Aggregator::latest, Aggregator::max, Aggregator::min, Aggregator::count, Aggregator::exists})
        if (to_string(a) == text) return a;
    return std::nullopt;
}

AbstractionRule rule_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw InvalidArgument("rule must be an object");
    AbstractionRule r;
    r.id = j.value("id", "");
    r.output_item = j.value("output_item", "");

    const auto& in = j.at("input");
    auto type = platform::parse_resource_type(in.value("resourceType", "Observation"));
    if (!type) throw InvalidArgument("rule " + r.id + ": unknown resourceType");
    r.resource_type = *type;
    if (in.contains("code")) r.code = in.at("code").get<std::string>();
    if (in.contains("sourceType")) r.source_type = in.at("sourceType").get<std::string>();
    if (in.contains("status")) {
        auto s = platform::parse_resource_status(in.at("status").get<std::string>());
        if (!s) throw InvalidArgument("rule " + r.id + ": unknown status");
        r.status = *s;
    }
    auto vt = parse_value_type(j.value("input_type", "real"));
    if (!vt) throw InvalidArgument("rule " + r.id + ": unknown input_type");
    r.input_type = *vt;

    if (j.contains("window_seconds")) r.window_seconds = j.at("window_seconds").get<std::int64_t>();
    auto agg = parse_aggregator(j.value("aggregator", "latest"));
    if (!agg) throw InvalidArgument("rule " + r.id + ": unknown aggregator");
    r.aggregator = *agg;

    if (auto it = j.find("mapping"); it != j.end()) {
        for (const auto& t : it->at("thresholds"))
            r.mapping.push_back({t.at("threshold").get<double>(), value_from_json(t.at("value"))});
        r.floor = value_from_json(it->at("floor"));
    }
    return r;
}

nlohmann::ordered_json to_json(const AbstractionRule& r)
{
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["output_item"] = r.output_item;
    nlohmann::ordered_json in;
    in["resourceType"] = std::string(platform::to_string(r.resource_type));
    if (r.code) in["code"] = *r.code;
    if (r.source_type) in["sourceType"] = *r.source_type;
    if (r.status) in["status"] = std::string(platform::to_string(*r.status));
    j["input"] = in;
    j["input_type"] = std::string(to_string(r.input_type));
    if (r.window_seconds) j["window_seconds"] = *r.window_seconds;
    j["aggregator"] = std::string(to_string(r.aggregator));
    if (!r.mapping.empty()) {
        nlohmann::ordered_json m;
        m["thresholds"] = nlohmann::ordered_json::array();
        for (const auto& t : r.mapping) m["thresholds"].push_back({{"threshold", t.threshold}, {"value", to_json(t.mapped)}});
        m["floor"] = to_json(r.floor);
        j["mapping"] = m;
    }
    return j;
}

void check_rule(const AbstractionRule& r)
{
    auto bad = [&](const std::string& msg) { throw InvalidArgument("rule '" + r.id + "': " + msg); };
    if (r.id.empty()) bad("id is required");
    if (r.output_item.empty()) bad("output_item is required");
    if (r.window_seconds && *r.window_seconds <= 0) bad("window must be positive");
    bool numeric_input = r.input_type == ValueType::integer || r.input_type == ValueType::real;
    if ((r.aggregator == Aggregator::max || r.aggregator == Aggregator::min) && !numeric_input)
        bad(std::string(to_string(r.aggregator)) + " needs a numeric input_type");
    if (!r.mapping.empty()) {
        if (r.aggregator == Aggregator::exists) bad("exists yields a boolean and cannot be mapped");
        if (r.aggregator == Aggregator::latest && !numeric_input) bad("mapping needs numeric input");
        for (std::size_t i = 1; i < r.mapping.size(); ++i)
            if (!(r.mapping[i - 1].threshold < r.mapping[i].threshold)) bad("mapping thresholds must be strictly increasing");
        if (!r.floor.is_known()) bad("mapping needs a floor value");
    }
}

Value map_value(const AbstractionRule& rule, double v)
{
    Value out = rule.floor;
    for (const auto& t : rule.mapping) {
        if (t.threshold <= v) out = t.mapped;
        else break;
    }
    return out;
}

void Kdom::register_rule(AbstractionRule rule)
{
    check_rule(rule);
    std::unique_lock lock(mutex_);
    if (rules_.count(rule.id)) throw Conflict("duplicate abstraction rule '" + rule.id + "'");
    if (by_item_.count(rule.output_item))
        spdlog::warn("kdom: item {} already produced by {}; lookups by item keep the first", rule.output_item,
                     by_item_[rule.output_item]);
    else
        by_item_[rule.output_item] = rule.id;
    auto id = rule.id;
    rules_.emplace(id, std::move(rule));
}

std::size_t Kdom::load(const std::filesystem::path& path)
{
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::size_t n = 0;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw NotFound("cannot read rule file " + f.string());
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw InvalidArgument("rule file " + f.string() + " is not valid JSON");
        if (!doc.is_array()) doc = nlohmann::json::array({doc});
        for (const auto& r : doc) {
            AbstractionRule rule;
            try {
                rule = rule_from_json(r);
            } catch (const nlohmann::json::exception& e) {
                throw InvalidArgument("rule file " + f.string() + ": " + e.what());
            }
            register_rule(std::move(rule));
            ++n;
        }
    }
    return n;
}

std::optional<AbstractionRule> Kdom::find(const std::string& key) const
{
    std::shared_lock lock(mutex_);
    if (auto it = rules_.find(key); it != rules_.end()) return it->second;
    if (auto it = by_item_.find(key); it != by_item_.end()) return rules_.at(it->second);
    return std::nullopt;
}

AbstractionResult Kdom::compute(const std::string& rule_or_item, const std::string& patient, VirtualTime now) const
{
    auto rule = find(rule_or_item);
    if (!rule) throw NotFound("no abstraction rule for '" + rule_or_item + "'");

    ResourceQuery q;
    q.type = rule->resource_type;
    q.patient_id = patient;
    q.code = rule->code;
    q.source_type = rule->source_type;
    q.status = rule->status;
    auto from = rule->window_seconds ? now - *rule->window_seconds : VirtualTime{std::numeric_limits<std::int64_t>::min()};
    q.window = {{from, now}};

    AbstractionResult out;
    out.computed_at = now;
    std::vector<std::pair<Value, std::string>> inputs;
    for (const auto& r : platform_.query(q)) {
        auto v = coerce_to(r.value, rule->input_type);
        if (!v || !v->is_known()) {
            spdlog::debug("kdom: {} ignores {} (value {} is not {})", rule->id, r.id, r.value.to_text(),
                          to_string(rule->input_type));
            continue;
        }
        inputs.emplace_back(std::move(*v), r.id);
    }

    switch (rule->aggregator) {
    case Aggregator::count:
        out.value = Value(static_cast<std::int64_t>(inputs.size()));
        break;
    case Aggregator::exists:
        out.value = Value(!inputs.empty());
        break;
    case Aggregator::latest:
        if (!inputs.empty()) {
            out.value = inputs.back().first;  // query is oldest first
        }
        break;
    case Aggregator::max:
    case Aggregator::min: {
        for (const auto& [v, id] : inputs) {
            bool better = !out.value.is_known() || (rule->aggregator == Aggregator::max ? v.as_number() > out.value.as_number()
                                                                                        : v.as_number() < out.value.as_number());
            if (better) out.value = v;
        }
        break;
    }
    }
    for (const auto& [v, id] : inputs) out.inputs_used.push_back(id);

    if (!rule->mapping.empty() && out.value.is_known()) out.value = map_value(*rule, out.value.as_number());
    return out;
}

}  // namespace cig::kdom
