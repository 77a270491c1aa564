#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cig/core/time.hpp"
#include "cig/core/value.hpp"
#include "cig/platform/data_platform.hpp"

namespace cig::kdom {

enum class Aggregator { latest, max, min, count, exists };

std::string_view to_string(Aggregator a);
std::optional<Aggregator> parse_aggregator(std::string_view text);

struct Threshold {
    double threshold = 0;
    Value mapped;
};

/// Declarative abstraction over platform resources.
struct AbstractionRule {
    std::string id;
    std::string output_item;
    // input query template; the patient is filled in at compute time
    platform::ResourceType resource_type = platform::ResourceType::Observation;
    std::optional<std::string> code;
    std::optional<std::string> source_type;
    std::optional<platform::ResourceStatus> status;
    ValueType input_type = ValueType::real;
    std::optional<std::int64_t> window_seconds;  // absent: all history up to now
    Aggregator aggregator = Aggregator::latest;
    std::vector<Threshold> mapping;  // strictly increasing thresholds
    Value floor;                     // below the lowest threshold
};

struct AbstractionResult {
    Value value;
    std::vector<std::string> inputs_used;
    VirtualTime computed_at;
};

AbstractionRule rule_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AbstractionRule& rule);

/// Throws InvalidArgument when a rule breaks its invariants.
void check_rule(const AbstractionRule& rule);

/// Applies the rule's threshold mapping to an aggregated number.
Value map_value(const AbstractionRule& rule, double v);

/// KDOM: computes abstractions on demand. Read-only against the platform.
class Kdom {
public:
    explicit Kdom(const platform::DataPlatform& platform) : platform_(platform) {}

    /// Throws Conflict on a duplicate id, InvalidArgument on a bad rule.
    void register_rule(AbstractionRule rule);

    /// Loads a JSON rule file (array of rules) or every *.json file in a
    /// directory, in name order. Returns the number of rules registered.
    std::size_t load(const std::filesystem::path& path);

    /// Lookup by rule id first, then by output item.
    std::optional<AbstractionRule> find(const std::string& key) const;

    /// Throws NotFound for an unknown rule.
    AbstractionResult compute(const std::string& rule_or_item, const std::string& patient, VirtualTime now) const;

private:
    const platform::DataPlatform& platform_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, AbstractionRule> rules_;
    std::map<std::string, std::string> by_item_;
};

}  // namespace cig::kdom
