#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "cig/core/time.hpp"

namespace cig::platform {

namespace event_types {
inline constexpr const char* symptom_reported = "symptom-reported";
inline constexpr const char* time_tick = "time-tick";
inline constexpr const char* recommendation_response = "recommendation-response";
inline constexpr const char* capsule_completed = "capsule-completed";
inline constexpr const char* assessment_requested = "assessment-requested";
}  // namespace event_types

struct EventEnvelope {
    std::string event_id;  // assigned on publish: "ev/<patient>/<seq>"
    std::string event_type;
    std::string patient_id;
    std::map<std::string, std::string> payload;
    VirtualTime at;
    std::uint64_t seq = 0;  // per patient, gapless from 1

    bool operator==(const EventEnvelope&) const = default;
};

struct Subscription {
    std::string subscriber_id;
    std::set<std::string> event_types;
};

nlohmann::ordered_json to_json(const EventEnvelope& ev);
EventEnvelope event_from_json(const nlohmann::json& j);

}  // namespace cig::platform
