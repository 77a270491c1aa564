#include "cig/platform/event.hpp"

namespace cig::platform {

using nlohmann::ordered_json;

nlohmann::ordered_json to_json(const EventEnvelope& ev)
{
    ordered_json j;
    j["event_id"] = ev.event_id;
    j["event_type"] = ev.event_type;
    j["patient"] = ev.patient_id;
    j["seq"] = ev.seq;
    j["at"] = ev.at.seconds;
    j["payload"] = ordered_json::object();
    for (const auto& [k, v] : ev.payload) j["payload"][k] = v;
    return j;
}

EventEnvelope event_from_json(const nlohmann::json& j)
{
    EventEnvelope ev;
    ev.event_id = j.value("event_id", "");
    ev.event_type = j.value("event_type", "");
    ev.patient_id = j.value("patient", "");
    ev.seq = j.value("seq", std::uint64_t{0});
    ev.at = VirtualTime{j.value("at", std::int64_t{0})};
    if (auto it = j.find("payload"); it != j.end() && it->is_object())
        for (const auto& [k, v] : it->items()) ev.payload[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return ev;
}

}  // namespace cig::platform
