#include "cig/engine/types.hpp"

namespace cig::engine {

std::string_view to_string(TaskState state)
{
    switch (state) {
    case TaskState::dormant: return "dormant";
    case TaskState::in_progress: return "in_progress";
    case TaskState::completed: return "completed";
    case TaskState::discarded: return "discarded";
    }
    return "?";
}

std::optional<TaskState> parse_task_state(std::string_view text)
{
    for (auto s : {TaskState::dormant, TaskState::in_progress, TaskState::completed, TaskState::discarded})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

bool is_terminal(TaskState state)
{
    return state == TaskState::completed || state == TaskState::discarded;
}

bool is_legal_transition(TaskState from, TaskState to)
{
    switch (from) {
    case TaskState::dormant: return to == TaskState::in_progress || to == TaskState::discarded;
    case TaskState::in_progress: return to == TaskState::completed || to == TaskState::discarded;
    default: return false;
    }
}

namespace {
constexpr TransitionCause all_causes[] = {
    TransitionCause::antecedents_met,  TransitionCause::precondition_false, TransitionCause::antecedent_discarded,
    TransitionCause::sources_known,    TransitionCause::candidate_commit,   TransitionCause::external_complete,
    TransitionCause::external_discard, TransitionCause::plan_closure,       TransitionCause::finalization,
};
}

std::string_view to_string(TransitionCause cause)
{
    switch (cause) {
    case TransitionCause::antecedents_met: return "antecedents_met";
    case TransitionCause::precondition_false: return "precondition_false";
    case TransitionCause::antecedent_discarded: return "antecedent_discarded";
    case TransitionCause::sources_known: return "sources_known";
    case TransitionCause::candidate_commit: return "candidate_commit";
    case TransitionCause::external_complete: return "external_complete";
    case TransitionCause::external_discard: return "external_discard";
    case TransitionCause::plan_closure: return "plan_closure";
    case TransitionCause::finalization: return "finalization";
    }
    return "?";
}

std::optional<TransitionCause> parse_transition_cause(std::string_view text)
{
    for (auto c : all_causes)
        if (to_string(c) == text) return c;
    return std::nullopt;
}

nlohmann::ordered_json to_json(const TransitionRecord& r)
{
    nlohmann::ordered_json j;
    j["instance_id"] = r.instance_id;
    j["seq"] = r.seq;
    j["task"] = r.task;
    j["from"] = std::string(to_string(r.from));
    j["to"] = std::string(to_string(r.to));
    j["cause"] = std::string(to_string(r.cause));
    j["at"] = r.at.seconds;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

std::string to_log_line(const TransitionRecord& record)
{
    return to_json(record).dump();
}

TransitionRecord transition_from_json(const nlohmann::json& j)
{
    TransitionRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.seq = j.at("seq").get<std::uint64_t>();
    r.task = j.at("task").get<std::string>();
    auto from = parse_task_state(j.at("from").get<std::string>());
    auto to = parse_task_state(j.at("to").get<std::string>());
    auto cause = parse_transition_cause(j.at("cause").get<std::string>());
    if (!from || !to || !cause) throw Error("malformed transition record");
    r.from = *from;
    r.to = *to;
    r.cause = *cause;
    r.at = VirtualTime{j.at("at").get<std::int64_t>()};
    if (auto it = j.find("detail"); it != j.end()) r.detail = it->get<std::string>();
    return r;
}

std::string export_log(const std::vector<TransitionRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += to_log_line(r);
        out.push_back('\n');
    }
    return out;
}

std::string_view to_string(BindingOrigin origin)
{
    switch (origin) {
    case BindingOrigin::external: return "external";
    case BindingOrigin::enquiry: return "enquiry";
    case BindingOrigin::engine: return "engine";
    }
    return "?";
}

TriValue tri_and(TriValue a, TriValue b)
{
    if (a == TriValue::false_value || b == TriValue::false_value) return TriValue::false_value;
    if (a == TriValue::true_value && b == TriValue::true_value) return TriValue::true_value;
    return TriValue::unknown;
}

TriValue tri_or(TriValue a, TriValue b)
{
    if (a == TriValue::true_value || b == TriValue::true_value) return TriValue::true_value;
    if (a == TriValue::false_value && b == TriValue::false_value) return TriValue::false_value;
    return TriValue::unknown;
}

TriValue tri_not(TriValue a)
{
    switch (a) {
    case TriValue::true_value: return TriValue::false_value;
    case TriValue::false_value: return TriValue::true_value;
    default: return TriValue::unknown;
    }
}

TriValue to_tri(const Value& v)
{
    if (!v.is_known()) return TriValue::unknown;
    if (!v.is_bool()) throw TypeMismatch("boolean expected, got " + std::string(v.kind_name()));
    return v.as_bool() ? TriValue::true_value : TriValue::false_value;
}

std::string_view to_string(TriValue v)
{
    switch (v) {
    case TriValue::true_value: return "true";
    case TriValue::false_value: return "false";
    default: return "unknown";
    }
}

}  // namespace cig::engine
