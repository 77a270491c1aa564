#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cig/core/error.hpp"
#include "cig/core/time.hpp"
#include "cig/core/value.hpp"
#include "cig/model/guideline.hpp"

namespace cig::engine {

enum class TaskState { dormant, in_progress, completed, discarded };

std::string_view to_string(TaskState state);
std::optional<TaskState> parse_task_state(std::string_view text);
bool is_terminal(TaskState state);
/// dormant->in_progress, dormant->discarded, in_progress->completed,
/// in_progress->discarded. Nothing else.
bool is_legal_transition(TaskState from, TaskState to);

enum class TransitionCause {
    antecedents_met,
    precondition_false,
    antecedent_discarded,
    sources_known,
    candidate_commit,
    external_complete,
    external_discard,
    plan_closure,
    finalization,
};

std::string_view to_string(TransitionCause cause);
std::optional<TransitionCause> parse_transition_cause(std::string_view text);

struct TransitionRecord {
    std::string instance_id;
    std::uint64_t seq = 0;
    std::string task;
    TaskState from = TaskState::dormant;
    TaskState to = TaskState::dormant;
    TransitionCause cause = TransitionCause::antecedents_met;
    VirtualTime at;
    std::string detail;  // action result or committed candidates; may be empty

    bool operator==(const TransitionRecord&) const = default;
};

/// One line of the transition-log export. Field order is fixed:
/// instance_id, seq, task, from, to, cause, at[, detail].
std::string to_log_line(const TransitionRecord& record);
nlohmann::ordered_json to_json(const TransitionRecord& record);
TransitionRecord transition_from_json(const nlohmann::json& j);
std::string export_log(const std::vector<TransitionRecord>& records);

struct TaskInstance {
    std::string task;
    TaskState state = TaskState::dormant;
    VirtualTime entered_at;
};

enum class BindingOrigin { external, enquiry, engine };

std::string_view to_string(BindingOrigin origin);

struct DataValueBinding {
    std::string item;
    Value value;
    VirtualTime set_at;
    BindingOrigin origin = BindingOrigin::external;

    bool operator==(const DataValueBinding&) const = default;
};

/// Kleene three-valued truth.
enum class TriValue { false_value, true_value, unknown };

TriValue tri_and(TriValue a, TriValue b);
TriValue tri_or(TriValue a, TriValue b);
TriValue tri_not(TriValue a);
/// Unknown maps to unknown, booleans map directly; other kinds are a type error.
TriValue to_tri(const Value& v);
std::string_view to_string(TriValue v);

enum class DecisionMode { automatic, manual };

struct CandidateState {
    std::string candidate;
    std::int64_t netsupport = 0;
    TriValue recommended = TriValue::unknown;
    bool committed = false;
};

struct ReportedTask {
    std::string name;
    TaskState state = TaskState::dormant;
    model::MetaPropertyMap meta;
};

struct CompletionReport {
    std::string instance_id;
    std::string guideline_id;
    std::vector<ReportedTask> recommended;  // activated actions, definition order
    std::vector<std::pair<std::string, TaskState>> final_states;
    bool terminal = false;
};

struct ActiveTask {
    std::string name;
    model::TaskKind kind = model::TaskKind::action;
    model::MetaPropertyMap meta;
};

class WrongTaskKind : public Error {
public:
    using Error::Error;
};

class WrongTaskState : public InvalidState {
public:
    using InvalidState::InvalidState;
};

/// Raised when an instance is used after terminate().
class InstanceTerminated : public InvalidState {
public:
    using InvalidState::InvalidState;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

}  // namespace cig::engine
