#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "cig/engine/types.hpp"
#include "cig/model/guideline.hpp"

namespace cig::engine {

struct EnactOptions {
    std::string instance_id;
    DecisionMode mode = DecisionMode::automatic;
    VirtualTime at;
};

/// An externally invoked engine operation, as recorded for replay.
struct EngineOp {
    enum class Kind {
        set_now,
        set_data_values,
        advance,
        run_to_completion,
        complete_action,
        discard_action,
        commit_candidate,
        close_decision,
        terminate,
    };

    Kind kind = Kind::advance;
    VirtualTime at;
    std::vector<DataValueBinding> bindings;
    std::string task;
    std::string candidate;
    std::optional<std::string> text;
};

/// Everything needed to rebuild an instance by replay.
struct EngineRecording {
    std::string patient_id;
    EnactOptions options;
    std::vector<DataValueBinding> initial_bindings;
    std::vector<EngineOp> ops;
};

/// A finished instance, kept for audit replays.
struct RecordedInstance {
    std::string instance_id;
    std::string guideline_id;
    EngineRecording recording;
};

/// Runtime state of one enacted guideline for one patient.
///
/// Single-writer: callers serialize all mutating calls on one instance.
/// Distinct instances share only the immutable ValidatedGuideline.
class EngineInstance {
public:
    /// Root plan goes in_progress, everything else stays dormant. Throws
    /// TypeMismatch or NotFound for bad initial bindings.
    static EngineInstance enact(model::ValidatedGuideline guideline, std::string patient_id,
                                std::span<const DataValueBinding> initial_bindings = {}, EnactOptions options = {});

    const std::string& instance_id() const { return instance_id_; }
    const std::string& patient_id() const { return patient_id_; }
    const model::ValidatedGuideline& guideline() const { return guideline_; }
    DecisionMode mode() const { return mode_; }
    VirtualTime now() const { return now_; }
    bool terminated() const { return terminated_; }

    /// Moves the instance clock forward; going backwards throws.
    void set_now(VirtualTime at);

    /// Returns the items whose value actually changed. Never transitions tasks.
    std::set<std::string> set_data_values(std::span<const DataValueBinding> values);

    /// Applies the scheduling rules until none fires.
    std::vector<TransitionRecord> advance();

    /// Advance plus close-world finalization, then reports activated actions.
    CompletionReport run_to_completion();

    std::vector<ActiveTask> active_tasks(std::initializer_list<model::TaskKind> kinds) const;

    TransitionRecord complete_action(std::string_view task, std::optional<std::string> result = std::nullopt);
    TransitionRecord discard_action(std::string_view task, std::string reason);

    Value evaluate(const model::Expr& expr) const;
    std::vector<CandidateState> decision_state(std::string_view decision) const;

    /// Records the commitment. In automatic mode the decision completes
    /// immediately and the transition is returned; in manual mode the
    /// decision stays in_progress until close_decision().
    std::optional<TransitionRecord> commit_candidate(std::string_view decision, std::string_view candidate);
    TransitionRecord close_decision(std::string_view decision);
    std::vector<std::string> committed_candidates(std::string_view decision) const;

    /// Discards every non-terminal task and freezes the instance. Idempotent.
    CompletionReport terminate();

    const TaskInstance& task_state(std::string_view task) const;
    std::optional<DataValueBinding> binding(std::string_view item) const;
    Value value_of(std::string_view item) const;
    const std::vector<TransitionRecord>& transition_log() const { return log_; }
    CompletionReport report() const;

    const EngineRecording& recording() const { return recording_; }
    /// Diagnostics such as division by zero during evaluation.
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    friend class Evaluator;

    EngineInstance(model::ValidatedGuideline guideline, std::string patient_id, EnactOptions options);

    void ensure_live(const char* op) const;
    std::size_t require_task(std::string_view name) const;
    std::vector<DataValueBinding> checked_bindings(std::span<const DataValueBinding> values) const;
    std::set<std::string> apply_bindings(const std::vector<DataValueBinding>& values);
    TransitionRecord transition(std::size_t task, TaskState to, TransitionCause cause, std::string detail = {});
    std::optional<TransitionRecord> try_fire(std::size_t task);
    bool gating_satisfied(std::size_t task) const;
    TriValue precondition_of(std::size_t task) const;
    std::vector<TransitionRecord> advance_rules();
    std::vector<TransitionRecord> finalize_step();
    std::string commit_detail(std::size_t decision) const;
    void record(EngineOp op);

    model::ValidatedGuideline guideline_;
    std::string instance_id_;
    std::string patient_id_;
    DecisionMode mode_;
    VirtualTime now_;
    bool terminated_ = false;

    std::vector<TaskInstance> tasks_;
    std::vector<bool> activated_;
    std::vector<std::optional<DataValueBinding>> bindings_;
    std::vector<std::vector<bool>> commits_;  // per task; non-empty for decisions
    std::vector<std::optional<std::string>> results_;
    std::vector<TransitionRecord> log_;
    mutable std::vector<std::string> warnings_;
    EngineRecording recording_;
};

/// Rebuilds an instance by replaying a recording against `guideline`.
EngineInstance replay(model::ValidatedGuideline guideline, const EngineRecording& recording);

}  // namespace cig::engine
