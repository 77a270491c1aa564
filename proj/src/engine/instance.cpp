#include "cig/engine/instance.hpp"

#include <algorithm>

#include "evaluator.hpp"

namespace cig::engine {

using model::TaskKind;
using model::ValidatedGuideline;

namespace {
constexpr std::size_t npos = ValidatedGuideline::npos;
}

EngineInstance::EngineInstance(ValidatedGuideline guideline, std::string patient_id, EnactOptions options)
    : guideline_(std::move(guideline)),
      instance_id_(options.instance_id.empty() ? guideline_.id() + "/" + patient_id : options.instance_id),
      patient_id_(std::move(patient_id)),
      mode_(options.mode),
      now_(options.at)
{
    const auto n = guideline_.task_count();
    tasks_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tasks_[i].task = guideline_.task(i).name;
        tasks_[i].entered_at = now_;
    }
    activated_.assign(n, false);
    results_.assign(n, std::nullopt);
    commits_.resize(n);
    for (std::size_t i = 0; i < n; ++i) commits_[i].assign(guideline_.task(i).candidates.size(), false);
    bindings_.assign(guideline_.item_count(), std::nullopt);

    recording_.patient_id = patient_id_;
    recording_.options = options;
    recording_.options.instance_id = instance_id_;
}

EngineInstance EngineInstance::enact(ValidatedGuideline guideline, std::string patient_id,
                                     std::span<const DataValueBinding> initial_bindings, EnactOptions options)
{
    EngineInstance inst(std::move(guideline), std::move(patient_id), options);
    auto checked = inst.checked_bindings(initial_bindings);
    inst.apply_bindings(checked);
    inst.recording_.initial_bindings = checked;
    inst.transition(inst.guideline_.root(), TaskState::in_progress, TransitionCause::antecedents_met);
    return inst;
}

void EngineInstance::ensure_live(const char* op) const
{
    if (terminated_) throw InstanceTerminated(std::string(op) + ": instance " + instance_id_ + " is terminated");
}

std::size_t EngineInstance::require_task(std::string_view name) const
{
    auto i = guideline_.task_index(name);
    if (i == npos) throw NotFound("unknown task '" + std::string(name) + "' in " + guideline_.id());
    return i;
}

void EngineInstance::record(EngineOp op)
{
    recording_.ops.push_back(std::move(op));
}

void EngineInstance::set_now(VirtualTime at)
{
    ensure_live("set_now");
    if (at < now_) throw InvalidState("virtual clock cannot move backwards");
    if (at == now_) return;
    now_ = at;
    record({.kind = EngineOp::Kind::set_now, .at = at});
}

std::vector<DataValueBinding> EngineInstance::checked_bindings(std::span<const DataValueBinding> values) const
{
    std::vector<DataValueBinding> out;
    out.reserve(values.size());
    for (const auto& b : values) {
        auto idx = guideline_.item_index(b.item);
        if (idx == npos) throw NotFound("unknown data item '" + b.item + "' in " + guideline_.id());
        const auto type = guideline_.item(idx).value_type;
        auto coerced = coerce_to(b.value, type);
        if (!coerced)
            throw TypeMismatch("data item '" + b.item + "' is " + std::string(to_string(type)) + ", got " +
                               std::string(b.value.kind_name()));
        out.push_back({b.item, *coerced, b.set_at, b.origin});
    }
    return out;
}

std::set<std::string> EngineInstance::apply_bindings(const std::vector<DataValueBinding>& values)
{
    std::set<std::string> changed;
    for (const auto& b : values) {
        auto& slot = bindings_[guideline_.item_index(b.item)];
        Value previous = slot ? slot->value : Value::unknown();
        if (previous != b.value) changed.insert(b.item);
        slot = b;
    }
    return changed;
}

std::set<std::string> EngineInstance::set_data_values(std::span<const DataValueBinding> values)
{
    ensure_live("set_data_values");
    auto checked = checked_bindings(values);
    auto changed = apply_bindings(checked);
    record({.kind = EngineOp::Kind::set_data_values, .at = now_, .bindings = std::move(checked)});
    return changed;
}

TransitionRecord EngineInstance::transition(std::size_t task, TaskState to, TransitionCause cause, std::string detail)
{
    auto& ti = tasks_[task];
    TransitionRecord rec{instance_id_, log_.size() + 1, ti.task, ti.state, to, cause, now_, std::move(detail)};
    if (!is_legal_transition(ti.state, to))
        throw WrongTaskState("illegal transition " + std::string(to_string(ti.state)) + " -> " +
                             std::string(to_string(to)) + " for task " + ti.task);
    ti.state = to;
    ti.entered_at = now_;
    if (to == TaskState::in_progress) activated_[task] = true;
    log_.push_back(rec);
    return rec;
}

bool EngineInstance::gating_satisfied(std::size_t task) const
{
    auto parent = guideline_.parent(task);
    if (parent != npos && tasks_[parent].state != TaskState::in_progress) return false;
    const auto& ante = guideline_.antecedents(task);
    return std::all_of(ante.begin(), ante.end(), [&](auto a) { return tasks_[a].state == TaskState::completed; });
}

TriValue EngineInstance::precondition_of(std::size_t task) const
{
    const auto& pre = guideline_.task(task).precondition;
    if (!pre) return TriValue::true_value;
    return Evaluator(*this).truth(*pre);
}

std::optional<TransitionRecord> EngineInstance::try_fire(std::size_t i)
{
    const auto state = tasks_[i].state;
    const auto parent = guideline_.parent(i);
    const auto& def = guideline_.task(i);

    if (state == TaskState::dormant) {
        if (parent != npos && tasks_[parent].state == TaskState::discarded)
            return transition(i, TaskState::discarded, TransitionCause::plan_closure);
        const auto& ante = guideline_.antecedents(i);
        if (std::any_of(ante.begin(), ante.end(), [&](auto a) { return tasks_[a].state == TaskState::discarded; }))
            return transition(i, TaskState::discarded, TransitionCause::antecedent_discarded);
        if (!gating_satisfied(i)) return std::nullopt;
        switch (precondition_of(i)) {
        case TriValue::true_value: return transition(i, TaskState::in_progress, TransitionCause::antecedents_met);
        case TriValue::false_value: return transition(i, TaskState::discarded, TransitionCause::precondition_false);
        case TriValue::unknown: return std::nullopt;
        }
    }

    if (state != TaskState::in_progress) return std::nullopt;
    if (parent != npos && tasks_[parent].state == TaskState::discarded)
        return transition(i, TaskState::discarded, TransitionCause::plan_closure);

    switch (def.kind) {
    case TaskKind::enquiry: {
        bool all_known = std::all_of(def.sources.begin(), def.sources.end(),
                                     [&](const auto& s) { return value_of(s).is_known(); });
        if (all_known) return transition(i, TaskState::completed, TransitionCause::sources_known);
        return std::nullopt;
    }
    case TaskKind::decision: {
        if (mode_ != DecisionMode::automatic) return std::nullopt;
        Evaluator ev(*this, i);
        std::vector<TriValue> rec;
        for (std::size_t c = 0; c < def.candidates.size(); ++c) rec.push_back(ev.recommended(i, c));
        if (std::any_of(rec.begin(), rec.end(), [](auto v) { return v == TriValue::unknown; })) return std::nullopt;
        for (std::size_t c = 0; c < rec.size(); ++c)
            if (rec[c] == TriValue::true_value) commits_[i][c] = true;
        return transition(i, TaskState::completed, TransitionCause::candidate_commit, commit_detail(i));
    }
    case TaskKind::plan: {
        const auto& kids = guideline_.children(i);
        if (std::all_of(kids.begin(), kids.end(), [&](auto c) { return is_terminal(tasks_[c].state); }))
            return transition(i, TaskState::completed, TransitionCause::plan_closure);
        return std::nullopt;
    }
    case TaskKind::action:
        return std::nullopt;
    }
    return std::nullopt;
}

std::vector<TransitionRecord> EngineInstance::advance_rules()
{
    std::vector<TransitionRecord> out;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < tasks_.size(); ++i) {
            if (auto rec = try_fire(i)) {
                out.push_back(std::move(*rec));
                changed = true;
            }
        }
    }
    return out;
}

std::vector<TransitionRecord> EngineInstance::advance()
{
    ensure_live("advance");
    auto out = advance_rules();
    record({.kind = EngineOp::Kind::advance, .at = now_});
    return out;
}

std::vector<TransitionRecord> EngineInstance::finalize_step()
{
    std::vector<TransitionRecord> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto& def = guideline_.task(i);
        const auto state = tasks_[i].state;
        bool discard = false;
        if (state == TaskState::dormant) {
            discard = gating_satisfied(i) && precondition_of(i) == TriValue::unknown;
        } else if (state == TaskState::in_progress) {
            // Anything still in progress after advance is waiting on unknown data.
            discard = def.kind == TaskKind::enquiry || (def.kind == TaskKind::decision && mode_ == DecisionMode::automatic);
        }
        if (discard) out.push_back(transition(i, TaskState::discarded, TransitionCause::finalization));
    }
    return out;
}

CompletionReport EngineInstance::run_to_completion()
{
    if (terminated_) return report();
    while (true) {
        advance_rules();
        if (finalize_step().empty()) break;
    }
    record({.kind = EngineOp::Kind::run_to_completion, .at = now_});
    return report();
}

CompletionReport EngineInstance::report() const
{
    CompletionReport r;
    r.instance_id = instance_id_;
    r.guideline_id = guideline_.id();
    bool terminal = true;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto& def = guideline_.task(i);
        if (def.kind == TaskKind::action && activated_[i]) r.recommended.push_back({def.name, tasks_[i].state, def.meta});
        r.final_states.emplace_back(def.name, tasks_[i].state);
        terminal = terminal && is_terminal(tasks_[i].state);
    }
    r.terminal = terminal;
    return r;
}

std::vector<ActiveTask> EngineInstance::active_tasks(std::initializer_list<TaskKind> kinds) const
{
    std::vector<ActiveTask> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (tasks_[i].state != TaskState::in_progress) continue;
        const auto& def = guideline_.task(i);
        if (std::find(kinds.begin(), kinds.end(), def.kind) == kinds.end()) continue;
        out.push_back({def.name, def.kind, def.meta});
    }
    return out;
}

TransitionRecord EngineInstance::complete_action(std::string_view task, std::optional<std::string> result)
{
    ensure_live("complete_action");
    auto i = require_task(task);
    if (guideline_.task(i).kind != TaskKind::action)
        throw WrongTaskKind("complete_action: '" + std::string(task) + "' is not an action");
    if (tasks_[i].state != TaskState::in_progress)
        throw WrongTaskState("complete_action: '" + std::string(task) + "' is " +
                             std::string(to_string(tasks_[i].state)));
    results_[i] = result;
    auto rec = transition(i, TaskState::completed, TransitionCause::external_complete, result.value_or(""));
    record({.kind = EngineOp::Kind::complete_action, .at = now_, .task = std::string(task), .text = std::move(result)});
    return rec;
}

TransitionRecord EngineInstance::discard_action(std::string_view task, std::string reason)
{
    ensure_live("discard_action");
    auto i = require_task(task);
    if (guideline_.task(i).kind != TaskKind::action)
        throw WrongTaskKind("discard_action: '" + std::string(task) + "' is not an action");
    if (tasks_[i].state != TaskState::in_progress)
        throw WrongTaskState("discard_action: '" + std::string(task) + "' is " +
                             std::string(to_string(tasks_[i].state)));
    auto rec = transition(i, TaskState::discarded, TransitionCause::external_discard, reason);
    record({.kind = EngineOp::Kind::discard_action, .at = now_, .task = std::string(task), .text = std::move(reason)});
    return rec;
}

Value EngineInstance::evaluate(const model::Expr& expr) const
{
    return Evaluator(*this).eval(expr);
}

std::vector<CandidateState> EngineInstance::decision_state(std::string_view decision) const
{
    auto i = require_task(decision);
    const auto& def = guideline_.task(i);
    if (def.kind != TaskKind::decision) throw WrongTaskKind("'" + std::string(decision) + "' is not a decision");
    Evaluator ev(*this, i);
    std::vector<CandidateState> out;
    for (std::size_t c = 0; c < def.candidates.size(); ++c)
        out.push_back({def.candidates[c].name, ev.netsupport(i, c), ev.recommended(i, c), commits_[i][c]});
    return out;
}

std::string EngineInstance::commit_detail(std::size_t decision) const
{
    std::string out;
    const auto& cands = guideline_.task(decision).candidates;
    for (std::size_t c = 0; c < cands.size(); ++c) {
        if (!commits_[decision][c]) continue;
        if (!out.empty()) out.push_back(',');
        out += cands[c].name;
    }
    return out;
}

std::optional<TransitionRecord> EngineInstance::commit_candidate(std::string_view decision, std::string_view candidate)
{
    ensure_live("commit_candidate");
    auto i = require_task(decision);
    if (guideline_.task(i).kind != TaskKind::decision)
        throw WrongTaskKind("commit_candidate: '" + std::string(decision) + "' is not a decision");
    if (tasks_[i].state != TaskState::in_progress)
        throw WrongTaskState("commit_candidate: decision '" + std::string(decision) + "' is " +
                             std::string(to_string(tasks_[i].state)));
    auto c = guideline_.candidate_index(i, candidate);
    if (c == npos) throw NotFound("decision '" + std::string(decision) + "' has no candidate '" + std::string(candidate) + "'");

    commits_[i][c] = true;
    std::optional<TransitionRecord> rec;
    if (mode_ == DecisionMode::automatic)
        rec = transition(i, TaskState::completed, TransitionCause::candidate_commit, commit_detail(i));
    record({.kind = EngineOp::Kind::commit_candidate,
            .at = now_,
            .task = std::string(decision),
            .candidate = std::string(candidate)});
    return rec;
}

TransitionRecord EngineInstance::close_decision(std::string_view decision)
{
    ensure_live("close_decision");
    auto i = require_task(decision);
    if (guideline_.task(i).kind != TaskKind::decision)
        throw WrongTaskKind("close_decision: '" + std::string(decision) + "' is not a decision");
    if (tasks_[i].state != TaskState::in_progress)
        throw WrongTaskState("close_decision: decision '" + std::string(decision) + "' is " +
                             std::string(to_string(tasks_[i].state)));
    if (std::none_of(commits_[i].begin(), commits_[i].end(), [](bool b) { return b; }))
        throw InvalidState("close_decision: nothing committed for '" + std::string(decision) + "'");
    auto rec = transition(i, TaskState::completed, TransitionCause::candidate_commit, commit_detail(i));
    record({.kind = EngineOp::Kind::close_decision, .at = now_, .task = std::string(decision)});
    return rec;
}

std::vector<std::string> EngineInstance::committed_candidates(std::string_view decision) const
{
    auto i = require_task(decision);
    std::vector<std::string> out;
    const auto& cands = guideline_.task(i).candidates;
    for (std::size_t c = 0; c < cands.size(); ++c)
        if (commits_[i][c]) out.push_back(cands[c].name);
    return out;
}

CompletionReport EngineInstance::terminate()
{
    if (terminated_) return report();
    for (auto i : guideline_.post_order()) {
        const auto state = tasks_[i].state;
        if (is_terminal(state)) continue;
        const auto& kids = guideline_.children(i);
        bool closable = guideline_.task(i).kind == TaskKind::plan && state == TaskState::in_progress &&
                        std::all_of(kids.begin(), kids.end(), [&](auto c) { return is_terminal(tasks_[c].state); });
        if (closable) transition(i, TaskState::completed, TransitionCause::plan_closure);
        else transition(i, TaskState::discarded, TransitionCause::finalization);
    }
    terminated_ = true;
    record({.kind = EngineOp::Kind::terminate, .at = now_});
    return report();
}

const TaskInstance& EngineInstance::task_state(std::string_view task) const
{
    return tasks_[require_task(task)];
}

std::optional<DataValueBinding> EngineInstance::binding(std::string_view item) const
{
    auto idx = guideline_.item_index(item);
    if (idx == npos) throw NotFound("unknown data item '" + std::string(item) + "'");
    return bindings_[idx];
}

Value EngineInstance::value_of(std::string_view item) const
{
    auto idx = guideline_.item_index(item);
    if (idx == npos) throw NotFound("unknown data item '" + std::string(item) + "'");
    return bindings_[idx] ? bindings_[idx]->value : Value::unknown();
}

EngineInstance replay(ValidatedGuideline guideline, const EngineRecording& recording)
{
    auto inst = EngineInstance::enact(std::move(guideline), recording.patient_id, recording.initial_bindings,
                                      recording.options);
    for (const auto& op : recording.ops) {
        switch (op.kind) {
        case EngineOp::Kind::set_now: inst.set_now(op.at); break;
        case EngineOp::Kind::set_data_values: inst.set_data_values(op.bindings); break;
        case EngineOp::Kind::advance: inst.advance(); break;
        case EngineOp::Kind::run_to_completion: inst.run_to_completion(); break;
        case EngineOp::Kind::complete_action: inst.complete_action(op.task, op.text); break;
        case EngineOp::Kind::discard_action: inst.discard_action(op.task, op.text.value_or("")); break;
        case EngineOp::Kind::commit_candidate: inst.commit_candidate(op.task, op.candidate); break;
        case EngineOp::Kind::close_decision: inst.close_decision(op.task); break;
        case EngineOp::Kind::terminate: inst.terminate(); break;
        }
    }
    return inst;
}

}  // namespace cig::engine
