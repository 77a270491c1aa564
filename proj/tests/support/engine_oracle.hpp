#pragma once

// Brute-force reference for the scheduling rules. It works on the structured
// GuidelineSpec, evaluates conditions with its own Kleene tables and explores
// every order in which enabled rules can fire.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cig/engine/instance.hpp"
#include "support/random_guideline.hpp"

namespace cig::testing {

enum class K { f, t, u };

inline K k_and(K a, K b)
{
    if (a == K::f || b == K::f) return K::f;
    if (a == K::u || b == K::u) return K::u;
    return K::t;
}
inline K k_or(K a, K b)
{
    if (a == K::t || b == K::t) return K::t;
    if (a == K::u || b == K::u) return K::u;
    return K::f;
}
inline K k_not(K a) { return a == K::u ? K::u : (a == K::t ? K::f : K::t); }

using engine::TaskState;

struct OracleState {
    std::vector<TaskState> st;
    std::vector<std::vector<bool>> commits;

    auto operator<=>(const OracleState&) const = default;
};

class Oracle {
public:
    explicit Oracle(const GuidelineSpec& spec) : g_(spec) {}

    OracleState initial() const
    {
        OracleState s;
        s.st.assign(g_.tasks.size(), TaskState::dormant);
        s.st[0] = TaskState::in_progress;
        for (const auto& t : g_.tasks) s.commits.emplace_back(t.candidates.size(), false);
        return s;
    }

    K eval(const Cond& c, const OracleState& s) const
    {
        switch (c.kind) {
        case Cond::Kind::ge: {
            const auto& b = g_.bindings[c.item];
            if (!b) return K::u;
            return *b >= c.threshold ? K::t : K::f;
        }
        case Cond::Kind::known: return g_.bindings[c.item] ? K::t : K::f;
        case Cond::Kind::committed: return s.commits[c.decision][c.candidate] ? K::t : K::f;
        case Cond::Kind::both: return k_and(eval(c.parts[0], s), eval(c.parts[1], s));
        case Cond::Kind::either: return k_or(eval(c.parts[0], s), eval(c.parts[1], s));
        case Cond::Kind::negate: return k_not(eval(c.parts[0], s));
        }
        return K::u;
    }

    K precondition(int i, const OracleState& s) const
    {
        const auto& p = g_.tasks[i].precondition;
        return p ? eval(*p, s) : K::t;
    }

    bool gated(int i, const OracleState& s) const
    {
        const auto& t = g_.tasks[i];
        if (t.parent >= 0 && s.st[t.parent] != TaskState::in_progress) return false;
        for (int a : t.antecedents)
            if (s.st[a] != TaskState::completed) return false;
        return true;
    }

    /// Successor state if a rule fires for task i.
    std::optional<OracleState> fire(int i, const OracleState& s) const
    {
        const auto& t = g_.tasks[i];
        OracleState next = s;
        auto parent_discarded = t.parent >= 0 && s.st[t.parent] == TaskState::discarded;
        if (s.st[i] == TaskState::dormant) {
            bool ante_discarded = false;
            for (int a : t.antecedents) ante_discarded |= s.st[a] == TaskState::discarded;
            if (parent_discarded || ante_discarded) {
                next.st[i] = TaskState::discarded;
                return next;
            }
            if (!gated(i, s)) return std::nullopt;
            K pre = precondition(i, s);
            if (pre == K::u) return std::nullopt;
            next.st[i] = pre == K::t ? TaskState::in_progress : TaskState::discarded;
            return next;
        }
        if (s.st[i] != TaskState::in_progress) return std::nullopt;
        if (parent_discarded) {
            next.st[i] = TaskState::discarded;
            return next;
        }
        switch (t.kind) {
        case model::TaskKind::enquiry:
            for (int src : t.sources)
                if (!g_.bindings[src]) return std::nullopt;
            next.st[i] = TaskState::completed;
            return next;
        case model::TaskKind::decision:
            for (std::size_t c = 0; c < t.candidates.size(); ++c) {
                long support = 0;
                for (const auto& arg : t.candidates[c])
                    if (eval(arg.cond, s) == K::t) support += arg.weight;
                if (support >= 1) next.commits[i][c] = true;
            }
            next.st[i] = TaskState::completed;
            return next;
        case model::TaskKind::plan:
            for (std::size_t j = 0; j < g_.tasks.size(); ++j)
                if (g_.tasks[j].parent == i && !engine::is_terminal(s.st[j])) return std::nullopt;
            next.st[i] = TaskState::completed;
            return next;
        case model::TaskKind::action:
            return std::nullopt;
        }
        return std::nullopt;
    }

    /// All fixpoints reachable from `s` under any firing order.
    std::set<OracleState> fixpoints(const OracleState& s)
    {
        if (auto it = memo_.find(s); it != memo_.end()) return it->second;
        std::set<OracleState> out;
        bool any = false;
        for (int i = 0; i < static_cast<int>(g_.tasks.size()); ++i) {
            if (auto next = fire(i, s)) {
                any = true;
                auto sub = fixpoints(*next);
                out.insert(sub.begin(), sub.end());
            }
        }
        if (!any) out.insert(s);
        memo_[s] = out;
        return out;
    }

    /// Close-world step: discards that follow once no rule fires.
    bool finalize(OracleState& s) const
    {
        std::vector<int> hit;
        for (int i = 0; i < static_cast<int>(g_.tasks.size()); ++i) {
            const auto kind = g_.tasks[i].kind;
            if (s.st[i] == TaskState::dormant && gated(i, s) && precondition(i, s) == K::u) hit.push_back(i);
            if (s.st[i] == TaskState::in_progress &&
                (kind == model::TaskKind::enquiry || kind == model::TaskKind::decision))
                hit.push_back(i);
        }
        for (int i : hit) s.st[i] = TaskState::discarded;
        return !hit.empty();
    }

    /// Unique result of run-to-completion, or an error description.
    std::optional<OracleState> complete(std::string& error)
    {
        OracleState s = initial();
        while (true) {
            auto fps = fixpoints(s);
            if (fps.size() != 1) {
                error = std::to_string(fps.size()) + " distinct fixpoints";
                return std::nullopt;
            }
            s = *fps.begin();
            if (!finalize(s)) return s;
        }
    }

private:
    const GuidelineSpec& g_;
    std::map<OracleState, std::set<OracleState>> memo_;
};

/// Runs one generated definition through the engine and checks it against
/// the invariants and (for small networks) the oracle. Returns a failure
/// description or an empty string.
inline std::string check_definition(const GuidelineSpec& spec, bool with_oracle)
{
    using namespace engine;
    auto def = spec.to_definition();
    auto issues = model::validate_guideline(def);
    for (const auto& i : issues)
        if (i.severity == model::Severity::error) return "generated definition invalid: " + i.location + " " + i.message;

    auto g = model::ValidatedGuideline::from(def);
    auto bindings = spec.binding_list();
    const std::size_t n = spec.tasks.size();

    auto names = spec.task_names();
    auto inst = EngineInstance::enact(g, "p", bindings);
    auto first = inst.advance();
    if (first.size() > 2 * n) return "advance took " + std::to_string(first.size()) + " transitions";
    if (with_oracle) {
        // The advance fixpoint itself, before any close-world discards.
        Oracle oracle(spec);
        auto fps = oracle.fixpoints(oracle.initial());
        if (fps.size() != 1) return "oracle: " + std::to_string(fps.size()) + " distinct advance fixpoints";
        for (std::size_t i = 0; i < n; ++i)
            if (inst.task_state(names[i]).state != fps.begin()->st[i])
                return "after advance, state of " + names[i] + ": engine " +
                       std::string(to_string(inst.task_state(names[i]).state)) + ", oracle " +
                       std::string(to_string(fps.begin()->st[i]));
    }
    auto report = inst.run_to_completion();
    const auto& log = inst.transition_log();
    if (log.size() > 2 * n) return "log exceeds 2*|tasks|";
    for (const auto& r : log)
        if (!is_legal_transition(r.from, r.to)) return "illegal transition on " + r.task;

    // Relevance: every reported action was gated and its precondition held.
    for (const auto& t : report.recommended) {
        const auto& d = *g.definition().find_task(t.name);
        for (const auto& a : d.antecedents)
            if (inst.task_state(a).state != TaskState::completed) return "reported " + t.name + " with open antecedent";
        if (d.precondition && inst.evaluate(*d.precondition) != Value(true))
            return "reported " + t.name + " with precondition not true";
    }

    // Determinism and meta transparency through replay.
    auto again = replay(g, inst.recording());
    if (export_log(again.transition_log()) != export_log(log)) return "replay diverged";
    auto bare = replay(model::ValidatedGuideline::from(spec.to_definition(false)), inst.recording());
    if (export_log(bare.transition_log()) != export_log(log)) return "meta-stripped replay diverged";

    if (with_oracle) {
        Oracle oracle(spec);
        std::string err;
        auto expected = oracle.complete(err);
        if (!expected) return "oracle: " + err;
        auto cands = spec.candidate_names();
        for (std::size_t i = 0; i < n; ++i) {
            if (inst.task_state(names[i]).state != expected->st[i])
                return "state of " + names[i] + ": engine " + std::string(to_string(inst.task_state(names[i]).state)) +
                       ", oracle " + std::string(to_string(expected->st[i]));
            for (std::size_t c = 0; c < cands[i].size(); ++c) {
                bool committed = inst.evaluate(model::parse_expression("is_committed(" + names[i] + ", " + cands[i][c] + ")")) ==
                                 Value(true);
                if (committed != expected->commits[i][c]) return "commit of " + cands[i][c] + " differs";
            }
        }
        std::vector<std::string> oracle_actions;
        for (std::size_t i = 0; i < n; ++i)
            if (spec.tasks[i].kind == model::TaskKind::action && expected->st[i] == TaskState::in_progress)
                oracle_actions.push_back(names[i]);
        std::vector<std::string> engine_actions;
        for (const auto& t : report.recommended) engine_actions.push_back(t.name);
        if (engine_actions != oracle_actions) return "recommended actions differ";
    }
    return {};
}

/// Random operation sequences: every logged transition stays legal and
/// replay reproduces the log.
inline std::string check_random_ops(const GuidelineSpec& spec, GuidelineGenerator& gen)
{
    using namespace engine;
    auto g = model::ValidatedGuideline::from(spec.to_definition());
    auto mode = gen.chance(50) ? DecisionMode::manual : DecisionMode::automatic;
    auto inst = EngineInstance::enact(g, "p", {}, {.mode = mode});
    auto all = spec.binding_list();
    for (int step = 0; step < 12 && !inst.terminated(); ++step) {
        switch (gen.pick(0, 5)) {
        case 0:
            if (!all.empty()) {
                std::vector<DataValueBinding> one{all[gen.pick(0, static_cast<int>(all.size()) - 1)]};
                inst.set_data_values(one);
            }
            break;
        case 1: inst.advance(); break;
        case 2: {
            auto active = inst.active_tasks({model::TaskKind::action});
            if (active.empty()) break;
            const auto& name = active[gen.pick(0, static_cast<int>(active.size()) - 1)].name;
            if (gen.chance(70)) inst.complete_action(name, std::string("r"));
            else inst.discard_action(name, "declined");
            break;
        }
        case 3: {
            auto active = inst.active_tasks({model::TaskKind::decision});
            if (active.empty()) break;
            const auto& name = active[0].name;
            auto cands = inst.decision_state(name);
            inst.commit_candidate(name, cands[gen.pick(0, static_cast<int>(cands.size()) - 1)].candidate);
            if (inst.task_state(name).state == TaskState::in_progress) inst.close_decision(name);
            break;
        }
        case 4: inst.set_now(inst.now() + 60); break;
        default:
            if (gen.chance(30)) inst.run_to_completion();
            else if (gen.chance(20)) inst.terminate();
            break;
        }
    }
    for (const auto& r : inst.transition_log())
        if (!is_legal_transition(r.from, r.to)) return "illegal transition on " + r.task;
    if (inst.transition_log().size() > 2 * spec.tasks.size()) return "more than two transitions per task";
    auto again = replay(g, inst.recording());
    if (export_log(again.transition_log()) != export_log(inst.transition_log())) return "replay diverged";
    return {};
}

}  // namespace cig::testing
