#pragma once

// Random small task networks with a structured mirror that test oracles can
// evaluate without going through the engine's expression evaluator.

#include <random>
#include <string>
#include <vector>

#include "cig/engine/types.hpp"
#include "cig/model/guideline.hpp"

namespace cig::testing {

/// Structured condition: leaf or Kleene combination.
struct Cond {
    enum class Kind { ge, known, committed, both, either, negate };
    Kind kind = Kind::ge;
    int item = 0;
    int threshold = 0;
    int decision = -1;   // task index
    int candidate = 0;
    std::vector<Cond> parts;

    std::string to_text(const std::vector<std::string>& task_names,
                        const std::vector<std::vector<std::string>>& cand_names) const
    {
        switch (kind) {
        case Kind::ge: return "x" + std::to_string(item) + " >= " + std::to_string(threshold);
        case Kind::known: return "known(x" + std::to_string(item) + ")";
        case Kind::committed:
            return "is_committed(" + task_names[decision] + ", " + cand_names[decision][candidate] + ")";
        case Kind::both:
            return "(" + parts[0].to_text(task_names, cand_names) + ") and (" + parts[1].to_text(task_names, cand_names) + ")";
        case Kind::either:
            return "(" + parts[0].to_text(task_names, cand_names) + ") or (" + parts[1].to_text(task_names, cand_names) + ")";
        case Kind::negate: return "not (" + parts[0].to_text(task_names, cand_names) + ")";
        }
        return {};
    }
};

struct ArgSpec {
    Cond cond;
    int weight = 1;
};

struct TaskSpec {
    model::TaskKind kind = model::TaskKind::action;
    int parent = -1;
    std::vector<int> antecedents;
    std::optional<Cond> precondition;
    std::vector<int> sources;
    std::vector<std::vector<ArgSpec>> candidates;  // per candidate: arguments
};

struct GuidelineSpec {
    int item_count = 0;
    std::vector<TaskSpec> tasks;  // index 0 is the root plan
    std::vector<std::optional<int>> bindings;  // per item; nullopt = unbound

    std::vector<std::string> task_names() const
    {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < tasks.size(); ++i) out.push_back("t" + std::to_string(i));
        return out;
    }

    std::vector<std::vector<std::string>> candidate_names() const
    {
        std::vector<std::vector<std::string>> out(tasks.size());
        for (std::size_t i = 0; i < tasks.size(); ++i)
            for (std::size_t c = 0; c < tasks[i].candidates.size(); ++c)
                out[i].push_back("t" + std::to_string(i) + "c" + std::to_string(c));
        return out;
    }

    model::GuidelineDefinition to_definition(bool with_meta = true) const
    {
        model::GuidelineDefinition def;
        def.id = "random";
        def.version = "1";
        def.root_plan = "t0";
        for (int i = 0; i < item_count; ++i) {
            model::DataItemDefinition item{"x" + std::to_string(i), ValueType::integer, {}};
            if (with_meta) item.meta = {{"source", "dp"}, {"resourceType", "Observation"}};
            def.data_items.push_back(item);
        }
        auto names = task_names();
        auto cands = candidate_names();
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& spec = tasks[i];
            model::TaskDefinition t;
            t.name = names[i];
            t.kind = spec.kind;
            for (std::size_t j = 0; j < tasks.size(); ++j)
                if (tasks[j].parent == static_cast<int>(i)) t.components.push_back(names[j]);
            for (int a : spec.antecedents) t.antecedents.push_back(names[a]);
            if (spec.precondition) t.precondition = model::parse_expression(spec.precondition->to_text(names, cands));
            for (int s : spec.sources) t.sources.push_back("x" + std::to_string(s));
            for (std::size_t c = 0; c < spec.candidates.size(); ++c) {
                model::Candidate cand;
                cand.name = cands[i][c];
                for (const auto& arg : spec.candidates[c])
                    cand.arguments.push_back({model::parse_expression(arg.cond.to_text(names, cands)), arg.weight});
                if (with_meta) cand.meta = {{"evidence", "because " + cand.name}};
                t.candidates.push_back(std::move(cand));
            }
            if (spec.kind == model::TaskKind::action) t.procedure = "do " + t.name;
            if (with_meta) {
                t.meta = {{"title", "Task " + t.name}};
                if (spec.kind == model::TaskKind::decision) t.meta["gate"] = (i % 2) ? "XOR" : "OR";
                if (spec.kind == model::TaskKind::action) t.meta["interventionType"] = "tip";
            }
            def.tasks.push_back(std::move(t));
        }
        return def;
    }

    std::vector<engine::DataValueBinding> binding_list() const
    {
        std::vector<engine::DataValueBinding> out;
        for (std::size_t i = 0; i < bindings.size(); ++i)
            if (bindings[i]) out.push_back({"x" + std::to_string(i), Value(*bindings[i]), {}, engine::BindingOrigin::external});
        return out;
    }
};

class GuidelineGenerator {
public:
    explicit GuidelineGenerator(std::uint32_t seed) : rng_(seed) {}

    GuidelineSpec generate(int max_tasks)
    {
        GuidelineSpec g;
        g.item_count = pick(1, 3);
        int n = pick(2, max_tasks);
        g.tasks.resize(n);
        g.tasks[0].kind = model::TaskKind::plan;

        for (int i = 1; i < n; ++i) {
            auto& t = g.tasks[i];
            std::vector<int> plans;
            for (int j = 0; j < i; ++j)
                if (g.tasks[j].kind == model::TaskKind::plan) plans.push_back(j);
            t.parent = plans[pick(0, static_cast<int>(plans.size()) - 1)];
            int k = pick(0, 9);
            t.kind = k < 2 ? model::TaskKind::plan
                   : k < 5 ? model::TaskKind::action
                   : k < 7 ? model::TaskKind::enquiry
                           : model::TaskKind::decision;
        }
        // Plans need components; childless ones become actions.
        for (int i = 1; i < n; ++i) {
            auto& t = g.tasks[i];
            bool has_child = false;
            for (int j = 0; j < n; ++j) has_child |= g.tasks[j].parent == i;
            if (t.kind == model::TaskKind::plan && !has_child) t.kind = model::TaskKind::action;
        }

        for (int i = 1; i < n; ++i) {
            auto& t = g.tasks[i];
            for (int j = 1; j < i; ++j)
                if (g.tasks[j].parent == t.parent && chance(30)) t.antecedents.push_back(j);
            if (chance(60)) t.precondition = cond(g, i, 1);
            if (t.kind == model::TaskKind::enquiry) {
                t.sources.push_back(pick(0, g.item_count - 1));
                if (g.item_count > 1 && chance(40)) {
                    int s = pick(0, g.item_count - 1);
                    if (s != t.sources[0]) t.sources.push_back(s);
                }
            }
            if (t.kind == model::TaskKind::decision) {
                int nc = pick(1, 3);
                t.candidates.resize(nc);
                for (auto& args : t.candidates) {
                    int na = pick(1, 2);
                    for (int a = 0; a < na; ++a) {
                        int w = pick(1, 2) * (chance(70) ? 1 : -1);
                        args.push_back({leaf(g.item_count), w});
                    }
                }
            }
        }

        g.bindings.resize(g.item_count);
        for (auto& b : g.bindings)
            if (chance(65)) b = pick(0, 3);
        return g;
    }

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(int percent) { return pick(0, 99) < percent; }

private:
    Cond leaf(int items)
    {
        Cond c;
        if (chance(75)) {
            c.kind = Cond::Kind::ge;
            c.item = pick(0, items - 1);
            c.threshold = pick(0, 3);
        } else {
            c.kind = Cond::Kind::known;
            c.item = pick(0, items - 1);
        }
        return c;
    }

    // Preconditions may refer to commitments of decisions among the task's
    // antecedents, which are settled before the precondition is evaluated.
    Cond cond(const GuidelineSpec& g, int task, int depth)
    {
        const auto& t = g.tasks[task];
        std::vector<int> decisions;
        for (int a : t.antecedents)
            if (g.tasks[a].kind == model::TaskKind::decision) decisions.push_back(a);

        int k = pick(0, 9);
        if (depth > 0 && k < 2) {
            Cond c;
            c.kind = k == 0 ? Cond::Kind::both : Cond::Kind::either;
            c.parts = {cond(g, task, depth - 1), cond(g, task, depth - 1)};
            return c;
        }
        if (depth > 0 && k == 2) {
            Cond c;
            c.kind = Cond::Kind::negate;
            c.parts = {cond(g, task, depth - 1)};
            return c;
        }
        if (!decisions.empty() && k < 5) {
            Cond c;
            c.kind = Cond::Kind::committed;
            c.decision = decisions[pick(0, static_cast<int>(decisions.size()) - 1)];
            c.candidate = pick(0, static_cast<int>(g.tasks[c.decision].candidates.size()) - 1);
            return c;
        }
        return leaf(g.item_count);
    }

    std::mt19937 rng_;
};

}  // namespace cig::testing
