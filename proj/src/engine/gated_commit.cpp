#include "cig/engine/gated_commit.hpp"

#include <algorithm>

namespace cig::engine {

std::optional<TransitionRecord> commit_gated(EngineInstance& inst, std::string_view decision,
                                             std::string_view candidate)
{
    const auto& guideline = inst.guideline();
    auto idx = guideline.task_index(decision);
    if (idx == model::ValidatedGuideline::npos) throw NotFound("unknown task '" + std::string(decision) + "'");

    auto gate_text = model::get_meta(guideline.task(idx), model::meta::gate);
    auto gate = gate_text ? model::parse_gate(*gate_text) : std::nullopt;
    if (gate == model::Gate::exactly_one) {
        auto committed = inst.committed_candidates(decision);
        bool other = std::any_of(committed.begin(), committed.end(), [&](const auto& c) { return c != candidate; });
        if (other)
            throw GateViolation("decision '" + std::string(decision) + "' has gate XOR and already committed '" +
                                committed.front() + "'");
    }
    return inst.commit_candidate(decision, candidate);
}

}  // namespace cig::engine
