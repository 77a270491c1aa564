#pragma once

#include "cig/engine/instance.hpp"

namespace cig::engine {

class GateViolation : public Conflict {
public:
    using Conflict::Conflict;
};

/// Meta-aware commit used by wrapper components. The engine itself never
/// reads meta-properties; this facade reads the decision's `gate` and
/// rejects a second distinct commitment under XOR before delegating to
/// EngineInstance::commit_candidate.
std::optional<TransitionRecord> commit_gated(EngineInstance& inst, std::string_view decision,
                                             std::string_view candidate);

}  // namespace cig::engine
