#pragma once

#include <cstddef>

#include "cig/model/meta.hpp"

namespace cig::gateway {

/// Accepting `chosen` of `total` options: AND takes all of them, OR at
/// least one, XOR exactly one.
constexpr bool gate_admits(model::Gate gate, std::size_t chosen, std::size_t total)
{
    if (chosen > total) return false;
    switch (gate) {
    case model::Gate::all_of: return chosen == total && total > 0;
    case model::Gate::any_of: return chosen >= 1;
    case model::Gate::exactly_one: return chosen == 1;
    }
    return false;
}

}  // namespace cig::gateway
