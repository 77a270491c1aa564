#pragma once

#include <compare>
#include <cstdint>

namespace cig {

/// Scripted simulation time in whole seconds since scenario start. Never
/// derived from the wall clock.
struct VirtualTime {
    std::int64_t seconds = 0;

    constexpr auto operator<=>(const VirtualTime&) const = default;

    constexpr VirtualTime operator+(std::int64_t delta) const { return {seconds + delta}; }
    constexpr VirtualTime operator-(std::int64_t delta) const { return {seconds - delta}; }

    constexpr int hour_of_day() const
    {
        auto in_day = seconds % 86400;
        if (in_day < 0) in_day += 86400;
        return static_cast<int>(in_day / 3600);
    }
};

}  // namespace cig
