#pragma once

#include <atomic>

#include "cig/core/time.hpp"

namespace cig {

class Clock {
public:
    virtual ~Clock() = default;
    virtual VirtualTime now() const = 0;
};

/// Scripted clock shared by every component of one environment.
class VirtualClock : public Clock {
public:
    explicit VirtualClock(VirtualTime start = {}) : seconds_(start.seconds) {}

    VirtualTime now() const override { return {seconds_.load()}; }

    /// Moves forward only; earlier values are ignored.
    void advance_to(VirtualTime t)
    {
        auto cur = seconds_.load();
        while (t.seconds > cur && !seconds_.compare_exchange_weak(cur, t.seconds)) {
        }
    }

private:
    std::atomic<std::int64_t> seconds_;
};

}  // namespace cig
