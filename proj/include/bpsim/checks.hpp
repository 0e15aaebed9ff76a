#pragma once

// Built-in small-scale oracle suite run by `bpsim validate`.

#include <cstdint>
#include <string>
#include <vector>

#include "bpsim/schedulers.hpp"

namespace bpsim {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct CheckOptions {
    std::size_t trials = 100;
    std::uint64_t seed = 7;
    /// Tie-break handed to the scheduler under test. Transmit is the
    /// negative control: the scheduler oracle must then fail.
    TieBreak scheduler_tie = TieBreak::Idle;
};

/// Exhaustive argmax of the cooperative objective over {0,1}^N (N <= 20).
/// Among maximizers (objective within 1e-9 relative of the max) returns the
/// one with the fewest active nodes.
ControlVector brute_force_cooperative(const CoupledModel& model, std::span<const double> q,
                                      double* best_value = nullptr);

std::vector<CheckResult> run_builtin_checks(const CheckOptions& options);

}  // namespace bpsim
