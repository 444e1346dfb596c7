#pragma once

#include <functional>

#include "gridsec/plan.hpp"

namespace gridsec {

struct TphOptions {
    int k = 5;
    std::uint64_t seed = 0;
    RankOptions rank;
    /// Per-round progress: round index, W (vertices entering the round), |T*|.
    std::function<void(int, int, int)> log;
};

/// Tree-pruning heuristic: repeatedly generates K feasible measured spanning
/// trees of the current vertex set from seed-shuffled basic measurement sets,
/// prunes redundant subtrees root-to-leaf, keeps the smallest residual tree,
/// and stops when a full round removes nothing. Polynomial; the instrumented
/// vertex-examination counter is bounded by K * (|I|-|D|+1) * |I|.
ProtectionPlan solve_tph(const Jacobian& jac, const MeasuredGraph& mg, const StateSet& d,
                         TphOptions opt = {});

}  // namespace gridsec
