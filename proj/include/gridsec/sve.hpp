#pragma once

#include "gridsec/plan.hpp"

namespace gridsec {

struct SveOptions {
    /// Enumeration ceiling: refuse when 2^(|I|-|D|) exceeds this unless forced.
    std::uint64_t max_subsets = std::uint64_t{1} << 25;
    bool force = false;
    RankOptions rank;
};

/// Steiner vertex enumeration: walks candidate Steiner-vertex sets V0 in
/// increasing size (lexicographic bus-id order within a size) until the
/// meters confined to D u V0 u {R} make every vertex of the set observable.
/// Exact by construction; the benchmark oracle for the other solvers.
ProtectionPlan solve_sve(const Jacobian& jac, const MeasuredGraph& mg, const StateSet& d,
                         SveOptions opt = {});

}  // namespace gridsec
