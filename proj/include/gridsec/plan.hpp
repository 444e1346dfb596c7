#pragma once

#include <optional>
#include <string>

#include "gridsec/measured_graph.hpp"
#include "gridsec/observability.hpp"

namespace gridsec {

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerificationRecord {
    bool rank_condition = false;
    bool attacks_none = false;
    bool checked = false;
    bool verified() const { return checked && rank_condition && attacks_none; }
};

struct SolverStats {
    long nodes = 0;              // branch-and-bound nodes explored
    long iterations = 0;         // method-specific iteration count
    long vertices_examined = 0;  // TPH instrumentation counter
    double wall_ms = 0.0;
    double root_relaxation = 0.0;
    bool optimal = true;
};

/// Solver output: the protected meter set, its Steiner tree with the
/// meter <-> edge mapping, and the verification record.
struct ProtectionPlan {
    std::string method;  // "sve" | "milp" | "tph"
    StateSet targets;
    std::vector<std::string> meter_ids;             // sorted by meter row order
    std::optional<FeasibleMeasuredTree> tree;
    std::vector<std::string> pmu_meter_ids;         // pre-secured PMU pseudo meters in the plan
    bool pmu_augmented = false;
    VerificationRecord verification;
    SolverStats stats;

    int meter_count() const { return static_cast<int>(meter_ids.size()); }
};

/// Runs the two independent checks every emitted plan must pass: the rank
/// condition and per-target attack synthesis returning none.
VerificationRecord verify_protection(const Jacobian& jac, const MeasurementPlacement& meas,
                                     const std::vector<std::string>& meter_ids,
                                     const StateSet& targets, RankOptions opt = {});

/// Serialization of plans and trees (format 1).
std::string plan_to_json(const ProtectionPlan& plan, const MeasuredGraph& mg);
std::string tree_to_json(const FeasibleMeasuredTree& tree, const MeasuredGraph& mg);
std::string attack_to_json(const AttackVector& attack, BusId target,
                           std::optional<BddResult> demo);

struct LoadedPlan {
    std::string method;
    StateSet targets;
    std::vector<std::string> meter_ids;
    bool pmu_augmented = false;
    std::string status;
    // Tree edges as (branch id, meter id) pairs plus the root, when present.
    BusId tree_root = 0;
    std::vector<std::pair<std::string, std::string>> tree_edges;
    bool has_tree = false;
};

LoadedPlan plan_from_json(const std::string& text);

}  // namespace gridsec
