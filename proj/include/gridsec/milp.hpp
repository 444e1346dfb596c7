#pragma once

#include "gridsec/plan.hpp"
#include "gridsec/simplex.hpp"

namespace gridsec {

/// Fixed variables for incremental protection: a previously built tree whose
/// arcs and injection mappings are pinned to 1.
struct FixedTree {
    BusId root = 0;
    std::vector<std::pair<std::string, std::string>> edges;  // (branch id, meter id)
};

struct MmsaOptions {
    bool antiparallel_cut = true;  // auxiliary x_ij + x_ji <= 1; removable for fidelity runs
    std::optional<FixedTree> fixed_tree;
};

/// The minimum measured Steiner arborescence program: each edge of the graph
/// becomes two opposite arcs, one unit of demand sits at every target vertex,
/// used injection meters induce pseudo demand at every vertex they measure.
struct MmsaInstance {
    const MeasuredGraph* mg = nullptr;
    Jacobian jac;  // of the same network/placement; used by the solver's leaf tests
    StateSet d;
    BusId root = 0;

    // Arc a = 2*edge + dir; dir 0 runs branch.from -> branch.to.
    int num_edges = 0;
    int num_arcs() const { return 2 * num_edges; }
    std::vector<BusId> arc_tail, arc_head;
    std::vector<char> edge_has_flow;  // 1_E, PMU pseudo meters included
    std::vector<char> edge_pseudo;

    // z variables: injection meter at `bus` mapped to `edge` (real edges only).
    struct ZVar {
        int edge;
        BusId bus;
        int meter;  // injection meter index
    };
    std::vector<ZVar> zvars;

    double w = 0.0;  // |A| + |M| + |D| + 1

    bool antiparallel_cut = true;
    std::vector<int> fixed_arcs_one;  // oriented away from the root
    std::vector<int> fixed_z_one;     // indices into zvars

    int reverse_arc(int a) const { return a ^ 1; }
    int arc_edge(int a) const { return a >> 1; }
};

MmsaInstance build_instance(const MeasuredGraph& mg, const StateSet& d, MmsaOptions opt = {});

/// The paper's MILP as a linear program (binaries relaxed to [0,1]); used for
/// the root relaxation and the --dump-lp escape hatch.
LinearProgram instance_lp(const MmsaInstance& inst);
std::string dump_lp(const MmsaInstance& inst);

struct MilpLimits {
    long node_budget = 50'000'000;
    double time_budget_s = 900.0;
    bool compute_root_lp = true;
};

struct MilpSolution {
    bool feasible = false;
    bool optimal = false;
    double objective = 0.0;
    int arc_count = 0;
    int injection_count = 0;
    std::vector<int> arcs;                            // selected arcs
    std::vector<std::pair<int, int>> edge_meters;     // (edge, meter) per selected edge
    long nodes = 0;
    double root_lp = 0.0;
    long root_dual = 0;  // dual-ascent bound at the root node
    double wall_ms = 0.0;
};

/// Exact optimum by branch and bound over the arc/injection variables.
/// Bounding combines the paper LP relaxation at the root with a dual-ascent
/// bound on the directed-cut relaxation at every node (both are valid lower
/// bounds; dual ascent is what closes the tree at scale). Deterministic.
MilpSolution solve_exact(const MmsaInstance& inst, MilpLimits limits = {});

/// Restores the meter set from an optimal assignment: injection meters where
/// some z is one, flow meters on remaining selected arcs; asserts the rank
/// condition on the result.
ProtectionPlan extract_plan(const MmsaInstance& inst, const MilpSolution& sol, const Jacobian& jac);

}  // namespace gridsec
