#pragma once

#include <map>
#include <optional>

#include "gridsec/network.hpp"

namespace gridsec {

struct SubNetwork {
    std::vector<BusId> vertices;  // sorted
    std::vector<int> edges;       // branch indices, sorted
};

/// Graph annotated with per-meter measurability: a flow meter sees its branch
/// and both endpoints, an injection meter sees the bus's star of real
/// branches.
class MeasuredGraph {
public:
    MeasuredGraph(const PowerNetwork& net, const MeasurementPlacement& meas);

    const PowerNetwork& network() const { return *net_; }
    const MeasurementPlacement& placement() const { return *meas_; }

    const std::vector<BusId>& measured_vertices(int meter) const { return vertices_[meter]; }
    const std::vector<int>& measured_edges(int meter) const { return edges_[meter]; }

    SubNetwork measured_subnetwork(const std::vector<int>& meters) const;

    /// The measured full network G(M).
    const SubNetwork& measured_full() const { return full_; }

    /// Meters that can be mapped to an edge: the flow meters on it plus the
    /// endpoint injections (injections never map to pseudo edges).
    const std::vector<int>& meters_measuring_edge(int branch) const { return edge_meters_[branch]; }

    /// Flow meter mapped to an edge by preference: the PMU pseudo meter when
    /// present, otherwise the real flow meter, otherwise nullopt.
    std::optional<int> preferred_flow_meter(int branch) const;

private:
    const PowerNetwork* net_;
    const MeasurementPlacement* meas_;
    std::vector<std::vector<BusId>> vertices_;  // per meter, sorted
    std::vector<std::vector<int>> edges_;       // per meter, sorted
    std::vector<std::vector<int>> edge_meters_; // per branch
    SubNetwork full_;
};

/// Tree rooted at the reference with a bijective tree-edge <-> meter mapping
/// obeying the measurement mapping rules, plus the orientation away from the
/// root (children in ascending bus-id order).
struct FeasibleMeasuredTree {
    BusId root = 0;
    struct EdgeMap {
        int branch;  // branch index
        int meter;   // meter index
    };
    std::vector<EdgeMap> edges;
    std::vector<BusId> vertices;  // sorted

    // Orientation, filled by identify_descendants.
    std::map<BusId, BusId> parent;                    // absent for root
    std::map<BusId, std::vector<BusId>> children;     // ascending
    std::map<BusId, std::vector<BusId>> descendants;  // ascending

    bool contains(BusId v) const;
    int edge_count() const { return static_cast<int>(edges.size()); }
};

enum class TreeBackend {
    MatroidIntersection,  // graphic x transversal; complete
    MaxFlow,              // matching with union-find cycle rejection; may miss
};

/// Builds a feasible measured tree for a basic measurement set: a spanning
/// tree of the set's measured vertices whose edges are injectively mapped to
/// meters measuring them. The default backend is matroid intersection between
/// the graphic matroid on measured edges and the transversal matroid of the
/// meter-edge measurability relation; nullopt signals a violated
/// precondition. The MaxFlow backend follows the classical augmenting
/// construction and is kept for cross-checks.
std::optional<FeasibleMeasuredTree> construct_feasible_tree(
    const MeasuredGraph& mg, const std::vector<int>& basic_meters, BusId root,
    TreeBackend backend = TreeBackend::MatroidIntersection);

/// Recomputes parent/children/descendant sets by breadth-first traversal from
/// the root, children visited in ascending bus-id order.
void identify_descendants(FeasibleMeasuredTree& tree, const MeasuredGraph& mg);

/// Full invariant check: bijection, measurability of each mapping, acyclic
/// connected edge set, vertex set equal to the measured vertices of the
/// mapped meters, root included.
bool validate_tree(const MeasuredGraph& mg, const FeasibleMeasuredTree& tree,
                   std::string* why = nullptr);

}  // namespace gridsec
