#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridsec {

using BusId = int;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Branch {
    std::string id;
    BusId from = 0;
    BusId to = 0;
    double x = 1.0;       // per-unit reactance, > 0
    bool pseudo = false;  // PMU-made pseudo line (no physical conductor)
};

/// Buses, branches and the reference bus: the undirected graph the solvers
/// work on. Immutable after construction; invariants (connectivity, positive
/// reactances, valid endpoints) are checked up front.
class PowerNetwork {
public:
    PowerNetwork(std::vector<BusId> buses, BusId reference, std::vector<Branch> branches);

    /// Parses the versioned JSON case format. Errors carry a line number for
    /// syntax problems and a description for semantic ones.
    static PowerNetwork parse_case(const std::string& json_text);

    const std::vector<BusId>& buses() const { return buses_; }
    BusId reference() const { return reference_; }
    const std::vector<Branch>& branches() const { return branches_; }

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int state_count() const { return bus_count() - 1; }

    bool has_bus(BusId b) const { return bus_index_.count(b) > 0; }
    int bus_index(BusId b) const;                        // dense 0-based, ascending id order
    std::optional<int> branch_index(const std::string& id) const;

    /// Column of a non-reference bus in the Jacobian: ascending bus id order
    /// with the reference skipped. Returns -1 for the reference bus.
    int state_column(BusId b) const;
    /// Bus id for a state column.
    BusId state_bus(int col) const { return state_buses_[col]; }
    const std::vector<BusId>& state_buses() const { return state_buses_; }

    /// Indices of branches incident to a bus (declaration order).
    const std::vector<int>& incident(BusId b) const;

    std::optional<int> find_branch_between(BusId a, BusId b) const;

private:
    void index();

    std::vector<BusId> buses_;  // ascending
    BusId reference_;
    std::vector<Branch> branches_;
    std::map<BusId, int> bus_index_;
    std::map<std::string, int> branch_index_;
    std::vector<BusId> state_buses_;
    std::map<BusId, int> state_column_;
    std::vector<std::vector<int>> incident_;
};

enum class FlowDir { Forward, Reverse };

enum class MeterKind { Flow, Injection };

struct Meter {
    std::string id;
    MeterKind kind;
    // Flow meters:
    int branch = -1;  // branch index
    FlowDir dir = FlowDir::Forward;
    bool pmu_derived = false;
    // Injection meters:
    BusId bus = 0;
};

struct Pmu {
    std::string id;
    BusId bus = 0;
};

/// The meter set M: an ordered list of flow and injection meters plus the
/// optional PMUs. Meter order defines Jacobian row order and is stable; PMU
/// augmentation appends pseudo flow meters at the end.
class MeasurementPlacement {
public:
    MeasurementPlacement() = default;
    MeasurementPlacement(const PowerNetwork& net, std::vector<Meter> meters, std::vector<Pmu> pmus);

    static MeasurementPlacement parse(const std::string& json_text, const PowerNetwork& net);

    const std::vector<Meter>& meters() const { return meters_; }
    const std::vector<Pmu>& pmus() const { return pmus_; }
    int meter_count() const { return static_cast<int>(meters_.size()); }

    std::optional<int> meter_index(const std::string& id) const;
    const Meter& meter(int idx) const { return meters_[idx]; }

    int flow_count() const;
    int injection_count() const;

    /// Injection meter index at a bus, if any.
    std::optional<int> injection_at(BusId bus) const;
    /// Flow meter indices on a branch (at most one unless a PMU pseudo meter
    /// shares the branch with a real flow meter).
    std::vector<int> flows_on(int branch_idx) const;

private:
    std::vector<Meter> meters_;
    std::vector<Pmu> pmus_;
    std::map<std::string, int> meter_index_;
};

/// Result of the PMU pseudo-edge transformation (base network plus pseudo
/// branches, placement plus PMU-derived pseudo flow meters).
struct PmuAugmentation {
    PowerNetwork network;
    MeasurementPlacement placement;
    std::vector<std::string> pseudo_branch_ids;
    std::vector<std::string> pseudo_meter_ids;
};

/// For each PMU at a non-reference bus b, places a secured pseudo flow meter
/// on the branch (b, R), adding a pseudo branch when no real one exists. A
/// PMU at the reference bus adds nothing. Pseudo flow meters carry the PMU id
/// and are flagged pmu_derived.
PmuAugmentation augment_with_pmus(const PowerNetwork& net, const MeasurementPlacement& meas);

}  // namespace gridsec
