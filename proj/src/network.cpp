#include "gridsec/network.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace gridsec {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

int line_of_offset(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string(what) + ": syntax error at line " +
             std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }
}

void require_format(const json& j, const char* what) {
    if (!j.is_object()) fail(std::string(what) + ": top level must be an object");
    if (!j.contains("format") || !j["format"].is_number_integer() || j["format"].get<int>() != 1)
        fail(std::string(what) + ": missing or unsupported \"format\" (expected 1)");
}

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace

PowerNetwork::PowerNetwork(std::vector<BusId> buses, BusId reference, std::vector<Branch> branches)
    : buses_(std::move(buses)), reference_(reference), branches_(std::move(branches)) {
    if (buses_.empty()) fail("network has no buses");
    std::sort(buses_.begin(), buses_.end());
    if (std::adjacent_find(buses_.begin(), buses_.end()) != buses_.end())
        fail("duplicate bus id");
    index();
    if (!has_bus(reference_)) fail("reference is not a bus: " + std::to_string(reference_));
    for (const Branch& b : branches_) {
        if (!has_bus(b.from)) fail("branch " + b.id + ": unknown bus " + std::to_string(b.from));
        if (!has_bus(b.to)) fail("branch " + b.id + ": unknown bus " + std::to_string(b.to));
        if (b.from == b.to) fail("branch " + b.id + ": endpoints must be distinct");
        if (!(b.x > 0.0)) fail("branch " + b.id + ": reactance must be > 0");
    }
    // Connectivity of the physical graph; a single isolated bus is fine.
    DisjointSet ds(bus_count());
    for (const Branch& b : branches_) ds.unite(bus_index(b.from), bus_index(b.to));
    const int root = ds.find(0);
    for (int i = 1; i < bus_count(); ++i)
        if (ds.find(i) != root) fail("network graph is disconnected");
}

void PowerNetwork::index() {
    bus_index_.clear();
    branch_index_.clear();
    state_buses_.clear();
    state_column_.clear();
    for (size_t i = 0; i < buses_.size(); ++i) bus_index_[buses_[i]] = static_cast<int>(i);
    for (size_t i = 0; i < branches_.size(); ++i) {
        if (!branch_index_.emplace(branches_[i].id, static_cast<int>(i)).second)
            fail("duplicate branch id: " + branches_[i].id);
    }
    for (BusId b : buses_) {
        if (b == reference_) continue;
        state_column_[b] = static_cast<int>(state_buses_.size());
        state_buses_.push_back(b);
    }
    incident_.assign(buses_.size(), {});
    for (size_t i = 0; i < branches_.size(); ++i) {
        if (!bus_index_.count(branches_[i].from))
            fail("branch " + branches_[i].id + ": unknown bus " + std::to_string(branches_[i].from));
        if (!bus_index_.count(branches_[i].to))
            fail("branch " + branches_[i].id + ": unknown bus " + std::to_string(branches_[i].to));
        incident_[bus_index_.at(branches_[i].from)].push_back(static_cast<int>(i));
        incident_[bus_index_.at(branches_[i].to)].push_back(static_cast<int>(i));
    }
}

int PowerNetwork::bus_index(BusId b) const {
    auto it = bus_index_.find(b);
    if (it == bus_index_.end()) fail("unknown bus " + std::to_string(b));
    return it->second;
}

std::optional<int> PowerNetwork::branch_index(const std::string& id) const {
    auto it = branch_index_.find(id);
    if (it == branch_index_.end()) return std::nullopt;
    return it->second;
}

int PowerNetwork::state_column(BusId b) const {
    auto it = state_column_.find(b);
    if (it == state_column_.end()) return -1;
    return it->second;
}

const std::vector<int>& PowerNetwork::incident(BusId b) const { return incident_[bus_index(b)]; }

std::optional<int> PowerNetwork::find_branch_between(BusId a, BusId b) const {
    for (int bi : incident(a)) {
        const Branch& br = branches_[bi];
        if ((br.from == a && br.to == b) || (br.from == b && br.to == a)) return bi;
    }
    return std::nullopt;
}

PowerNetwork PowerNetwork::parse_case(const std::string& json_text) {
    const json j = parse_json(json_text, "case file");
    require_format(j, "case file");
    if (!j.contains("buses") || !j["buses"].is_array()) fail("case file: missing \"buses\" array");
    if (!j.contains("reference")) fail("case file: missing \"reference\"");
    std::vector<BusId> buses;
    for (const auto& b : j["buses"]) {
        if (!b.is_number_integer()) fail("case file: bus ids must be integers");
        buses.push_back(b.get<BusId>());
    }
    std::vector<Branch> branches;
    if (j.contains("branches")) {
        for (const auto& el : j["branches"]) {
            Branch br;
            if (!el.contains("id") || !el["id"].is_string()) fail("case file: branch without id");
            br.id = el["id"].get<std::string>();
            if (!el.contains("from") || !el.contains("to"))
                fail("case file: branch " + br.id + " needs \"from\" and \"to\"");
            br.from = el["from"].get<BusId>();
            br.to = el["to"].get<BusId>();
            br.x = el.value("x", 1.0);
            branches.push_back(std::move(br));
        }
    }
    return PowerNetwork(std::move(buses), j["reference"].get<BusId>(), std::move(branches));
}

// ---------------------------------------------------------------------------

MeasurementPlacement::MeasurementPlacement(const PowerNetwork& net, std::vector<Meter> meters,
                                           std::vector<Pmu> pmus)
    : meters_(std::move(meters)), pmus_(std::move(pmus)) {
    std::set<std::string> ids;
    std::set<int> flow_branches;
    std::set<BusId> injection_buses;
    for (size_t i = 0; i < meters_.size(); ++i) {
        const Meter& m = meters_[i];
        if (!ids.insert(m.id).second) fail("duplicate meter id: " + m.id);
        meter_index_[m.id] = static_cast<int>(i);
        if (m.kind == MeterKind::Flow) {
            if (m.branch < 0 || m.branch >= static_cast<int>(net.branches().size()))
                fail("flow meter " + m.id + ": unknown branch");
            if (!flow_branches.insert(m.branch).second && !m.pmu_derived)
                fail("flow meter " + m.id + ": branch already has a flow meter");
        } else {
            if (!net.has_bus(m.bus)) fail("injection meter " + m.id + ": unknown bus " + std::to_string(m.bus));
            if (!injection_buses.insert(m.bus).second)
                fail("injection meter " + m.id + ": bus already has an injection meter");
        }
    }
    std::set<BusId> pmu_buses;
    for (const Pmu& p : pmus_) {
        if (!ids.insert(p.id).second) fail("duplicate meter id: " + p.id);
        if (!net.has_bus(p.bus)) fail("pmu " + p.id + ": unknown bus " + std::to_string(p.bus));
        if (!pmu_buses.insert(p.bus).second) fail("pmu " + p.id + ": bus already has a PMU");
    }
}

MeasurementPlacement MeasurementPlacement::parse(const std::string& json_text,
                                                 const PowerNetwork& net) {
    const json j = parse_json(json_text, "measurement file");
    require_format(j, "measurement file");
    std::vector<Meter> meters;
    if (j.contains("flow")) {
        for (const auto& el : j["flow"]) {
            Meter m;
            m.kind = MeterKind::Flow;
            m.id = el.at("id").get<std::string>();
            const std::string branch = el.at("branch").get<std::string>();
            auto bi = net.branch_index(branch);
            if (!bi) fail("flow meter " + m.id + ": unknown branch " + branch);
            m.branch = *bi;
            const std::string dir = el.value("dir", "fwd");
            if (dir == "fwd")
                m.dir = FlowDir::Forward;
            else if (dir == "rev")
                m.dir = FlowDir::Reverse;
            else
                fail("flow meter " + m.id + ": dir must be \"fwd\" or \"rev\"");
            meters.push_back(std::move(m));
        }
    }
    if (j.contains("injection")) {
        for (const auto& el : j["injection"]) {
            Meter m;
            m.kind = MeterKind::Injection;
            m.id = el.at("id").get<std::string>();
            m.bus = el.at("bus").get<BusId>();
            meters.push_back(std::move(m));
        }
    }
    std::vector<Pmu> pmus;
    if (j.contains("pmu")) {
        for (const auto& el : j["pmu"]) {
            pmus.push_back(Pmu{el.at("id").get<std::string>(), el.at("bus").get<BusId>()});
        }
    }
    return MeasurementPlacement(net, std::move(meters), std::move(pmus));
}

std::optional<int> MeasurementPlacement::meter_index(const std::string& id) const {
    auto it = meter_index_.find(id);
    if (it == meter_index_.end()) return std::nullopt;
    return it->second;
}

int MeasurementPlacement::flow_count() const {
    return static_cast<int>(std::count_if(meters_.begin(), meters_.end(),
                                          [](const Meter& m) { return m.kind == MeterKind::Flow; }));
}

int MeasurementPlacement::injection_count() const {
    return meter_count() - flow_count();
}

std::optional<int> MeasurementPlacement::injection_at(BusId bus) const {
    for (size_t i = 0; i < meters_.size(); ++i)
        if (meters_[i].kind == MeterKind::Injection && meters_[i].bus == bus)
            return static_cast<int>(i);
    return std::nullopt;
}

std::vector<int> MeasurementPlacement::flows_on(int branch_idx) const {
    std::vector<int> out;
    for (size_t i = 0; i < meters_.size(); ++i)
        if (meters_[i].kind == MeterKind::Flow && meters_[i].branch == branch_idx)
            out.push_back(static_cast<int>(i));
    return out;
}

// ---------------------------------------------------------------------------

PmuAugmentation augment_with_pmus(const PowerNetwork& net, const MeasurementPlacement& meas) {
    std::vector<Branch> branches = net.branches();
    std::vector<Meter> meters = meas.meters();
    PmuAugmentation out{net, meas, {}, {}};

    const BusId ref = net.reference();
    bool changed = false;
    for (const Pmu& p : meas.pmus()) {
        if (p.bus == ref) continue;  // a PMU is expected at the reference; it adds nothing
        int branch_idx;
        if (auto existing = net.find_branch_between(p.bus, ref)) {
            branch_idx = *existing;
        } else {
            Branch pb;
            pb.id = "pseudo:" + p.id;
            pb.from = p.bus;
            pb.to = ref;
            pb.x = 1.0;
            pb.pseudo = true;
            branch_idx = static_cast<int>(branches.size());
            branches.push_back(pb);
            out.pseudo_branch_ids.push_back(pb.id);
        }
        Meter m;
        m.kind = MeterKind::Flow;
        m.id = p.id;  // securing this meter means securing the PMU
        m.branch = branch_idx;
        m.dir = branches[branch_idx].from == p.bus ? FlowDir::Forward : FlowDir::Reverse;
        m.pmu_derived = true;
        meters.push_back(std::move(m));
        out.pseudo_meter_ids.push_back(p.id);
        changed = true;
    }
    if (!changed) return out;

    PowerNetwork augmented(net.buses(), ref, std::move(branches));
    // PMU ids move from the pmu list into the meter list.
    MeasurementPlacement placement(augmented, std::move(meters), {});
    out.network = std::move(augmented);
    out.placement = std::move(placement);
    return out;
}

}  // namespace gridsec
