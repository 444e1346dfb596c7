#include "gridsec/plan.hpp"

#include <json.hpp>

namespace gridsec {

using nlohmann::json;

VerificationRecord verify_protection(const Jacobian& jac, const MeasurementPlacement& meas,
                                     const std::vector<std::string>& meter_ids,
                                     const StateSet& targets, RankOptions opt) {
    VerificationRecord rec;
    rec.checked = true;
    std::vector<int> rows;
    for (const std::string& id : meter_ids) {
        auto idx = meas.meter_index(id);
        if (!idx) throw std::runtime_error("plan references unknown meter " + id);
        rows.push_back(*idx);
    }
    rec.rank_condition = is_protected(jac, rows, targets, opt);
    rec.attacks_none = true;
    for (BusId t : targets)
        if (synthesize_attack(jac, rows, t, opt)) rec.attacks_none = false;
    return rec;
}

namespace {

json tree_json_object(const FeasibleMeasuredTree& tree, const MeasuredGraph& mg) {
    json edges = json::array();
    for (const auto& em : tree.edges) {
        edges.push_back({{"edge", mg.network().branches()[em.branch].id},
                         {"meter", mg.placement().meter(em.meter).id}});
    }
    return json{{"root", tree.root}, {"vertices", tree.vertices}, {"edges", edges}};
}

}  // namespace

std::string tree_to_json(const FeasibleMeasuredTree& tree, const MeasuredGraph& mg) {
    json j = tree_json_object(tree, mg);
    j["format"] = 1;
    return j.dump(2);
}

std::string plan_to_json(const ProtectionPlan& plan, const MeasuredGraph& mg) {
    json j;
    j["format"] = 1;
    j["method"] = plan.method;
    j["targets"] = plan.targets;
    j["meters"] = plan.meter_ids;
    j["meter_count"] = plan.meter_count();
    j["pmu"] = plan.pmu_augmented;
    if (!plan.pmu_meter_ids.empty()) j["pmu_meters"] = plan.pmu_meter_ids;
    if (plan.tree) j["tree"] = tree_json_object(*plan.tree, mg);
    j["verification"] = {
        {"rank_condition", plan.verification.rank_condition},
        {"attacks_none", plan.verification.attacks_none},
        {"status", plan.verification.verified()
                       ? (plan.stats.optimal ? "verified" : "verified, unverified-optimality")
                       : "failed"},
    };
    j["stats"] = {
        {"nodes", plan.stats.nodes},
        {"iterations", plan.stats.iterations},
        {"vertices_examined", plan.stats.vertices_examined},
        {"wall_ms", plan.stats.wall_ms},
        {"root_relaxation", plan.stats.root_relaxation},
        {"optimal", plan.stats.optimal},
    };
    return j.dump(2);
}

std::string attack_to_json(const AttackVector& attack, BusId target,
                           std::optional<BddResult> demo) {
    json j;
    j["format"] = 1;
    j["target"] = target;
    json c = json::object();
    for (const auto& [bus, v] : attack.c) c[std::to_string(bus)] = v;
    json a = json::object();
    for (const auto& [meter, v] : attack.a) a[meter] = v;
    j["c"] = c;
    j["a"] = a;
    if (demo) j["residual_demo"] = {{"r_clean", demo->r_clean}, {"r_attacked", demo->r_attacked}};
    return j.dump(2);
}

LoadedPlan plan_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("plan file: ") + e.what());
    }
    if (j.value("format", 0) != 1) throw ParseError("plan file: unsupported format");
    LoadedPlan out;
    out.method = j.value("method", "");
    if (j.contains("targets"))
        for (const auto& t : j["targets"]) out.targets.push_back(t.get<BusId>());
    for (const auto& m : j.at("meters")) out.meter_ids.push_back(m.get<std::string>());
    out.pmu_augmented = j.value("pmu", false);
    if (j.contains("verification")) out.status = j["verification"].value("status", "");
    if (j.contains("tree")) {
        out.has_tree = true;
        out.tree_root = j["tree"].at("root").get<BusId>();
        for (const auto& e : j["tree"].at("edges"))
            out.tree_edges.emplace_back(e.at("edge").get<std::string>(),
                                        e.at("meter").get<std::string>());
    }
    return out;
}

}  // namespace gridsec
