#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridsec/jacobian.hpp"
#include "gridsec/measured_graph.hpp"
#include "gridsec/milp.hpp"
#include "gridsec/network.hpp"
#include "gridsec/observability.hpp"
#include "gridsec/plan.hpp"
#include "gridsec/sve.hpp"
#include "gridsec/tph.hpp"

using namespace gridsec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitVerification = 3;
constexpr int kExitBudget = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << text << "\n";
    }
}

struct Loaded {
    PowerNetwork net;
    MeasurementPlacement meas;
    bool pmu_applied = false;
};

Loaded load_inputs(const std::string& case_path, const std::string& meas_path, bool use_pmu) {
    PowerNetwork net = PowerNetwork::parse_case(read_file(case_path));
    MeasurementPlacement meas = MeasurementPlacement::parse(read_file(meas_path), net);
    if (use_pmu && !meas.pmus().empty()) {
        PmuAugmentation aug = augment_with_pmus(net, meas);
        return Loaded{std::move(aug.network), std::move(aug.placement), true};
    }
    return Loaded{std::move(net), std::move(meas), false};
}

std::vector<BusId> parse_targets(const std::string& csv) {
    std::vector<BusId> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

std::vector<std::string> parse_ids(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::string format_number(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

int cmd_jacobian(const std::string& case_path, const std::string& meas_path,
                 const std::string& format, const std::string& out_path, bool use_pmu) {
    Loaded in = load_inputs(case_path, meas_path, use_pmu);
    const Jacobian jac = build_jacobian(in.net, in.meas);
    std::ostringstream os;
    if (format == "json") {
        nlohmann::json j;
        j["format"] = 1;
        j["rows"] = jac.row_ids;
        j["cols"] = jac.col_buses;
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < jac.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < jac.cols(); ++c) row.push_back(jac.h(r, c));
            rows.push_back(row);
        }
        j["matrix"] = rows;
        os << j.dump(2);
    } else {
        os << "meter";
        for (BusId b : jac.col_buses) os << "," << b;
        for (int r = 0; r < jac.rows(); ++r) {
            os << "\n" << jac.row_ids[r];
            for (int c = 0; c < jac.cols(); ++c) os << "," << format_number(jac.h(r, c));
        }
    }
    emit(os.str(), out_path);
    return kExitOk;
}

int cmd_check(const std::string& case_path, const std::string& meas_path,
              const std::string& meters_csv, const std::string& plan_path,
              const std::string& targets_csv, const std::string& out_path, bool use_pmu) {
    std::vector<std::string> meter_ids;
    StateSet targets = parse_targets(targets_csv);
    if (!plan_path.empty()) {
        const LoadedPlan plan = plan_from_json(read_file(plan_path));
        meter_ids = plan.meter_ids;
        if (targets.empty()) targets = plan.targets;
        if (plan.pmu_augmented) use_pmu = true;
    } else if (!meters_csv.empty()) {
        meter_ids = parse_ids(meters_csv);
    }
    Loaded in = load_inputs(case_path, meas_path, use_pmu);
    const Jacobian jac = build_jacobian(in.net, in.meas);

    nlohmann::json j;
    j["format"] = 1;
    std::vector<int> all_rows(jac.rows());
    for (int r = 0; r < jac.rows(); ++r) all_rows[r] = r;
    const int full_rank = rank_of_rows(jac.h, all_rows);
    j["states"] = jac.cols();
    j["rank"] = full_rank;
    j["observable"] = full_rank == jac.cols();
    if (!meter_ids.empty()) {
        std::vector<int> rows;
        for (const auto& id : meter_ids) {
            auto idx = in.meas.meter_index(id);
            if (!idx) throw ParseError("unknown meter " + id);
            rows.push_back(*idx);
        }
        j["meters"] = meter_ids;
        if (!targets.empty()) {
            j["targets"] = targets;
            j["protected"] = is_protected(jac, rows, targets);
            nlohmann::json attacks = nlohmann::json::object();
            for (BusId t : targets)
                attacks[std::to_string(t)] = synthesize_attack(jac, rows, t).has_value();
            j["attack_exists"] = attacks;
        }
    }
    emit(j.dump(2), out_path);
    return kExitOk;
}

struct ProtectArgs {
    std::string case_path, meas_path, out_path;
    std::string targets_csv;
    std::string method = "milp";
    int k = 5;
    std::uint64_t seed = 0;
    bool pmu = true;
    std::string incremental_path;
    std::string dump_lp_path;
    bool antiparallel_cut = true;
    bool force = false;
    long node_budget = 50'000'000;
    double time_budget = 900.0;
    bool verbose = false;
};

int cmd_protect(const ProtectArgs& args) {
    Loaded in = load_inputs(args.case_path, args.meas_path, args.pmu);
    const Jacobian jac = build_jacobian(in.net, in.meas);
    const MeasuredGraph mg(in.net, in.meas);
    const StateSet targets = parse_targets(args.targets_csv);
    for (BusId t : targets) {
        if (!in.net.has_bus(t)) throw ParseError("unknown target bus " + std::to_string(t));
        if (t == in.net.reference()) throw ParseError("target is the reference bus");
    }

    ProtectionPlan plan;
    bool budget_hit = false;
    if (args.method == "sve") {
        if (!args.incremental_path.empty())
            throw ParseError("incremental protection requires --method milp");
        SveOptions opt;
        opt.force = args.force;
        plan = solve_sve(jac, mg, targets, opt);
    } else if (args.method == "tph") {
        if (!args.incremental_path.empty())
            throw ParseError("incremental protection requires --method milp");
        TphOptions opt;
        opt.k = args.k;
        opt.seed = args.seed;
        if (args.verbose)
            opt.log = [](int round, int w, int tstar) {
                std::cerr << "tph round " << round << ": W=" << w << " |T*|=" << tstar << "\n";
            };
        plan = solve_tph(jac, mg, targets, opt);
    } else if (args.method == "milp") {
        MmsaOptions mo;
        mo.antiparallel_cut = args.antiparallel_cut;
        if (!args.incremental_path.empty()) {
            const LoadedPlan prior = plan_from_json(read_file(args.incremental_path));
            if (!prior.has_tree) throw ParseError("incremental prior plan has no tree");
            FixedTree ft;
            ft.root = prior.tree_root;
            ft.edges = prior.tree_edges;
            mo.fixed_tree = std::move(ft);
        }
        const MmsaInstance inst = build_instance(mg, targets, mo);
        if (!args.dump_lp_path.empty()) emit(dump_lp(inst), args.dump_lp_path);
        MilpLimits limits;
        limits.node_budget = args.node_budget;
        limits.time_budget_s = args.time_budget;
        const MilpSolution sol = solve_exact(inst, limits);
        if (!sol.feasible) {
            std::cerr << "budget exhausted before any feasible solution\n";
            return kExitBudget;
        }
        budget_hit = !sol.optimal;
        plan = extract_plan(inst, sol, jac);
    } else {
        throw ParseError("unknown method " + args.method);
    }

    plan.pmu_augmented = in.pmu_applied;
    plan.verification = verify_protection(jac, in.meas, plan.meter_ids, targets);
    emit(plan_to_json(plan, mg), args.out_path);
    if (!plan.verification.verified()) {
        std::cerr << "verification FAILED: emitted plan does not protect the targets\n";
        return kExitVerification;
    }
    return budget_hit ? kExitBudget : kExitOk;
}

int cmd_attack(const std::string& case_path, const std::string& meas_path,
               const std::string& plan_path, const std::string& meters_csv, BusId target,
               std::uint64_t seed, const std::string& out_path, bool use_pmu) {
    std::vector<std::string> meter_ids;
    if (!plan_path.empty()) {
        const LoadedPlan plan = plan_from_json(read_file(plan_path));
        meter_ids = plan.meter_ids;
        if (plan.pmu_augmented) use_pmu = true;
    } else if (!meters_csv.empty()) {
        meter_ids = parse_ids(meters_csv);
    }
    Loaded in = load_inputs(case_path, meas_path, use_pmu);
    const Jacobian jac = build_jacobian(in.net, in.meas);
    std::vector<int> rows;
    for (const auto& id : meter_ids) {
        auto idx = in.meas.meter_index(id);
        if (!idx) throw ParseError("unknown meter " + id);
        rows.push_back(*idx);
    }
    const auto attack = synthesize_attack(jac, rows, target);
    if (!attack) {
        emit("none", out_path);
        return kExitOk;
    }
    // Residual demonstration on a noisy synthetic operating point.
    std::optional<BddResult> demo;
    try {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.01);
        std::uniform_real_distribution<double> angle(-0.5, 0.5);
        std::vector<double> theta(jac.cols());
        for (double& t : theta) t = angle(rng);
        std::vector<double> z = jac.h.mul(theta);
        for (double& v : z) v += noise(rng);
        std::vector<double> a(jac.rows());
        for (int r = 0; r < jac.rows(); ++r) a[r] = attack->a.at(jac.row_ids[r]);
        demo = bdd_residual_check(jac, z, a);
    } catch (const std::exception& e) {
        std::cerr << "warning: residual demo skipped: " << e.what() << "\n";
    }
    emit(attack_to_json(*attack, target, demo), out_path);
    return kExitOk;
}

int cmd_tree(const std::string& case_path, const std::string& meas_path,
             const std::string& meters_csv, const std::string& backend,
             const std::string& out_path, bool use_pmu) {
    Loaded in = load_inputs(case_path, meas_path, use_pmu);
    const MeasuredGraph mg(in.net, in.meas);
    std::vector<int> meters;
    for (const auto& id : parse_ids(meters_csv)) {
        auto idx = in.meas.meter_index(id);
        if (!idx) throw ParseError("unknown meter " + id);
        meters.push_back(*idx);
    }
    const TreeBackend tb = backend == "maxflow" ? TreeBackend::MaxFlow : TreeBackend::MatroidIntersection;
    auto tree = construct_feasible_tree(mg, meters, in.net.reference(), tb);
    if (!tree) {
        std::cerr << "no feasible measured tree for the given meters\n";
        return kExitVerification;
    }
    emit(tree_to_json(*tree, mg), out_path);
    return kExitOk;
}

struct BenchArgs {
    std::string case_path, meas_path, out_path;
    std::string sizes_csv = "1,2,4";
    int trials = 20;
    std::string methods_csv = "sve,milp";
    std::string k_csv = "5";
    std::uint64_t seed = 0;
    bool pmu = true;
};

int cmd_bench(const BenchArgs& args) {
    Loaded in = load_inputs(args.case_path, args.meas_path, args.pmu);
    const Jacobian jac = build_jacobian(in.net, in.meas);
    const MeasuredGraph mg(in.net, in.meas);
    const std::vector<BusId> sizes = parse_targets(args.sizes_csv);
    const std::vector<std::string> methods = parse_ids(args.methods_csv);
    const std::vector<BusId> kvals = parse_targets(args.k_csv);

    std::ostringstream csv;
    csv << "case,size,trial,seed,method,k,p_size,optimal,nodes,vertices_examined,wall_ms\n";
    long hits = 0, comparisons = 0;
    for (BusId size : sizes) {
        for (int trial = 0; trial < args.trials; ++trial) {
            // Deterministic per-cell target draw.
            std::mt19937_64 rng(args.seed * 1000003ULL + static_cast<std::uint64_t>(size) * 1009ULL +
                                static_cast<std::uint64_t>(trial));
            std::vector<BusId> pool = jac.col_buses;
            for (size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng() % i]);
            if (static_cast<size_t>(size) > pool.size()) continue;
            StateSet d(pool.begin(), pool.begin() + size);
            std::sort(d.begin(), d.end());

            std::optional<int> sve_size, milp_size;
            for (const std::string& method : methods) {
                std::vector<int> ks = method == "tph" ? kvals : std::vector<BusId>{0};
                for (int k : ks) {
                    ProtectionPlan plan;
                    try {
                        if (method == "sve")
                            plan = solve_sve(jac, mg, d);
                        else if (method == "milp") {
                            const MmsaInstance inst = build_instance(mg, d);
                            MilpLimits lim;
                            lim.compute_root_lp = false;
                            plan = extract_plan(inst, solve_exact(inst, lim), jac);
                        } else if (method == "tph") {
                            TphOptions opt;
                            opt.k = k;
                            opt.seed = rng();
                            plan = solve_tph(jac, mg, d, opt);
                        } else {
                            throw ParseError("unknown method " + method);
                        }
                    } catch (const InfeasibleError& e) {
                        std::cerr << "size " << size << " trial " << trial << ": " << e.what() << "\n";
                        continue;
                    }
                    if (method == "sve") sve_size = plan.meter_count();
                    if (method == "milp") milp_size = plan.meter_count();
                    csv << args.case_path << "," << size << "," << trial << "," << args.seed << ","
                        << method << "," << (method == "tph" ? k : 0) << "," << plan.meter_count()
                        << "," << (plan.stats.optimal ? 1 : 0) << "," << plan.stats.nodes << ","
                        << plan.stats.vertices_examined << "," << plan.stats.wall_ms << "\n";
                }
            }
            if (sve_size && milp_size) {
                ++comparisons;
                if (*sve_size == *milp_size) ++hits;
            }
        }
    }
    emit(csv.str(), args.out_path);
    if (comparisons > 0)
        std::cerr << "milp/sve hit ratio: " << hits << "/" << comparisons << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimum meter protection against undetectable false-data injection"};
    app.require_subcommand(1);

    std::string case_path, meas_path, out_path, format = "csv";
    bool no_pmu = false, pmu_flag = false;

    auto add_common = [&](CLI::App* sub, bool with_format = false) {
        sub->add_option("--case", case_path, "case file (JSON)")->required();
        sub->add_option("--meas", meas_path, "measurement file (JSON)")->required();
        sub->add_option("--out", out_path, "output path (default stdout)");
        sub->add_flag("--pmu", pmu_flag, "apply the PMU pseudo-edge transformation (default when PMUs present)");
        sub->add_flag("--no-pmu", no_pmu, "ignore PMUs in the measurement file");
        if (with_format) sub->add_option("--format", format, "output format: csv|json");
    };

    auto* jac_cmd = app.add_subcommand("jacobian", "print the DC measurement Jacobian");
    add_common(jac_cmd, true);

    std::string meters_csv, plan_path, targets_csv;
    auto* check_cmd = app.add_subcommand("check", "observability and protection checks");
    add_common(check_cmd);
    check_cmd->add_option("--meters", meters_csv, "comma-separated meter ids");
    check_cmd->add_option("--plan", plan_path, "protection plan JSON");
    check_cmd->add_option("-D,--targets", targets_csv, "comma-separated target buses");

    ProtectArgs pargs;
    auto* protect_cmd = app.add_subcommand("protect", "compute a minimum protected meter set");
    add_common(protect_cmd);
    protect_cmd->add_option("-D,--targets", pargs.targets_csv, "comma-separated target buses")->required();
    protect_cmd->add_option("--method", pargs.method, "sve|milp|tph");
    protect_cmd->add_option("--k", pargs.k, "TPH tree count per round");
    protect_cmd->add_option("--seed", pargs.seed, "random seed");
    protect_cmd->add_option("--incremental", pargs.incremental_path, "prior plan JSON whose tree is kept fixed");
    protect_cmd->add_option("--dump-lp", pargs.dump_lp_path, "write the MILP instance in LP format");
    protect_cmd->add_option("--node-budget", pargs.node_budget, "branch-and-bound node budget");
    protect_cmd->add_option("--time-budget", pargs.time_budget, "solver time budget in seconds");
    bool no_cut = false;
    protect_cmd->add_flag("--no-antiparallel-cut", no_cut, "drop the auxiliary x_ij + x_ji <= 1 cut");
    protect_cmd->add_flag("--force", pargs.force, "override the SVE enumeration size guard");
    protect_cmd->add_flag("-v,--verbose", pargs.verbose, "per-round TPH progress on stderr");

    BusId attack_target = 0;
    std::uint64_t attack_seed = 0;
    auto* attack_cmd = app.add_subcommand("attack", "synthesize an undetectable attack or prove none exists");
    add_common(attack_cmd);
    attack_cmd->add_option("--protected", plan_path, "plan JSON with the protected meters");
    attack_cmd->add_option("--meters", meters_csv, "comma-separated protected meter ids");
    attack_cmd->add_option("--target", attack_target, "state variable to compromise")->required();
    attack_cmd->add_option("--seed", attack_seed, "seed for the residual demonstration");

    BenchArgs bargs;
    auto* bench_cmd = app.add_subcommand("bench", "randomized method comparison table");
    add_common(bench_cmd);
    bench_cmd->add_option("--sizes", bargs.sizes_csv, "comma-separated |D| values");
    bench_cmd->add_option("--trials", bargs.trials, "trials per size");
    bench_cmd->add_option("--methods", bargs.methods_csv, "comma-separated methods");
    bench_cmd->add_option("--k", bargs.k_csv, "comma-separated TPH K values");
    bench_cmd->add_option("--seed", bargs.seed, "master seed");

    std::string tree_backend = "matroid";
    auto* tree_cmd = app.add_subcommand("tree", "feasible measured tree for a basic measurement set");
    add_common(tree_cmd);
    tree_cmd->add_option("--meters", meters_csv, "comma-separated meter ids")->required();
    tree_cmd->add_option("--backend", tree_backend, "matroid|maxflow");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    const bool use_pmu = !no_pmu;
    try {
        if (app.got_subcommand(jac_cmd))
            return cmd_jacobian(case_path, meas_path, format, out_path, use_pmu);
        if (app.got_subcommand(check_cmd))
            return cmd_check(case_path, meas_path, meters_csv, plan_path, targets_csv, out_path, use_pmu);
        if (app.got_subcommand(protect_cmd)) {
            pargs.case_path = case_path;
            pargs.meas_path = meas_path;
            pargs.out_path = out_path;
            pargs.pmu = use_pmu;
            pargs.antiparallel_cut = !no_cut;
            return cmd_protect(pargs);
        }
        if (app.got_subcommand(attack_cmd))
            return cmd_attack(case_path, meas_path, plan_path, meters_csv, attack_target,
                              attack_seed, out_path, use_pmu);
        if (app.got_subcommand(bench_cmd)) {
            bargs.case_path = case_path;
            bargs.meas_path = meas_path;
            bargs.out_path = out_path;
            bargs.pmu = use_pmu;
            return cmd_bench(bargs);
        }
        if (app.got_subcommand(tree_cmd))
            return cmd_tree(case_path, meas_path, meters_csv, tree_backend, out_path, use_pmu);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitInput;
}
