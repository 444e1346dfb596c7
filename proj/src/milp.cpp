#include "gridsec/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "gridsec/observability.hpp"
#include "gridsec/tph.hpp"

namespace gridsec {

MmsaInstance build_instance(const MeasuredGraph& mg, const StateSet& d, MmsaOptions opt) {
    const PowerNetwork& net = mg.network();
    MmsaInstance inst;
    inst.mg = &mg;
    inst.jac = build_jacobian(net, mg.placement());
    inst.root = net.reference();
    inst.antiparallel_cut = opt.antiparallel_cut;
    for (BusId b : d) {
        if (b == inst.root) throw std::runtime_error("target set contains the reference bus");
        if (!net.has_bus(b)) throw std::runtime_error("target set contains unknown bus " + std::to_string(b));
    }
    inst.d = d;
    std::sort(inst.d.begin(), inst.d.end());
    inst.d.erase(std::unique(inst.d.begin(), inst.d.end()), inst.d.end());

    inst.num_edges = static_cast<int>(net.branches().size());
    inst.arc_tail.resize(inst.num_arcs());
    inst.arc_head.resize(inst.num_arcs());
    inst.edge_has_flow.resize(inst.num_edges);
    inst.edge_pseudo.resize(inst.num_edges);
    for (int e = 0; e < inst.num_edges; ++e) {
        const Branch& br = net.branches()[e];
        inst.arc_tail[2 * e] = br.from;
        inst.arc_head[2 * e] = br.to;
        inst.arc_tail[2 * e + 1] = br.to;
        inst.arc_head[2 * e + 1] = br.from;
        inst.edge_has_flow[e] = mg.preferred_flow_meter(e).has_value();
        inst.edge_pseudo[e] = br.pseudo;
        if (br.pseudo) continue;  // injection meters never map to pseudo lines
        for (BusId endpoint : {br.from, br.to}) {
            if (auto inj = mg.placement().injection_at(endpoint))
                inst.zvars.push_back({e, endpoint, *inj});
        }
    }
    inst.w = inst.num_arcs() + mg.placement().meter_count() + static_cast<int>(inst.d.size()) + 1;

    if (opt.fixed_tree) {
        const FixedTree& ft = *opt.fixed_tree;
        if (ft.root != inst.root)
            throw std::runtime_error("fixed tree root differs from the reference bus");
        // Orient the fixed edges away from the root.
        std::map<BusId, std::vector<std::pair<int, int>>> adj;  // vertex -> (edge, meter)
        std::vector<std::pair<int, int>> resolved;              // (edge, meter idx)
        for (const auto& [branch_id, meter_id] : ft.edges) {
            auto e = net.branch_index(branch_id);
            if (!e) throw std::runtime_error("fixed tree references unknown branch " + branch_id);
            auto m = mg.placement().meter_index(meter_id);
            if (!m) throw std::runtime_error("fixed tree references unknown meter " + meter_id);
            const auto& measurable = mg.meters_measuring_edge(*e);
            if (std::find(measurable.begin(), measurable.end(), *m) == measurable.end())
                throw std::runtime_error("fixed tree maps " + branch_id + " to a meter that does not measure it");
            adj[net.branches()[*e].from].push_back({*e, *m});
            adj[net.branches()[*e].to].push_back({*e, *m});
            resolved.push_back({*e, *m});
        }
        std::set<int> placed;
        std::deque<BusId> queue{inst.root};
        std::set<BusId> seen{inst.root};
        while (!queue.empty()) {
            const BusId v = queue.front();
            queue.pop_front();
            for (const auto& [e, m] : adj[v]) {
                if (placed.count(e)) continue;
                placed.insert(e);
                const Branch& br = net.branches()[e];
                const BusId other = br.from == v ? br.to : br.from;
                if (seen.count(other))
                    throw std::runtime_error("fixed tree contains a cycle");
                seen.insert(other);
                inst.fixed_arcs_one.push_back(br.from == v ? 2 * e : 2 * e + 1);
                queue.push_back(other);
                if (mg.placement().meter(m).kind == MeterKind::Injection) {
                    bool found = false;
                    for (size_t z = 0; z < inst.zvars.size(); ++z) {
                        if (inst.zvars[z].edge == e && inst.zvars[z].meter == m) {
                            inst.fixed_z_one.push_back(static_cast<int>(z));
                            found = true;
                            break;
                        }
                    }
                    if (!found)
                        throw std::runtime_error("fixed tree maps an injection onto a pseudo edge");
                }
            }
        }
        if (placed.size() != resolved.size())
            throw std::runtime_error("fixed tree is not connected to the reference bus");
        std::set<int> used;
        for (int z : inst.fixed_z_one)
            if (!used.insert(inst.zvars[z].meter).second)
                throw std::runtime_error("fixed tree uses one injection meter twice");
    }
    return inst;
}

// ---------------------------------------------------------------------------
// Paper formulation as an LP (binaries relaxed); also the dump target.
// ---------------------------------------------------------------------------

LinearProgram instance_lp(const MmsaInstance& inst) {
    const PowerNetwork& net = inst.mg->network();
    LinearProgram lp;
    const int A = inst.num_arcs();
    std::vector<int> xv(A), yv(A);
    auto arc_name = [&](int a) {
        return std::to_string(inst.arc_tail[a]) + "_" + std::to_string(inst.arc_head[a]);
    };
    for (int a = 0; a < A; ++a) xv[a] = lp.add_var("x_" + arc_name(a), 1.0);
    for (int a = 0; a < A; ++a) yv[a] = lp.add_var("y_" + arc_name(a), 0.0);
    std::vector<int> zv(inst.zvars.size());
    for (size_t z = 0; z < inst.zvars.size(); ++z) {
        const auto& v = inst.zvars[z];
        zv[z] = lp.add_var("z_" + std::to_string(v.bus) + "_e" + std::to_string(v.edge),
                           1.0 / inst.w);
    }

    // (13b)  y_ij <= w x_ij
    for (int a = 0; a < A; ++a)
        lp.add_row({{{yv[a], 1.0}, {xv[a], -inst.w}}, LinearProgram::LE, 0.0, "cap_" + arc_name(a)});
    // (13c)  x_ij <= 1_E + z_ij + z_ji
    for (int a = 0; a < A; ++a) {
        LinearProgram::Row row;
        row.coef.push_back({xv[a], 1.0});
        const int e = inst.arc_edge(a);
        for (size_t z = 0; z < inst.zvars.size(); ++z)
            if (inst.zvars[z].edge == e) row.coef.push_back({zv[z], -1.0});
        row.sense = LinearProgram::LE;
        row.rhs = inst.edge_has_flow[e] ? 1.0 : 0.0;
        row.name = "meter_" + arc_name(a);
        lp.add_row(std::move(row));
    }
    // (13d)  sum_j z_ij <= 1_V(i)
    {
        std::map<BusId, std::vector<int>> by_bus;
        for (size_t z = 0; z < inst.zvars.size(); ++z) by_bus[inst.zvars[z].bus].push_back(zv[z]);
        for (const auto& [bus, vars] : by_bus) {
            LinearProgram::Row row;
            for (int v : vars) row.coef.push_back({v, 1.0});
            row.sense = LinearProgram::LE;
            row.rhs = 1.0;
            row.name = "inj_once_" + std::to_string(bus);
            lp.add_row(std::move(row));
        }
    }
    // (13e) flow conservation with z-coupled demand, for every non-reference vertex
    for (BusId j : net.buses()) {
        if (j == net.reference()) continue;
        LinearProgram::Row row;
        for (int a = 0; a < A; ++a) {
            if (inst.arc_head[a] == j) row.coef.push_back({yv[a], 1.0});
            if (inst.arc_tail[a] == j) row.coef.push_back({yv[a], -1.0});
        }
        // own injection use and neighbours' injection use produce pseudo demand
        std::set<BusId> neighbors;
        for (int bi : net.incident(j)) {
            const Branch& br = net.branches()[bi];
            if (br.pseudo) continue;
            neighbors.insert(br.from == j ? br.to : br.from);
        }
        for (size_t z = 0; z < inst.zvars.size(); ++z) {
            if (inst.zvars[z].bus == j || neighbors.count(inst.zvars[z].bus))
                row.coef.push_back({zv[z], -1.0});
        }
        row.sense = LinearProgram::EQ;
        row.rhs = std::binary_search(inst.d.begin(), inst.d.end(), j) ? 1.0 : 0.0;
        row.name = "flow_" + std::to_string(j);
        lp.add_row(std::move(row));
    }
    // upper bounds on binaries
    for (int a = 0; a < A; ++a)
        lp.add_row({{{xv[a], 1.0}}, LinearProgram::LE, 1.0, "ub_x_" + arc_name(a)});
    for (size_t z = 0; z < inst.zvars.size(); ++z)
        lp.add_row({{{zv[z], 1.0}}, LinearProgram::LE, 1.0, "ub_" + lp.var_names[zv[z]]});
    // auxiliary anti-parallel cut
    if (inst.antiparallel_cut)
        for (int e = 0; e < inst.num_edges; ++e)
            lp.add_row({{{xv[2 * e], 1.0}, {xv[2 * e + 1], 1.0}},
                        LinearProgram::LE,
                        1.0,
                        "antipar_e" + std::to_string(e)});
    // fixed assignments (incremental / PMU modes)
    for (int a : inst.fixed_arcs_one)
        lp.add_row({{{xv[a], 1.0}}, LinearProgram::GE, 1.0, "fix_" + arc_name(a)});
    for (int z : inst.fixed_z_one)
        lp.add_row({{{zv[z], 1.0}}, LinearProgram::GE, 1.0, "fix_" + lp.var_names[zv[z]]});
    return lp;
}

std::string dump_lp(const MmsaInstance& inst) {
    LinearProgram lp = instance_lp(inst);
    std::vector<int> binaries;
    for (int a = 0; a < inst.num_arcs(); ++a) binaries.push_back(a);
    for (size_t z = 0; z < inst.zvars.size(); ++z)
        binaries.push_back(2 * inst.num_arcs() + static_cast<int>(z));
    return write_lp_format(lp, binaries);
}

// ---------------------------------------------------------------------------
// Exact branch and bound.
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class BranchAndBound {
public:
    BranchAndBound(const MmsaInstance& inst, const MilpLimits& limits)
        : inst_(inst), limits_(limits), net_(inst.mg->network()) {
        V_ = net_.bus_count();
        root_ = net_.bus_index(inst.root);
        const int A = inst.num_arcs();
        tail_.resize(A);
        head_.resize(A);
        for (int a = 0; a < A; ++a) {
            tail_[a] = net_.bus_index(inst.arc_tail[a]);
            head_[a] = net_.bus_index(inst.arc_head[a]);
        }
        // Injection availability after incremental fixing.
        inj_consumed_.assign(inst.mg->placement().meter_count(), 0);
        fixed_assignment_.clear();
        for (int z : inst.fixed_z_one) {
            const auto& v = inst.zvars[z];
            if (inj_consumed_[v.meter])
                throw std::runtime_error("fixed tree uses one injection meter twice");
            inj_consumed_[v.meter] = 1;
            fixed_assignment_[v.edge] = v.meter;
        }
        // Edge usability: a meter must be able to cover the edge.
        edge_usable_.assign(inst.num_edges, 0);
        edge_injections_.assign(inst.num_edges, {});
        for (const auto& zv : inst.zvars) edge_injections_[zv.edge].push_back(zv.meter);
        for (int e = 0; e < inst.num_edges; ++e) {
            bool usable = inst.edge_has_flow[e] || fixed_assignment_.count(e);
            for (int m : edge_injections_[e])
                if (!inj_consumed_[m]) usable = true;
            edge_usable_[e] = usable;
        }
        out_arcs_.assign(V_, {});
        in_arcs_.assign(V_, {});
        for (int a = 0; a < A; ++a) {
            if (!edge_usable_[inst.arc_edge(a)]) continue;
            out_arcs_[tail_[a]].push_back(a);
            in_arcs_[head_[a]].push_back(a);
        }
        // Terminals: targets plus everything measured by fixed injections.
        terminal_.assign(V_, 0);
        for (BusId b : inst.d) terminal_[net_.bus_index(b)] = 1;
        for (int z : inst.fixed_z_one)
            for (BusId b : inst.mg->measured_vertices(inst.zvars[z].meter))
                terminal_[net_.bus_index(b)] = 1;
        terminals_.clear();
        for (int v = 0; v < V_; ++v)
            if (terminal_[v]) terminals_.push_back(v);

        state_.assign(A, Free);
        in_tree_.assign(V_, 0);
        in_tree_[root_] = 1;
        tree_vertices_ = {root_};
        // No arborescence has an arc into the root.
        for (int a : in_arcs_[root_])
            if (state_[a] == Free) state_[a] = Zero;
        // Fixed arcs are ordered root-outward by build_instance.
        for (int a : inst.fixed_arcs_one) {
            if (!edge_usable_[inst.arc_edge(a)])
                throw std::runtime_error("fixed tree uses an unusable edge");
            if (!in_tree_[tail_[a]] || in_tree_[head_[a]])
                throw std::runtime_error("fixed tree is not an arborescence rooted at the reference");
            apply_fix_one(a);
        }
    }

    MilpSolution run() {
        const auto t0 = std::chrono::steady_clock::now();
        start_ = t0;
        search();
        MilpSolution sol = best_;
        sol.nodes = nodes_;
        sol.root_dual = root_dual_;
        sol.optimal = !aborted_;  // search ran to completion
        sol.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    }

private:
    enum ArcState : signed char { Free = 0, One = 1, Zero = 2 };

    struct Trail {
        std::vector<int> zeroed;
        int arc_one = -1;
    };

    void apply_fix_one(int a) {
        state_[a] = One;
        one_arcs_.push_back(a);
        const int h = head_[a];
        in_tree_[h] = 1;
        tree_vertices_.push_back(h);
        for (int b : in_arcs_[h])
            if (state_[b] == Free) state_[b] = Zero;
    }

    Trail fix_one(int a) {
        Trail t;
        t.arc_one = a;
        const int h = head_[a];
        for (int b : in_arcs_[h])
            if (state_[b] == Free && b != a) {
                state_[b] = Zero;
                t.zeroed.push_back(b);
            }
        state_[a] = One;
        one_arcs_.push_back(a);
        in_tree_[h] = 1;
        tree_vertices_.push_back(h);
        return t;
    }

    void undo(const Trail& t) {
        if (t.arc_one >= 0) {
            state_[t.arc_one] = Free;
            one_arcs_.pop_back();
            in_tree_[tree_vertices_.back()] = 0;
            tree_vertices_.pop_back();
        }
        for (int b : t.zeroed) state_[b] = Free;
    }

    // Forward reachability from the root over non-zero arcs.
    bool reachable_ok() {
        reach_.assign(V_, 0);
        std::deque<int> q{root_};
        reach_[root_] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (int a : out_arcs_[v]) {
                if (state_[a] == Zero) continue;
                if (!reach_[head_[a]]) {
                    reach_[head_[a]] = 1;
                    q.push_back(head_[a]);
                }
            }
        }
        for (int t : terminals_)
            if (!reach_[t]) return false;
        return true;
    }

    // Reverse reachability through zero-residual arcs; returns the vertex set
    // that can reach t, or an empty flag vector if the root was entered.
    void zero_component(int t, std::vector<char>& w) const {
        std::fill(w.begin(), w.end(), 0);
        std::deque<int> q{t};
        w[t] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (int a : in_arcs_[v])
                if (red_[a] == 0 && !w[tail_[a]]) {
                    w[tail_[a]] = 1;
                    q.push_back(tail_[a]);
                }
        }
    }

    // Wong-style dual ascent on the directed-cut relaxation: every terminal
    // must be reachable from the root; free arcs cost one, tree arcs zero.
    // Active terminals are served round-robin, smallest cut component first,
    // which spreads the raises and tightens the bound considerably compared
    // with saturating one terminal at a time.
    long dual_ascent() {
        red_.assign(state_.size(), -1);
        for (size_t a = 0; a < state_.size(); ++a) {
            if (state_[a] == Zero || !edge_usable_[inst_.arc_edge(static_cast<int>(a))]) continue;
            red_[a] = state_[a] == One ? 0 : 1;
        }
        long lb = 0;
        std::vector<char> w(V_);
        std::vector<int> active = terminals_;
        while (!active.empty()) {
            // Smallest zero-component first; drop satisfied terminals.
            int pick = -1;
            int pick_size = V_ + 1;
            std::vector<int> still;
            for (int t : active) {
                zero_component(t, w);
                if (w[root_]) continue;
                still.push_back(t);
                int size = 0;
                for (char f : w) size += f;
                if (size < pick_size) {
                    pick_size = size;
                    pick = t;
                }
            }
            active = std::move(still);
            if (pick < 0) break;
            zero_component(pick, w);
            long delta = -1;
            for (size_t a = 0; a < red_.size(); ++a)
                if (red_[a] > 0 && w[head_[a]] && !w[tail_[a]])
                    if (delta < 0 || red_[a] < delta) delta = red_[a];
            if (delta < 0) return std::numeric_limits<long>::max() / 4;  // unreachable
            for (size_t a = 0; a < red_.size(); ++a)
                if (red_[a] > 0 && w[head_[a]] && !w[tail_[a]]) red_[a] -= delta;
            lb += delta;
        }
        return lb;
    }

    // Meter assignment for the current tree. Mode "optimistic" admits
    // injections whose missing coverage is still reachable.
    bool try_assignment(bool optimistic, double* obj_out,
                        std::vector<std::pair<int, int>>* edge_meters_out,
                        std::vector<int>* deficit_out) {
        std::vector<int> need;
        std::vector<std::pair<int, int>> assigned;
        for (int a : one_arcs_) {
            const int e = inst_.arc_edge(a);
            if (auto it = fixed_assignment_.find(e); it != fixed_assignment_.end()) {
                assigned.push_back({e, it->second});
            } else if (inst_.edge_has_flow[e]) {
                assigned.push_back({e, *inst_.mg->preferred_flow_meter(e)});
            } else {
                need.push_back(e);
            }
        }
        // Candidate injections per needing edge.
        std::vector<std::vector<int>> cand(need.size());
        if (deficit_out) deficit_out->clear();
        for (size_t i = 0; i < need.size(); ++i) {
            for (int m : edge_injections_[need[i]]) {
                if (inj_consumed_[m]) continue;
                bool valid = true;
                bool optimistically_valid = true;
                for (BusId b : inst_.mg->measured_vertices(m)) {
                    const int bv = net_.bus_index(b);
                    if (!in_tree_[bv]) {
                        valid = false;
                        if (!reach_[bv]) optimistically_valid = false;
                    }
                }
                if (valid || (optimistic && optimistically_valid)) cand[i].push_back(m);
                if (!valid && optimistically_valid && deficit_out) {
                    for (BusId b : inst_.mg->measured_vertices(m))
                        if (!in_tree_[net_.bus_index(b)]) deficit_out->push_back(net_.bus_index(b));
                }
            }
        }
        // Kuhn matching, meters keyed by meter index.
        std::map<int, int> meter_match;  // meter -> edge position
        std::vector<int> edge_match(need.size(), -1);
        std::function<bool(size_t, std::set<int>&)> augment = [&](size_t i, std::set<int>& vis) {
            for (int m : cand[i]) {
                if (vis.count(m)) continue;
                vis.insert(m);
                auto it = meter_match.find(m);
                if (it == meter_match.end() || augment(it->second, vis)) {
                    meter_match[m] = static_cast<int>(i);
                    edge_match[i] = m;
                    return true;
                }
            }
            return false;
        };
        for (size_t i = 0; i < need.size(); ++i) {
            std::set<int> vis;
            if (!augment(i, vis)) return false;
        }
        if (obj_out) {
            const int z_total = static_cast<int>(inst_.fixed_z_one.size() + need.size());
            *obj_out = static_cast<double>(one_arcs_.size()) + z_total / inst_.w;
        }
        if (edge_meters_out) {
            *edge_meters_out = assigned;
            for (size_t i = 0; i < need.size(); ++i) edge_meters_out->push_back({need[i], edge_match[i]});
        }
        return true;
    }

    int z_lower_bound() const {
        int z = static_cast<int>(inst_.fixed_z_one.size());
        for (int a : one_arcs_) {
            const int e = inst_.arc_edge(a);
            if (!inst_.edge_has_flow[e] && !fixed_assignment_.count(e)) ++z;
        }
        return z;
    }

    // First free usable arc on a shortest free-arc path from the tree to the
    // target vertex, or -1.
    int arc_toward(int target) {
        std::vector<int> parent_arc(V_, -1);
        std::vector<char> seen(V_, 0);
        std::deque<int> q;
        for (int v : tree_vertices_) {
            seen[v] = 1;
            q.push_back(v);
        }
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            if (v == target) break;
            for (int a : out_arcs_[v]) {
                if (state_[a] != Free || seen[head_[a]]) continue;
                seen[head_[a]] = 1;
                parent_arc[head_[a]] = a;
                q.push_back(head_[a]);
            }
        }
        if (!seen[target] || parent_arc[target] < 0) return -1;
        int a = parent_arc[target];
        while (!in_tree_[tail_[a]]) a = parent_arc[tail_[a]];
        return a;
    }

    int pick_branch_arc(const std::vector<int>& deficit) {
        for (int t : terminals_)
            if (!in_tree_[t]) {
                const int a = arc_toward(t);
                if (a >= 0) return a;
            }
        for (int dv : deficit) {
            if (in_tree_[dv]) continue;
            const int a = arc_toward(dv);
            if (a >= 0) return a;
        }
        for (int v : tree_vertices_)
            for (int a : out_arcs_[v])
                if (state_[a] == Free && !in_tree_[head_[a]]) return a;
        return -1;
    }

    void search() {
        if (aborted_) return;
        ++nodes_;
        if (nodes_ > limits_.node_budget) {
            aborted_ = true;
            return;
        }
        if ((nodes_ & 0xff) == 0) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
            if (s > limits_.time_budget_s) {
                aborted_ = true;
                return;
            }
        }
        if (!reachable_ok()) return;

        // Valid lower bound: committed arcs are zero-cost inside the dual
        // ascent, so it prices exactly the arcs still to be added.
        const long da = dual_ascent();
        if (nodes_ == 1) root_dual_ = da + static_cast<long>(one_arcs_.size());
        if (da >= std::numeric_limits<long>::max() / 8) return;
        const double bound =
            static_cast<double>(da) + static_cast<double>(one_arcs_.size()) + z_lower_bound() / inst_.w;
        if (bound >= best_obj_ - 0.5 / inst_.w) return;

        bool covered = true;
        for (int t : terminals_)
            if (!in_tree_[t]) {
                covered = false;
                break;
            }

        std::vector<int> deficit;
        if (covered) {
            double obj = 0.0;
            std::vector<std::pair<int, int>> ems;
            if (try_assignment(false, &obj, &ems, &deficit)) {
                if (obj < best_obj_ - 1e-12) {
                    best_obj_ = obj;
                    best_.feasible = true;
                    best_.objective = obj;
                    best_.arc_count = static_cast<int>(one_arcs_.size());
                    best_.injection_count = static_cast<int>(
                        std::count_if(ems.begin(), ems.end(), [&](const auto& em) {
                            return inst_.mg->placement().meter(em.second).kind == MeterKind::Injection;
                        }));
                    best_.arcs = one_arcs_;
                    best_.edge_meters = ems;
                }
                return;  // any superset is strictly worse
            }
            std::sort(deficit.begin(), deficit.end());
            deficit.erase(std::unique(deficit.begin(), deficit.end()), deficit.end());
            // A tree whose mapping cannot be repaired by growth is dead.
            if (!try_assignment(true, nullptr, nullptr, nullptr)) return;
            if (deficit.empty()) return;
        }

        const int a = pick_branch_arc(deficit);
        if (a < 0) return;

        Trail t = fix_one(a);
        search();
        undo(t);
        if (aborted_) return;

        state_[a] = Zero;
        search();
        state_[a] = Free;
    }

    const MmsaInstance& inst_;
    MilpLimits limits_;
    const PowerNetwork& net_;
    int V_ = 0;
    int root_ = 0;
    std::vector<int> tail_, head_;
    std::vector<std::vector<int>> out_arcs_, in_arcs_;
    std::vector<signed char> state_;
    std::vector<char> in_tree_;
    std::vector<int> tree_vertices_;
    std::vector<int> one_arcs_;
    std::vector<char> edge_usable_;
    std::vector<std::vector<int>> edge_injections_;
    std::vector<char> inj_consumed_;
    std::map<int, int> fixed_assignment_;  // edge -> injection meter (incremental)
    std::vector<char> terminal_;
    std::vector<int> terminals_;
    std::vector<char> reach_;
    std::vector<long> red_;

    double best_obj_ = kInf;
    long root_dual_ = 0;
    MilpSolution best_;
    long nodes_ = 0;
    bool aborted_ = false;
    std::chrono::steady_clock::time_point start_;
};

// Coverage-aware directed-flow relaxation, solved at the root when the dual
// ascent leaves a gap. One unit commodity per target capped by the arc
// variables gives directed-cut strength; activating an injection on an edge
// forces at least one selected in-arc at every vertex it measures, which
// prices the pseudo demand the plain Steiner relaxation cannot see. Valid
// lower bound on the arc count of any feasible solution.
long coverage_flow_floor(const MmsaInstance& inst, const std::vector<char>& edge_alive,
                         long iteration_limit = 400000) {
    const PowerNetwork& net = inst.mg->network();
    LinearProgram lp;
    const int A = inst.num_arcs();
    std::vector<int> xv(A, -1);
    for (int a = 0; a < A; ++a)
        if (edge_alive[inst.arc_edge(a)]) xv[a] = lp.add_var("x" + std::to_string(a), 1.0);
    std::map<std::pair<int, int>, int> zvar;  // (zvar idx in instance) -> lp var
    std::map<int, std::vector<int>> z_of_meter, z_of_edge;
    for (size_t z = 0; z < inst.zvars.size(); ++z) {
        const auto& v = inst.zvars[z];
        if (!edge_alive[v.edge]) continue;
        const int var = lp.add_var("z" + std::to_string(z), 0.0);
        zvar[{v.edge, v.meter}] = var;
        z_of_meter[v.meter].push_back(var);
        z_of_edge[v.edge].push_back(var);
    }
    for (BusId t : inst.d) {
        std::vector<int> yv(A, -1);
        for (int a = 0; a < A; ++a)
            if (xv[a] >= 0) {
                yv[a] = lp.add_var("y" + std::to_string(t) + "_" + std::to_string(a), 0.0);
                lp.add_row({{{yv[a], 1.0}, {xv[a], -1.0}}, LinearProgram::LE, 0.0, ""});
            }
        for (BusId j : net.buses()) {
            if (j == inst.root) continue;
            LinearProgram::Row row;
            for (int a = 0; a < A; ++a) {
                if (yv[a] < 0) continue;
                if (inst.arc_head[a] == j) row.coef.push_back({yv[a], 1.0});
                if (inst.arc_tail[a] == j) row.coef.push_back({yv[a], -1.0});
            }
            row.sense = LinearProgram::EQ;
            row.rhs = j == t ? 1.0 : 0.0;
            lp.add_row(std::move(row));
        }
    }
    for (int a = 0; a < A; ++a) {
        if (xv[a] < 0) continue;
        LinearProgram::Row row;
        row.coef.push_back({xv[a], 1.0});
        for (int zv : z_of_edge[inst.arc_edge(a)]) row.coef.push_back({zv, -1.0});
        row.sense = LinearProgram::LE;
        row.rhs = inst.edge_has_flow[inst.arc_edge(a)] ? 1.0 : 0.0;
        lp.add_row(std::move(row));
        lp.add_row({{{xv[a], 1.0}}, LinearProgram::LE, 1.0, ""});
        // Arborescence texture: a selected arc's tail carries its own in-arc
        // unless it is the root, and an edge is used in one direction only.
        if (inst.arc_tail[a] != inst.root) {
            LinearProgram::Row link;
            link.coef.push_back({xv[a], 1.0});
            for (int b = 0; b < A; ++b)
                if (xv[b] >= 0 && inst.arc_head[b] == inst.arc_tail[a])
                    link.coef.push_back({xv[b], -1.0});
            link.sense = LinearProgram::LE;
            link.rhs = 0.0;
            lp.add_row(std::move(link));
        }
        if ((a & 1) == 0 && xv[a ^ 1] >= 0)
            lp.add_row({{{xv[a], 1.0}, {xv[a ^ 1], 1.0}}, LinearProgram::LE, 1.0, ""});
    }
    if (!inst.d.empty()) {
        LinearProgram::Row out;
        for (int a = 0; a < A; ++a)
            if (xv[a] >= 0 && inst.arc_tail[a] == inst.root) out.coef.push_back({xv[a], 1.0});
        out.sense = LinearProgram::GE;
        out.rhs = 1.0;
        lp.add_row(std::move(out));
    }
    for (const auto& [meter, vars] : z_of_meter) {
        LinearProgram::Row once;
        for (int zv : vars) once.coef.push_back({zv, 1.0});
        once.sense = LinearProgram::LE;
        once.rhs = 1.0;
        lp.add_row(std::move(once));
        // Every vertex the injection measures needs a selected in-arc.
        for (BusId b : inst.mg->measured_vertices(meter)) {
            if (b == inst.root) continue;
            LinearProgram::Row row;
            for (int a = 0; a < A; ++a)
                if (xv[a] >= 0 && inst.arc_head[a] == b) row.coef.push_back({xv[a], 1.0});
            for (int zv : vars) row.coef.push_back({zv, -1.0});
            row.sense = LinearProgram::GE;
            row.rhs = 0.0;
            lp.add_row(std::move(row));
        }
    }
    const LpResult res = solve_lp(lp, iteration_limit);
    if (res.status != LpStatus::Optimal) return 0;
    return static_cast<long>(std::ceil(res.objective - 1e-6));
}

// ---------------------------------------------------------------------------
// Vertex dichotomy search for the common (non-incremental) case. The minimum
// arborescence has |V*| - 1 arcs, so the search decides vertex membership:
// committed vertices join the dual-ascent terminal set (which prices the
// pseudo demand of injection coverage), excluded vertices delete arcs and
// kill injections whose coverage they carry. Dual-ascent state is inherited
// down the tree (arc deletions and terminal additions both preserve dual
// feasibility), cut vertices on every residual root-terminal path are forced
// in, and leaves reduce to the same numeric observability test the
// enumeration solver uses.
// ---------------------------------------------------------------------------

class VertexSearch {
public:
    VertexSearch(const MmsaInstance& inst, const MilpLimits& limits)
        : inst_(inst), limits_(limits), net_(inst.mg->network()), mg_(*inst.mg) {
        V_ = net_.bus_count();
        root_ = net_.bus_index(inst.root);
        const int A = inst.num_arcs();
        tail_.resize(A);
        head_.resize(A);
        for (int a = 0; a < A; ++a) {
            tail_[a] = net_.bus_index(inst.arc_tail[a]);
            head_[a] = net_.bus_index(inst.arc_head[a]);
        }
        edge_injections_.assign(inst.num_edges, {});
        for (const auto& zv : inst.zvars) edge_injections_[zv.edge].push_back(zv.meter);
        vertex_edges_.assign(V_, {});
        for (int e = 0; e < inst.num_edges; ++e) {
            if (!inst.edge_has_flow[e] && edge_injections_[e].empty()) continue;
            vertex_edges_[net_.bus_index(inst.arc_tail[2 * e])].push_back(e);
            vertex_edges_[net_.bus_index(inst.arc_head[2 * e])].push_back(e);
        }
        for (int m = 0; m < mg_.placement().meter_count(); ++m) {
            coverage_.push_back({});
            if (mg_.placement().meter(m).kind != MeterKind::Injection) continue;
            for (BusId b : mg_.measured_vertices(m)) coverage_[m].push_back(net_.bus_index(b));
        }
        decision_.assign(V_, Undecided);
        decision_[root_] = In;
        for (BusId b : inst.d) decision_[net_.bus_index(b)] = In;
    }

    MilpSolution run() {
        start_ = std::chrono::steady_clock::now();
        warm_start();
        // When the incumbent leaves a real gap over the quick dual bound, a
        // coverage-aware flow relaxation often certifies it directly.
        if (best_.feasible && V_ >= 20) {
            refresh_alive();
            red_.assign(inst_.num_arcs(), 1);
            lb_ = 0;
            if (ascend() && best_.arc_count - lb_ >= 3)
                floor_ = coverage_flow_floor(inst_, edge_alive_);
        }
        if (!best_.feasible || best_.arc_count > floor_) search();
        MilpSolution sol = best_;
        sol.nodes = nodes_;
        sol.optimal = !aborted_;
        sol.root_dual = std::max(root_dual_, floor_);
        sol.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start_)
                          .count();
        return sol;
    }

private:
    enum Decision : signed char { Undecided = 0, In = 1, Out = 2 };

    // Seeds the incumbent with a tree-pruning run; a strong upper bound up
    // front is worth more than any node-order cleverness.
    void warm_start() {
        try {
            TphOptions opt;
            opt.k = 10;
            opt.seed = 0;
            const ProtectionPlan plan = solve_tph(inst_.jac, mg_, inst_.d, opt);
            if (!plan.tree) return;
            int injections = 0;
            for (const auto& em : plan.tree->edges)
                if (mg_.placement().meter(em.meter).kind == MeterKind::Injection) ++injections;
            accept(plan.tree->edges, injections);
        } catch (const std::exception&) {
            // Heuristic preconditions unmet (e.g. not fully observable); the
            // search provides its own incumbents.
        }
    }

    bool injection_alive(int m) const {
        for (int v : coverage_[m])
            if (decision_[v] == Out) return false;
        return true;
    }

    bool edge_alive(int e) const {
        const int u = tail_[2 * e], v = head_[2 * e];
        if (decision_[u] == Out || decision_[v] == Out) return false;
        if (inst_.edge_has_flow[e]) return true;
        for (int m : edge_injections_[e])
            if (injection_alive(m)) return true;
        return false;
    }

    void refresh_alive() {
        edge_alive_.assign(inst_.num_edges, 0);
        for (int e = 0; e < inst_.num_edges; ++e) edge_alive_[e] = edge_alive(e);
    }

    // Forward reachability from the root over alive edges.
    void refresh_reach() {
        reach_.assign(V_, 0);
        std::deque<int> q{root_};
        reach_[root_] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (int e : vertex_edges_[v]) {
                if (!edge_alive_[e]) continue;
                const int other = tail_[2 * e] == v ? head_[2 * e] : tail_[2 * e];
                if (!reach_[other]) {
                    reach_[other] = 1;
                    q.push_back(other);
                }
            }
        }
    }

    // Cut vertices whose removal separates the root from some In vertex must
    // themselves be in every solution of this node.
    bool force_articulations(std::vector<int>& forced) {
        std::vector<int> arts;
        for (int w = 0; w < V_; ++w) {
            if (decision_[w] != Undecided || !reach_[w]) continue;
            // Reachability without w.
            std::vector<char> r(V_, 0);
            std::deque<int> q{root_};
            r[root_] = 1;
            while (!q.empty()) {
                const int v = q.front();
                q.pop_front();
                for (int e : vertex_edges_[v]) {
                    if (!edge_alive_[e]) continue;
                    const int other = tail_[2 * e] == v ? head_[2 * e] : tail_[2 * e];
                    if (other == w || r[other]) continue;
                    r[other] = 1;
                    q.push_back(other);
                }
            }
            for (int t = 0; t < V_; ++t) {
                if (decision_[t] == In && !r[t]) {
                    arts.push_back(w);
                    break;
                }
            }
        }
        for (int w : arts) {
            decision_[w] = In;
            forced.push_back(w);
        }
        return !arts.empty();
    }

    // Fixpoint propagation: reachability, forced articulation vertices, and
    // single-option forcing. Returns false when the node dies.
    bool propagate(std::vector<int>& forced) {
        while (true) {
            refresh_alive();
            refresh_reach();
            for (int v = 0; v < V_; ++v)
                if (decision_[v] == In && !reach_[v]) return false;
            bool changed = force_articulations(forced);

            for (int v = 0; v < V_ && !changed; ++v) {
                if (decision_[v] != In || v == root_) continue;
                int alive_count = 0, only_edge = -1;
                for (int e : vertex_edges_[v])
                    if (edge_alive_[e]) {
                        ++alive_count;
                        only_edge = e;
                    }
                if (alive_count == 0) return false;
                if (alive_count == 1) {
                    // The sole edge is v's tree connection: its far endpoint
                    // is in every solution of this node.
                    const int e = only_edge;
                    const int other = tail_[2 * e] == v ? head_[2 * e] : tail_[2 * e];
                    if (decision_[other] == Undecided) {
                        decision_[other] = In;
                        forced.push_back(other);
                        changed = true;
                    }
                }
                // Vertices forced whichever incident edge and meter serve v:
                // intersect, over the alive edges, the intersection of the
                // coverages of the surviving meter options.
                std::vector<char> must(V_, 1);
                for (int e : vertex_edges_[v]) {
                    if (!edge_alive_[e]) continue;
                    std::vector<char> edge_forces(V_, 0);
                    if (!inst_.edge_has_flow[e]) {
                        bool first = true;
                        for (int m : edge_injections_[e]) {
                            if (!injection_alive(m)) continue;
                            if (first) {
                                for (int w : coverage_[m]) edge_forces[w] = 1;
                                first = false;
                            } else {
                                std::vector<char> keep(V_, 0);
                                for (int w : coverage_[m]) keep[w] = edge_forces[w];
                                edge_forces = std::move(keep);
                            }
                        }
                    }
                    for (int w = 0; w < V_; ++w) must[w] = must[w] && edge_forces[w];
                }
                for (int w = 0; w < V_; ++w) {
                    if (!must[w] || decision_[w] != Undecided) continue;
                    decision_[w] = In;
                    forced.push_back(w);
                    changed = true;
                }
            }
            if (!changed) return true;
        }
    }

    // ----- dual ascent -----------------------------------------------------
    // red_[a] in {0,1}; raises zero whole cuts. Rebuilt per node: a fresh
    // ascent for the node's own terminal set beats continuing the parent's
    // order-dependent raises.

    void zero_component(int t, std::vector<char>& w) const {
        std::fill(w.begin(), w.end(), 0);
        std::deque<int> q{t};
        w[t] = 1;
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (int e : vertex_edges_[v]) {
                if (!edge_alive_[e]) continue;
                for (int a : {2 * e, 2 * e + 1}) {
                    if (head_[a] != v || red_[a] != 0) continue;
                    if (!w[tail_[a]]) {
                        w[tail_[a]] = 1;
                        q.push_back(tail_[a]);
                    }
                }
            }
        }
    }

    // Continues the ascent from the current red_/lb_ state. Returns false
    // when some terminal is cut off entirely.
    bool ascend() {
        std::vector<char> w(V_);
        std::vector<int> active;
        for (int v = 0; v < V_; ++v)
            if (decision_[v] == In && v != root_) active.push_back(v);
        while (!active.empty()) {
            int pick = -1, pick_size = V_ + 1;
            std::vector<int> still;
            for (int t : active) {
                zero_component(t, w);
                if (w[root_]) continue;
                still.push_back(t);
                int size = 0;
                for (char f : w) size += f;
                if (size < pick_size) {
                    pick_size = size;
                    pick = t;
                }
            }
            active = std::move(still);
            if (pick < 0) break;
            zero_component(pick, w);
            bool any = false;
            for (int e = 0; e < inst_.num_edges; ++e) {
                if (!edge_alive_[e]) continue;
                for (int a : {2 * e, 2 * e + 1}) {
                    if (red_[a] == 1 && w[head_[a]] && !w[tail_[a]]) {
                        red_[a] = 0;
                        any = true;
                    }
                }
            }
            if (!any) return false;
            lb_ += 1;
        }
        return true;
    }

    // Lookahead used by branching: bound growth under either decision for v,
    // resumed from the node's own ascent state.
    long lookahead(int v, Decision dec) {
        if (decision_[v] != Undecided) return 0;
        const std::vector<long> red_backup = red_;
        const long lb_backup = lb_;
        decision_[v] = dec;
        if (dec == Out) refresh_alive();
        const bool ok = ascend();
        const long gain = ok ? lb_ - lb_backup : std::numeric_limits<long>::max() / 8;
        decision_[v] = Undecided;
        if (dec == Out) refresh_alive();
        red_ = red_backup;
        lb_ = lb_backup;
        return gain;
    }

    // ----- primal side -----------------------------------------------------

    // Numeric observability of a vertex set plus a meter mapping, built the
    // same way the enumeration solver builds one. Flow meters are preferred
    // so the secondary term stays small.
    std::optional<std::pair<std::vector<FeasibleMeasuredTree::EdgeMap>, int>> try_tree(
        const std::vector<char>& vset) {
        StateSet sbar;
        for (int v = 0; v < V_; ++v)
            if (vset[v] && v != root_) sbar.push_back(net_.buses()[v]);
        if (sbar.empty()) return std::make_pair(std::vector<FeasibleMeasuredTree::EdgeMap>{}, 0);
        std::vector<int> cand = meters_within(inst_.jac, sbar);
        std::stable_partition(cand.begin(), cand.end(), [&](int m) {
            return mg_.placement().meter(m).kind == MeterKind::Flow;
        });
        const std::vector<int> cols = state_columns(inst_.jac, sbar);
        std::vector<int> basic;
        {
            Matrix work(static_cast<int>(cols.size()), static_cast<int>(cols.size()));
            std::vector<int> pivots;
            double mx = 0;
            for (int r : cand)
                for (int c : cols) mx = std::max(mx, std::fabs(inst_.jac.h(r, c)));
            const double tol = 1e-9 * mx;
            for (int r : cand) {
                if (basic.size() == cols.size()) break;
                std::vector<double> row(cols.size());
                for (size_t j = 0; j < cols.size(); ++j) row[j] = inst_.jac.h(r, cols[j]);
                for (size_t k = 0; k < basic.size(); ++k) {
                    const double f = row[pivots[k]];
                    if (f == 0.0) continue;
                    for (size_t j = 0; j < cols.size(); ++j)
                        row[j] -= f * work(static_cast<int>(k), static_cast<int>(j));
                }
                int p = -1;
                double bestv = tol;
                for (size_t j = 0; j < cols.size(); ++j)
                    if (std::fabs(row[j]) > bestv) {
                        bestv = std::fabs(row[j]);
                        p = static_cast<int>(j);
                    }
                if (p < 0) continue;
                const double pv = row[p];
                for (double& x : row) x /= pv;
                for (size_t k = 0; k < basic.size(); ++k) {
                    const double f = work(static_cast<int>(k), p);
                    if (f == 0.0) continue;
                    for (size_t j = 0; j < cols.size(); ++j)
                        work(static_cast<int>(k), static_cast<int>(j)) -= f * row[j];
                }
                const int idx = static_cast<int>(basic.size());
                for (size_t j = 0; j < cols.size(); ++j) work(idx, static_cast<int>(j)) = row[j];
                basic.push_back(r);
                pivots.push_back(p);
            }
        }
        if (basic.size() != cols.size()) return std::nullopt;
        auto tree = construct_feasible_tree(mg_, basic, inst_.root);
        if (!tree) return std::nullopt;
        int injections = 0;
        for (const auto& em : tree->edges)
            if (mg_.placement().meter(em.meter).kind == MeterKind::Injection) ++injections;
        return std::make_pair(tree->edges, injections);
    }

    void accept(const std::vector<FeasibleMeasuredTree::EdgeMap>& edges, int injections) {
        const double obj = static_cast<double>(edges.size()) + injections / inst_.w;
        if (obj >= best_obj_ - 1e-12) return;
        best_obj_ = obj;
        best_.feasible = true;
        best_.objective = obj;
        best_.arc_count = static_cast<int>(edges.size());
        best_.injection_count = injections;
        best_.edge_meters.clear();
        for (const auto& em : edges) best_.edge_meters.push_back({em.branch, em.meter});
    }

    // Greedy primal: connect all In vertices, then close coverage until the
    // vertex set is observable. Returns the vertex set used, or nullopt.
    std::optional<std::vector<char>> greedy_vertex_set() {
        std::vector<char> vset(V_, 0);
        vset[root_] = 1;
        while (true) {
            std::vector<int> parent(V_, -1);
            std::vector<char> seen(V_, 0);
            std::deque<int> q;
            for (int v = 0; v < V_; ++v)
                if (vset[v]) {
                    seen[v] = 1;
                    q.push_back(v);
                }
            int found = -1;
            while (!q.empty() && found < 0) {
                const int v = q.front();
                q.pop_front();
                if (decision_[v] == In && !vset[v]) {
                    found = v;
                    break;
                }
                for (int e : vertex_edges_[v]) {
                    if (!edge_alive_[e]) continue;
                    const int other = tail_[2 * e] == v ? head_[2 * e] : tail_[2 * e];
                    if (seen[other]) continue;
                    seen[other] = 1;
                    parent[other] = v;
                    q.push_back(other);
                }
            }
            if (found < 0) {
                for (int v = 0; v < V_; ++v)
                    if (decision_[v] == In && !vset[v]) return std::nullopt;
                break;
            }
            for (int v = found; v >= 0 && !vset[v]; v = parent[v]) vset[v] = 1;
        }
        for (int round = 0; round < 2 * V_; ++round) {
            StateSet sbar;
            for (int v = 0; v < V_; ++v)
                if (vset[v] && v != root_) sbar.push_back(net_.buses()[v]);
            const std::vector<int> cand = meters_within(inst_.jac, sbar);
            const std::vector<int> cols = state_columns(inst_.jac, sbar);
            if (sbar.empty() || rank_of(inst_.jac.h, cand, cols) == static_cast<int>(sbar.size()))
                return vset;
            int best_m = -1;
            size_t best_missing = static_cast<size_t>(V_) + 1;
            for (int m = 0; m < mg_.placement().meter_count(); ++m) {
                if (coverage_[m].empty() || !injection_alive(m)) continue;
                const Meter& meter = mg_.placement().meter(m);
                if (!vset[net_.bus_index(meter.bus)]) continue;
                size_t missing = 0;
                for (int v : coverage_[m])
                    if (!vset[v]) ++missing;
                if (missing > 0 && missing < best_missing) {
                    best_missing = missing;
                    best_m = m;
                }
            }
            if (best_m < 0) return std::nullopt;
            for (int v : coverage_[best_m]) vset[v] = 1;
        }
        return std::nullopt;
    }

    void search() {
        if (aborted_) return;
        ++nodes_;
        if (nodes_ > limits_.node_budget) {
            aborted_ = true;
            return;
        }
        if ((nodes_ & 0xff) == 0) {
            const double s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
            if (s > limits_.time_budget_s) {
                aborted_ = true;
                return;
            }
        }

        std::vector<int> forced;
        bool ok = propagate(forced);
        if (ok) {
            red_.assign(inst_.num_arcs(), 1);
            lb_ = 0;
            ok = ascend();
        }
        if (ok) {
            if (nodes_ == 1) root_dual_ = lb_;
            // Arc-exact pruning: ties on the arc count are not explored for
            // the 1/w injection term, which is a deterministic preference
            // here rather than a proven minimum.
            if (std::max(lb_, floor_) < best_arc_bound()) node_body();
        }
        for (int v : forced) decision_[v] = Undecided;
    }

    long best_arc_bound() const {
        return best_.feasible ? best_.arc_count : std::numeric_limits<long>::max() / 8;
    }

    void node_body() {
        const auto vset = greedy_vertex_set();
        int branch_v = -1;
        if (vset) {
            bool exact = true;
            for (int v = 0; v < V_; ++v)
                if ((*vset)[v] && decision_[v] != In) exact = false;
            const auto built = try_tree(*vset);
            if (built) {
                accept(built->first, built->second);
                if (exact) return;  // |In| - 1 is the floor for this node
            }
            // Candidate branch vertices: greedy picks not yet committed.
            // Prefer the vertex whose weaker child bound is largest.
            long best_score = -1, best_sum = -1;
            int considered = 0;
            for (int v = 0; v < V_ && considered < 6; ++v) {
                if (!(*vset)[v] || decision_[v] != Undecided) continue;
                ++considered;
                const long gi = lookahead(v, In);
                const long go = lookahead(v, Out);
                const long score = std::min(gi, go);
                const long sum = std::min(gi + go, std::numeric_limits<long>::max() / 4);
                if (score > best_score || (score == best_score && sum > best_sum)) {
                    best_score = score;
                    best_sum = sum;
                    branch_v = v;
                }
            }
        }
        if (branch_v < 0) {
            for (int v = 0; v < V_ && branch_v < 0; ++v)
                if (decision_[v] == Undecided && reach_[v]) branch_v = v;
        }
        if (branch_v < 0) return;
        branch(branch_v);
    }

    void branch(int v) {
        decision_[v] = In;
        search();
        decision_[v] = Undecided;
        if (aborted_) return;
        decision_[v] = Out;
        search();
        decision_[v] = Undecided;
    }

    const MmsaInstance& inst_;
    MilpLimits limits_;
    const PowerNetwork& net_;
    const MeasuredGraph& mg_;
    int V_ = 0;
    int root_ = 0;
    std::vector<int> tail_, head_;
    std::vector<std::vector<int>> vertex_edges_;
    std::vector<std::vector<int>> edge_injections_;
    std::vector<std::vector<int>> coverage_;
    std::vector<signed char> decision_;
    std::vector<char> edge_alive_;
    std::vector<char> reach_;
    std::vector<long> red_;
    long lb_ = 0;
    long floor_ = 0;

    double best_obj_ = kInf;
    long root_dual_ = 0;
    MilpSolution best_;
    long nodes_ = 0;
    bool aborted_ = false;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

MilpSolution solve_exact(const MmsaInstance& inst, MilpLimits limits) {
    MilpSolution sol;
    if (inst.fixed_arcs_one.empty() && inst.fixed_z_one.empty()) {
        VertexSearch vs(inst, limits);
        sol = vs.run();
    } else {
        // Incremental mode pins arcs of a prior arborescence; the arc-based
        // search honours those fixings directly.
        BranchAndBound bb(inst, limits);
        sol = bb.run();
    }
    if (limits.compute_root_lp) {
        const LpResult lp = solve_lp(instance_lp(inst));
        if (lp.status == LpStatus::Optimal) sol.root_lp = lp.objective;
    }
    if (!sol.feasible && !sol.optimal)
        return sol;  // budget ran out before an incumbent appeared
    if (!sol.feasible) throw InfeasibleError("MMSA instance is infeasible");
    return sol;
}

ProtectionPlan extract_plan(const MmsaInstance& inst, const MilpSolution& sol, const Jacobian& jac) {
    if (!sol.feasible) throw std::runtime_error("no solution to extract");
    const MeasuredGraph& mg = *inst.mg;
    ProtectionPlan plan;
    plan.method = "milp";
    plan.targets = inst.d;

    FeasibleMeasuredTree tree;
    tree.root = inst.root;
    std::set<BusId> vertices{inst.root};
    std::vector<int> meter_rows;
    for (const auto& [edge, meter] : sol.edge_meters) {
        tree.edges.push_back({edge, meter});
        const Branch& br = mg.network().branches()[edge];
        vertices.insert(br.from);
        vertices.insert(br.to);
        meter_rows.push_back(meter);
    }
    tree.vertices.assign(vertices.begin(), vertices.end());
    identify_descendants(tree, mg);
    std::string why;
    if (!sol.edge_meters.empty() && !validate_tree(mg, tree, &why))
        throw std::logic_error("extracted solution violates tree invariants: " + why);

    std::sort(meter_rows.begin(), meter_rows.end());
    if (!is_protected(jac, meter_rows, plan.targets))
        throw std::logic_error("extracted solution fails the protection rank condition");
    for (int m : meter_rows) {
        plan.meter_ids.push_back(mg.placement().meter(m).id);
        if (mg.placement().meter(m).pmu_derived)
            plan.pmu_meter_ids.push_back(mg.placement().meter(m).id);
    }
    plan.tree = std::move(tree);
    plan.stats.nodes = sol.nodes;
    plan.stats.iterations = sol.nodes;
    plan.stats.optimal = sol.optimal;
    plan.stats.root_relaxation = sol.root_lp;
    plan.stats.wall_ms = sol.wall_ms;
    return plan;
}

}  // namespace gridsec
