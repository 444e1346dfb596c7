#include "gridsec/tph.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <random>
#include <set>

namespace gridsec {

namespace {

// splitmix64-style mixing so per-round, per-tree randomness is a pure
// function of (seed, round, index): the first K trees of a round coincide
// for every run with the same seed, whatever K is.
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t x = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull + c + 0x94d049bb133111ebull;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

// One tree being pruned. Vertices die in whole subtrees only, so while a
// vertex is alive its descendant list from construction time stays exact.
struct PruneTree {
    const FeasibleMeasuredTree* tree;
    const MeasuredGraph* mg;
    std::set<BusId> alive;
    std::set<BusId> terminals;

    PruneTree(const FeasibleMeasuredTree& t, const MeasuredGraph& m, const std::set<BusId>& term)
        : tree(&t), mg(&m), alive(t.vertices.begin(), t.vertices.end()), terminals(term) {}

    // Pruned set for a child subset: the children and all their descendants.
    std::vector<BusId> pruned_set(const std::vector<BusId>& subset) const {
        std::vector<BusId> u;
        for (BusId c : subset) {
            u.push_back(c);
            const auto& d = tree->descendants.at(c);
            u.insert(u.end(), d.begin(), d.end());
        }
        std::sort(u.begin(), u.end());
        return u;
    }

    bool prunable(const std::vector<BusId>& subset) const {
        const std::vector<BusId> u = pruned_set(subset);
        for (BusId v : u)
            if (terminals.count(v)) return false;
        // Every surviving edge mapped to an injection meter must measure no
        // pruned vertex; edges losing an endpoint disappear with the prune.
        for (const auto& em : tree->edges) {
            const Meter& meter = mg->placement().meter(em.meter);
            if (meter.kind != MeterKind::Injection) continue;
            const Branch& br = mg->network().branches()[em.branch];
            if (!alive.count(br.from) || !alive.count(br.to)) continue;  // already gone
            if (std::binary_search(u.begin(), u.end(), br.from) ||
                std::binary_search(u.begin(), u.end(), br.to))
                continue;  // removed together with the pruned set
            for (BusId mv : mg->measured_vertices(em.meter))
                if (std::binary_search(u.begin(), u.end(), mv)) return false;
        }
        return true;
    }

    void prune(const std::vector<BusId>& subset) {
        for (BusId v : pruned_set(subset)) alive.erase(v);
    }
};

// Largest prunable subset of the alive children of vertex i: exhaustive for
// up to 12 children (ties to the lexicographically smallest id set), greedy
// insertion by descending subtree size beyond that.
std::vector<BusId> largest_prunable_subset(const PruneTree& pt, const std::vector<BusId>& children) {
    const int n = static_cast<int>(children.size());
    if (n == 0) return {};
    if (n <= 12) {
        for (int size = n; size >= 1; --size) {
            // lexicographic enumeration of size-sized subsets
            std::vector<int> idx(size);
            for (int i = 0; i < size; ++i) idx[i] = i;
            while (true) {
                std::vector<BusId> subset;
                for (int i : idx) subset.push_back(children[i]);
                if (pt.prunable(subset)) return subset;
                int i = size - 1;
                while (i >= 0 && idx[i] == n - size + i) --i;
                if (i < 0) break;
                ++idx[i];
                for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        return {};
    }
    std::vector<BusId> order = children;
    std::stable_sort(order.begin(), order.end(), [&](BusId a, BusId b) {
        return pt.tree->descendants.at(a).size() > pt.tree->descendants.at(b).size();
    });
    std::vector<BusId> chosen;
    for (BusId c : order) {
        std::vector<BusId> trial = chosen;
        trial.push_back(c);
        if (pt.prunable(trial)) chosen = std::move(trial);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

// One root-to-leaf pruning pass; returns surviving vertices and bumps the
// examination counter once per dequeued non-root vertex.
std::set<BusId> prune_pass(const FeasibleMeasuredTree& tree, const MeasuredGraph& mg,
                           const std::set<BusId>& terminals, long& counter) {
    PruneTree pt(tree, mg, terminals);
    std::deque<BusId> queue{tree.root};
    while (!queue.empty()) {
        const BusId v = queue.front();
        queue.pop_front();
        if (v != tree.root) ++counter;
        std::vector<BusId> children;
        for (BusId c : tree.children.at(v))
            if (pt.alive.count(c)) children.push_back(c);
        const std::vector<BusId> subset = largest_prunable_subset(pt, children);
        if (!subset.empty()) pt.prune(subset);
        for (BusId c : children)
            if (pt.alive.count(c)) queue.push_back(c);
    }
    return pt.alive;
}

FeasibleMeasuredTree restrict_tree(const FeasibleMeasuredTree& tree, const MeasuredGraph& mg,
                                   const std::set<BusId>& alive) {
    FeasibleMeasuredTree out;
    out.root = tree.root;
    for (const auto& em : tree.edges) {
        const Branch& br = mg.network().branches()[em.branch];
        if (alive.count(br.from) && alive.count(br.to)) out.edges.push_back(em);
    }
    out.vertices.assign(alive.begin(), alive.end());
    identify_descendants(out, mg);
    return out;
}

}  // namespace

ProtectionPlan solve_tph(const Jacobian& jac, const MeasuredGraph& mg, const StateSet& d,
                         TphOptions opt) {
    const auto t0 = std::chrono::steady_clock::now();
    if (opt.k < 1) throw std::runtime_error("TPH requires K >= 1");
    const BusId ref = mg.network().reference();
    for (BusId b : d) {
        if (b == ref) throw std::runtime_error("target set contains the reference bus");
        if (mg.network().state_column(b) < 0)
            throw std::runtime_error("target set contains unknown bus " + std::to_string(b));
    }

    std::set<BusId> terminals(d.begin(), d.end());
    terminals.insert(ref);

    // The heuristic starts from spanning trees of the measured full network,
    // so the whole network must be observable.
    std::vector<BusId> vbar = mg.measured_full().vertices;
    if (static_cast<int>(vbar.size()) != mg.network().bus_count())
        throw InfeasibleError("network not observable: some buses are unmeasured");

    ProtectionPlan plan;
    plan.method = "tph";
    plan.targets = d;
    long counter = 0;
    FeasibleMeasuredTree best;
    int round = 0;

    while (true) {
        ++round;
        const int w = static_cast<int>(vbar.size());
        StateSet sbar;
        for (BusId v : vbar)
            if (v != ref) sbar.push_back(v);
        const std::vector<int> cand = meters_within(jac, sbar);

        // K distinct basic measurement sets (duplicates rejected; fewer than K
        // accepted after 10K attempts).
        std::vector<std::vector<int>> sets;
        std::set<std::vector<int>> seen;
        for (int attempt = 0; attempt < 10 * opt.k && static_cast<int>(sets.size()) < opt.k;
             ++attempt) {
            auto basic =
                basic_measurement_set(jac, cand, sbar, mix(opt.seed, round, attempt), opt.rank);
            if (!basic) {
                if (round == 1)
                    throw InfeasibleError("network not observable from the available meters");
                throw std::logic_error("residual tree lost observability");
            }
            if (seen.insert(*basic).second) sets.push_back(std::move(*basic));
        }

        std::vector<FeasibleMeasuredTree> trees;
        for (size_t k = 0; k < sets.size(); ++k) {
            // The first tree keeps the canonical meter order; later ones are
            // shuffled, since distinct basic sets alone often share a
            // skeleton and pruning outcomes hinge on tree shape.
            std::vector<int> order = sets[k];
            if (k > 0) {
                std::mt19937_64 tree_rng(mix(opt.seed, 1000 + round, k));
                for (size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[tree_rng() % i]);
            }
            auto tree = construct_feasible_tree(mg, order, ref);
            if (!tree) throw std::logic_error("basic measurement set yielded no feasible tree");
            trees.push_back(std::move(*tree));
        }

        int best_idx = -1;
        std::set<BusId> best_alive;
        for (size_t k = 0; k < trees.size(); ++k) {
            std::set<BusId> alive = prune_pass(trees[k], mg, terminals, counter);
            if (best_idx < 0 || alive.size() < best_alive.size()) {
                best_idx = static_cast<int>(k);
                best_alive = std::move(alive);
            }
        }
        best = restrict_tree(trees[best_idx], mg, best_alive);
        if (opt.log) opt.log(round, w, static_cast<int>(best.vertices.size()));
        if (static_cast<int>(best.vertices.size()) == w) break;
        vbar = best.vertices;
    }

    std::vector<int> meter_rows;
    for (const auto& em : best.edges) meter_rows.push_back(em.meter);
    std::sort(meter_rows.begin(), meter_rows.end());
    for (int m : meter_rows) {
        plan.meter_ids.push_back(mg.placement().meter(m).id);
        if (mg.placement().meter(m).pmu_derived)
            plan.pmu_meter_ids.push_back(mg.placement().meter(m).id);
    }
    plan.tree = std::move(best);
    plan.stats.iterations = round;
    plan.stats.vertices_examined = counter;
    plan.stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return plan;
}

}  // namespace gridsec
