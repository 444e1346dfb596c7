#include "gridsec/sve.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace gridsec {

namespace {

// Lexicographically next k-combination of indices 0..n-1, or false when done.
bool next_combination(std::vector<int>& idx, int n) {
    const int k = static_cast<int>(idx.size());
    for (int i = k - 1; i >= 0; --i) {
        if (idx[i] < n - (k - i)) {
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

ProtectionPlan solve_sve(const Jacobian& jac, const MeasuredGraph& mg, const StateSet& d,
                         SveOptions opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const BusId ref = mg.network().reference();
    std::set<BusId> dset(d.begin(), d.end());
    for (BusId b : d) {
        if (b == ref) throw std::runtime_error("target set contains the reference bus");
        if (mg.network().state_column(b) < 0)
            throw std::runtime_error("target set contains unknown bus " + std::to_string(b));
    }

    std::vector<BusId> free_buses;  // I \ D, ascending
    for (BusId b : jac.col_buses)
        if (!dset.count(b)) free_buses.push_back(b);

    if (!opt.force && free_buses.size() < 64 &&
        (std::uint64_t{1} << free_buses.size()) > opt.max_subsets)
        throw std::runtime_error("SVE enumeration guard exceeded (" +
                                 std::to_string(free_buses.size()) +
                                 " free vertices); pass force to override");

    ProtectionPlan plan;
    plan.method = "sve";
    plan.targets = d;

    long examined = 0;
    for (int size = 0; size <= static_cast<int>(free_buses.size()); ++size) {
        std::vector<int> idx(size);
        for (int i = 0; i < size; ++i) idx[i] = i;
        bool more = true;
        while (more) {
            ++examined;
            StateSet sbar(d.begin(), d.end());
            for (int i : idx) sbar.push_back(free_buses[i]);
            std::sort(sbar.begin(), sbar.end());

            const std::vector<int> pbar = meters_within(jac, sbar);
            const std::vector<int> cols = state_columns(jac, sbar);
            if (rank_of(jac.h, pbar, cols, opt.rank) == static_cast<int>(sbar.size())) {
                auto basic = basic_measurement_set(jac, pbar, sbar, /*seed=*/0, opt.rank);
                if (!basic) throw std::logic_error("rank condition held but no basic set found");
                auto tree = construct_feasible_tree(mg, *basic, ref);
                if (!tree) throw std::logic_error("basic measurement set yielded no feasible tree");
                for (int m : *basic) plan.meter_ids.push_back(mg.placement().meter(m).id);
                plan.tree = std::move(*tree);
                plan.stats.iterations = examined;
                plan.stats.wall_ms = std::chrono::duration<double, std::milli>(
                                         std::chrono::steady_clock::now() - t0)
                                         .count();
                return plan;
            }
            more = size > 0 && next_combination(idx, static_cast<int>(free_buses.size()));
            if (size == 0) more = false;
        }
    }
    throw InfeasibleError("no Steiner vertex set makes the targets observable");
}

}  // namespace gridsec
