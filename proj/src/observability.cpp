#include "gridsec/observability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gridsec/measured_graph.hpp"

namespace gridsec {

namespace {

std::map<BusId, int> column_of(const Jacobian& jac) {
    std::map<BusId, int> m;
    for (size_t i = 0; i < jac.col_buses.size(); ++i) m[jac.col_buses[i]] = static_cast<int>(i);
    return m;
}

std::vector<int> all_columns(const Jacobian& jac) {
    std::vector<int> cols(jac.cols());
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
}

}  // namespace

std::vector<int> state_columns(const Jacobian& jac, const StateSet& s) {
    const auto col = column_of(jac);
    std::vector<int> out;
    for (BusId b : s) {
        auto it = col.find(b);
        if (it == col.end()) throw std::runtime_error("state set contains unknown or reference bus " + std::to_string(b));
        out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_protected(const Jacobian& jac, std::span<const int> protected_rows, const StateSet& d,
                  RankOptions opt) {
    if (d.empty()) return true;
    const std::vector<int> dcols = state_columns(jac, d);
    std::vector<int> rest;
    std::set<int> excluded(dcols.begin(), dcols.end());
    for (int c = 0; c < jac.cols(); ++c)
        if (!excluded.count(c)) rest.push_back(c);
    const int full = rank_of(jac.h, protected_rows, all_columns(jac), opt);
    const int without = rank_of(jac.h, protected_rows, rest, opt);
    return full == without + static_cast<int>(d.size());
}

bool is_observable_subnetwork(const Jacobian& jac, const MeasuredGraph& mg,
                              std::span<const int> meters, RankOptions opt) {
    const SubNetwork sub = mg.measured_subnetwork(std::vector<int>(meters.begin(), meters.end()));
    const BusId ref = mg.network().reference();
    if (!std::binary_search(sub.vertices.begin(), sub.vertices.end(), ref)) return false;
    StateSet s;
    for (BusId v : sub.vertices)
        if (v != ref) s.push_back(v);
    if (s.empty()) return true;
    const std::vector<int> cols = state_columns(jac, s);
    return rank_of(jac.h, meters, cols, opt) == static_cast<int>(s.size());
}

std::optional<std::vector<int>> basic_measurement_set(const Jacobian& jac,
                                                      std::span<const int> candidate_rows,
                                                      const StateSet& s, std::uint64_t seed,
                                                      RankOptions opt) {
    if (s.empty()) return std::vector<int>{};
    const std::vector<int> cols = state_columns(jac, s);
    std::vector<int> order(candidate_rows.begin(), candidate_rows.end());
    // Hand-rolled Fisher-Yates: std::shuffle's sequence is not pinned by the
    // standard and determinism across platforms matters here.
    std::mt19937_64 rng(seed);
    for (size_t i = order.size(); i > 1; --i) {
        const size_t j = rng() % i;
        std::swap(order[i - 1], order[j]);
    }
    // Greedy Gauss-Jordan: keep rows that increase the rank on the S columns.
    Matrix work(static_cast<int>(s.size()), static_cast<int>(cols.size()));
    double max_entry = 0.0;
    for (int r : order)
        for (int c : cols) max_entry = std::max(max_entry, std::fabs(jac.h(r, c)));
    const double tol = opt.eps * max_entry;
    std::vector<int> chosen;
    std::vector<int> pivot_col_of_row;
    for (int r : order) {
        if (chosen.size() == s.size()) break;
        std::vector<double> row(cols.size());
        for (size_t j = 0; j < cols.size(); ++j) row[j] = jac.h(r, cols[j]);
        // Reduce against rows already accepted.
        for (size_t k = 0; k < chosen.size(); ++k) {
            const double f = row[pivot_col_of_row[k]];
            if (f == 0.0) continue;
            for (size_t j = 0; j < cols.size(); ++j) row[j] -= f * work(static_cast<int>(k), static_cast<int>(j));
        }
        int pivot = -1;
        double best = tol;
        for (size_t j = 0; j < cols.size(); ++j)
            if (std::fabs(row[j]) > best) {
                best = std::fabs(row[j]);
                pivot = static_cast<int>(j);
            }
        if (pivot < 0) continue;
        const double p = row[pivot];
        for (double& v : row) v /= p;
        // Clear the new pivot column from earlier rows to keep reductions exact.
        for (size_t k = 0; k < chosen.size(); ++k) {
            const double f = work(static_cast<int>(k), pivot);
            if (f == 0.0) continue;
            for (size_t j = 0; j < cols.size(); ++j)
                work(static_cast<int>(k), static_cast<int>(j)) -= f * row[j];
        }
        const int idx = static_cast<int>(chosen.size());
        for (size_t j = 0; j < cols.size(); ++j) work(idx, static_cast<int>(j)) = row[j];
        chosen.push_back(r);
        pivot_col_of_row.push_back(pivot);
    }
    if (chosen.size() != s.size()) return std::nullopt;
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::optional<AttackVector> synthesize_attack(const Jacobian& jac,
                                              std::span<const int> protected_rows, BusId target,
                                              RankOptions opt) {
    const int tcol = [&] {
        for (size_t i = 0; i < jac.col_buses.size(); ++i)
            if (jac.col_buses[i] == target) return static_cast<int>(i);
        throw std::runtime_error("attack target is not a state variable: " + std::to_string(target));
    }();

    std::vector<double> c(jac.cols(), 0.0);
    if (protected_rows.empty()) {
        c[tcol] = 1.0;
    } else {
        const Matrix hp = jac.h.submatrix(protected_rows, all_columns(jac));
        const Rref red = rref(hp, opt);
        std::vector<int> row_of_pivot_col(jac.cols(), -1);
        for (size_t i = 0; i < red.pivot_cols.size(); ++i)
            row_of_pivot_col[red.pivot_cols[i]] = red.pivot_rows[i];
        const double zero_tol = std::max(red.tol, 1e-12);
        if (row_of_pivot_col[tcol] < 0) {
            // Target column is free: the canonical basis vector works.
            c[tcol] = 1.0;
            for (size_t i = 0; i < red.pivot_cols.size(); ++i)
                c[red.pivot_cols[i]] = -red.m(red.pivot_rows[i], tcol);
        } else {
            // Target column is pivotal: need a free column whose basis vector
            // moves the target coordinate.
            const int trow = row_of_pivot_col[tcol];
            int free_col = -1;
            for (int f = 0; f < jac.cols(); ++f) {
                if (row_of_pivot_col[f] >= 0) continue;
                if (std::fabs(red.m(trow, f)) > zero_tol) {
                    free_col = f;
                    break;
                }
            }
            if (free_col < 0) return std::nullopt;
            c[free_col] = 1.0;
            for (size_t i = 0; i < red.pivot_cols.size(); ++i)
                c[red.pivot_cols[i]] = -red.m(red.pivot_rows[i], free_col);
            const double ct = c[tcol];
            for (double& v : c) v /= ct;
        }
    }

    AttackVector out;
    for (int j = 0; j < jac.cols(); ++j) out.c[jac.col_buses[j]] = c[j];
    const std::vector<double> a = jac.h.mul(c);
    for (int r = 0; r < jac.rows(); ++r) out.a[jac.row_ids[r]] = a[r];
    return out;
}

BddResult bdd_residual_check(const Jacobian& jac, std::span<const double> z,
                             std::span<const double> a, RankOptions opt) {
    const int n = jac.cols();
    std::vector<int> rows(jac.rows());
    std::iota(rows.begin(), rows.end(), 0);
    if (rank_of_rows(jac.h, rows, opt) < n)
        throw std::runtime_error("unobservable, estimator undefined");

    Matrix g(n, n);  // H'H
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int r = 0; r < jac.rows(); ++r) acc += jac.h(r, i) * jac.h(r, j);
            g(i, j) = acc;
        }

    auto residual = [&](std::span<const double> meas) {
        const std::vector<double> rhs = jac.h.mul_transposed(meas);
        const std::vector<double> theta = solve_linear(g, rhs, opt);
        const std::vector<double> fit = jac.h.mul(theta);
        std::vector<double> r(meas.size());
        for (size_t i = 0; i < meas.size(); ++i) r[i] = meas[i] - fit[i];
        return norm2(r);
    };

    std::vector<double> attacked(z.size());
    for (size_t i = 0; i < z.size(); ++i) attacked[i] = z[i] + a[i];
    return BddResult{residual(z), residual(attacked)};
}

std::vector<int> meters_within(const Jacobian& jac, const StateSet& s) {
    std::vector<char> allowed(jac.cols(), 0);
    for (int c : state_columns(jac, s)) allowed[c] = 1;
    std::vector<int> out;
    for (int r = 0; r < jac.rows(); ++r) {
        bool ok = true;
        for (int c = 0; c < jac.cols() && ok; ++c)
            if (jac.h(r, c) != 0.0 && !allowed[c]) ok = false;
        if (ok) out.push_back(r);
    }
    return out;
}

}  // namespace gridsec
