#include "gridsec/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gridsec {

int LinearProgram::add_var(const std::string& name, double cost) {
    var_names.push_back(name);
    objective.push_back(cost);
    return num_vars++;
}

void LinearProgram::add_row(Row row) { rows.push_back(std::move(row)); }

namespace {

constexpr double kEps = 1e-9;

struct Tableau {
    int m, n;                          // rows, columns (without rhs)
    std::vector<double> a;             // (m) x (n+1), last column rhs
    std::vector<double> cost;          // n
    std::vector<int> basis;            // per row, basic column
    double& at(int i, int j) { return a[static_cast<size_t>(i) * (n + 1) + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * (n + 1) + j]; }
    double& rhs(int i) { return a[static_cast<size_t>(i) * (n + 1) + n]; }
    double rhs(int i) const { return a[static_cast<size_t>(i) * (n + 1) + n]; }
};

void pivot(Tableau& t, int row, int col) {
    const double p = t.at(row, col);
    const double inv = 1.0 / p;
    for (int j = 0; j <= t.n; ++j) t.at(row, j) *= inv;
    t.at(row, col) = 1.0;
    for (int i = 0; i < t.m; ++i) {
        if (i == row) continue;
        const double f = t.at(i, col);
        if (f == 0.0) continue;
        for (int j = 0; j <= t.n; ++j) t.at(i, j) -= f * t.at(row, j);
        t.at(i, col) = 0.0;
    }
    t.basis[row] = col;
}

// Minimizes cost over the tableau; returns false on unboundedness.
bool price_out(Tableau& t, const std::vector<char>& allowed, long& iters, long limit,
               bool& hit_limit) {
    // reduced costs kept implicitly: z_j = cost_j - sum_i cost[basis_i]*a_ij
    long stall = 0;
    while (true) {
        if (iters >= limit) {
            hit_limit = true;
            return true;
        }
        std::vector<double> y(t.m);
        for (int i = 0; i < t.m; ++i) y[i] = t.cost[t.basis[i]];
        int enter = -1;
        double best = -kEps;
        const bool bland = stall > 2000;
        for (int j = 0; j < t.n; ++j) {
            if (!allowed[j]) continue;
            double rc = t.cost[j];
            for (int i = 0; i < t.m; ++i)
                if (y[i] != 0.0) rc -= y[i] * t.at(i, j);
            if (rc < -kEps) {
                if (bland) {
                    enter = j;
                    break;
                }
                if (rc < best) {
                    best = rc;
                    enter = j;
                }
            }
        }
        if (enter < 0) return true;
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < t.m; ++i) {
            const double aij = t.at(i, enter);
            if (aij > kEps) {
                const double ratio = t.rhs(i) / aij;
                if (leave < 0 || ratio < best_ratio - kEps ||
                    (std::fabs(ratio - best_ratio) <= kEps && t.basis[i] < t.basis[leave])) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return false;  // unbounded
        if (best_ratio < kEps)
            ++stall;
        else
            stall = 0;
        pivot(t, leave, enter);
        ++iters;
    }
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, long iteration_limit) {
    LpResult res;
    const int m = static_cast<int>(lp.rows.size());

    // Layout: original vars | slack/surplus | artificials.
    int n = lp.num_vars;
    std::vector<int> slack_col(m, -1), art_col(m, -1);
    for (int i = 0; i < m; ++i)
        if (lp.rows[i].sense != LinearProgram::EQ) slack_col[i] = n++;
    for (int i = 0; i < m; ++i) {
        // After rhs normalization below, >= rows and = rows need artificials;
        // so can <= rows with negative rhs. Allocate lazily afterwards.
        art_col[i] = -2;
    }

    // Normalize rows so rhs >= 0.
    std::vector<double> row_sign(m, 1.0);
    std::vector<double> rhs(m);
    for (int i = 0; i < m; ++i) {
        rhs[i] = lp.rows[i].rhs;
        if (rhs[i] < 0) {
            row_sign[i] = -1.0;
            rhs[i] = -rhs[i];
        }
    }
    auto effective_sense = [&](int i) {
        auto s = lp.rows[i].sense;
        if (row_sign[i] < 0) {
            if (s == LinearProgram::LE) return LinearProgram::GE;
            if (s == LinearProgram::GE) return LinearProgram::LE;
        }
        return s;
    };
    int n_art_start = n;
    for (int i = 0; i < m; ++i)
        if (effective_sense(i) != LinearProgram::LE) art_col[i] = n++;

    Tableau t;
    t.m = m;
    t.n = n;
    t.a.assign(static_cast<size_t>(m) * (n + 1), 0.0);
    t.basis.assign(m, -1);
    for (int i = 0; i < m; ++i) {
        for (const auto& [j, v] : lp.rows[i].coef) t.at(i, j) += row_sign[i] * v;
        if (slack_col[i] >= 0)
            t.at(i, slack_col[i]) = effective_sense(i) == LinearProgram::LE ? 1.0 : -1.0;
        if (art_col[i] >= 0) t.at(i, art_col[i]) = 1.0;
        t.rhs(i) = rhs[i];
        t.basis[i] = art_col[i] >= 0 ? art_col[i] : slack_col[i];
    }

    std::vector<char> allowed(n, 1);
    bool hit_limit = false;

    // Phase 1: drive artificials to zero.
    if (n > n_art_start) {
        t.cost.assign(n, 0.0);
        for (int j = n_art_start; j < n; ++j) t.cost[j] = 1.0;
        if (!price_out(t, allowed, res.iterations, iteration_limit, hit_limit))
            throw std::logic_error("phase-1 unbounded");
        if (hit_limit) {
            res.status = LpStatus::IterationLimit;
            return res;
        }
        double art_sum = 0.0;
        for (int i = 0; i < m; ++i)
            if (t.basis[i] >= n_art_start) art_sum += t.rhs(i);
        if (art_sum > 1e-7) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Pivot residual artificials out of the basis where possible.
        for (int i = 0; i < m; ++i) {
            if (t.basis[i] < n_art_start) continue;
            int col = -1;
            for (int j = 0; j < n_art_start; ++j)
                if (std::fabs(t.at(i, j)) > 1e-7) {
                    col = j;
                    break;
                }
            if (col >= 0) pivot(t, i, col);
        }
        for (int j = n_art_start; j < n; ++j) allowed[j] = 0;
    }

    // Phase 2.
    t.cost.assign(n, 0.0);
    for (int j = 0; j < lp.num_vars; ++j) t.cost[j] = lp.objective[j];
    if (!price_out(t, allowed, res.iterations, iteration_limit, hit_limit)) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    if (hit_limit) {
        res.status = LpStatus::IterationLimit;
        return res;
    }

    res.status = LpStatus::Optimal;
    res.x.assign(lp.num_vars, 0.0);
    for (int i = 0; i < m; ++i)
        if (t.basis[i] < lp.num_vars) res.x[t.basis[i]] = t.rhs(i);
    res.objective = 0.0;
    for (int j = 0; j < lp.num_vars; ++j) res.objective += lp.objective[j] * res.x[j];
    return res;
}

std::string write_lp_format(const LinearProgram& lp, const std::vector<int>& binary_vars) {
    std::ostringstream os;
    os << "\\ generated instance\nMinimize\n obj:";
    bool first = true;
    for (int j = 0; j < lp.num_vars; ++j) {
        if (lp.objective[j] == 0.0) continue;
        const double c = lp.objective[j];
        os << (c < 0 ? " - " : (first ? " " : " + "));
        os << std::fabs(c) << " " << lp.var_names[j];
        first = false;
    }
    if (first) os << " 0 " << (lp.num_vars ? lp.var_names[0] : "x0");
    os << "\nSubject To\n";
    for (size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& row = lp.rows[i];
        os << " " << (row.name.empty() ? "c" + std::to_string(i) : row.name) << ":";
        bool f2 = true;
        for (const auto& [j, v] : row.coef) {
            if (v == 0.0) continue;
            os << (v < 0 ? " - " : (f2 ? " " : " + "));
            os << std::fabs(v) << " " << lp.var_names[j];
            f2 = false;
        }
        if (f2) os << " 0 " << lp.var_names[0];
        os << (row.sense == LinearProgram::LE ? " <= " : row.sense == LinearProgram::GE ? " >= " : " = ");
        os << row.rhs << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < lp.num_vars; ++j) os << " 0 <= " << lp.var_names[j] << "\n";
    if (!binary_vars.empty()) {
        os << "Binary\n";
        for (int j : binary_vars) os << " " << lp.var_names[j] << "\n";
    }
    os << "End\n";
    return os.str();
}

}  // namespace gridsec
