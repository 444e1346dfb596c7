#pragma once

#include <string>
#include <vector>

namespace gridsec {

/// Sparse statement of min c'v subject to mixed-sense rows and v >= 0.
/// Upper bounds are expressed as explicit rows by the caller.
struct LinearProgram {
    enum Sense : char { LE = 'L', GE = 'G', EQ = 'E' };
    struct Row {
        std::vector<std::pair<int, double>> coef;
        Sense sense = LE;
        double rhs = 0.0;
        std::string name;
    };
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<Row> rows;
    std::vector<std::string> var_names;

    int add_var(const std::string& name, double cost);
    void add_row(Row row);
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::IterationLimit;
    double objective = 0.0;
    std::vector<double> x;
    long iterations = 0;
};

/// Dense two-phase tableau simplex with partial (Dantzig) pricing and a Bland
/// fallback against cycling. Deterministic.
LpResult solve_lp(const LinearProgram& lp, long iteration_limit = 200000);

/// CPLEX LP text format writer; integer_vars are declared Binary.
std::string write_lp_format(const LinearProgram& lp, const std::vector<int>& binary_vars);

}  // namespace gridsec
