#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridsec {

/// Dense row-major matrix of doubles. Small-scale by design: instances here
/// are measurement Jacobians with at most a few hundred rows.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    /// Copy of the rows/columns selected by index lists, in the given order.
    Matrix submatrix(std::span<const int> rows, std::span<const int> cols) const;

    std::vector<double> mul(std::span<const double> v) const;           // A * v
    std::vector<double> mul_transposed(std::span<const double> v) const; // A' * v

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

struct RankOptions {
    /// Pivot acceptance threshold, relative to the largest absolute entry of
    /// the submatrix before elimination starts.
    double eps = 1e-9;
};

/// Numerical rank of a row/column selection via Gauss-Jordan elimination with
/// partial pivoting. A pivot is accepted iff |pivot| > eps * max initial entry.
int rank_of(const Matrix& a, std::span<const int> rows, std::span<const int> cols,
            RankOptions opt = {});

/// Convenience: rank over all columns.
int rank_of_rows(const Matrix& a, std::span<const int> rows, RankOptions opt = {});

struct Rref {
    Matrix m;
    std::vector<int> pivot_cols;  // ascending
    std::vector<int> pivot_rows;  // pivot_rows[i] is the row holding pivot_cols[i]
    double tol = 0.0;             // absolute pivot tolerance that was used
};

/// Reduced row echelon form with the same pivoting rule as rank_of.
Rref rref(const Matrix& a, RankOptions opt = {});

/// Solves A x = b for square A by Gaussian elimination with partial pivoting.
/// Throws std::runtime_error if A is singular at the pivot tolerance.
std::vector<double> solve_linear(const Matrix& a, std::span<const double> b,
                                 RankOptions opt = {});

double norm2(std::span<const double> v);

// ---------------------------------------------------------------------------
// Exact rational arithmetic, used as the rank oracle in tests. Reactances are
// rational inputs, so elimination over Q is exact and free of tolerance
// choices. Overflow throws rather than silently wrapping.
// ---------------------------------------------------------------------------

struct RatOverflow : std::runtime_error {
    RatOverflow() : std::runtime_error("rational overflow") {}
};

struct Rat {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rat() = default;
    Rat(std::int64_t n) : num(n), den(1) {}
    Rat(std::int64_t n, std::int64_t d);

    /// Recovers a small-denominator rational from a decimal double (continued
    /// fractions). Throws if nothing with den <= max_den matches to 1e-12.
    static Rat from_decimal(double x, std::int64_t max_den = 1000000000);

    bool zero() const { return num == 0; }
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Rat operator+(const Rat& a, const Rat& b);
    friend Rat operator-(const Rat& a, const Rat& b);
    friend Rat operator*(const Rat& a, const Rat& b);
    friend Rat operator/(const Rat& a, const Rat& b);
    friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
};

class RatMatrix {
public:
    RatMatrix() = default;
    RatMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Rat& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const Rat& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<Rat> data_;
};

/// Exact rank over the rationals (fraction arithmetic, no tolerances).
int rank_exact(RatMatrix a);
int rank_exact(const RatMatrix& a, std::span<const int> rows, std::span<const int> cols);

}  // namespace gridsec
