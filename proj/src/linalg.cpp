#include "gridsec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridsec {

Matrix Matrix::submatrix(std::span<const int> rows, std::span<const int> cols) const {
    Matrix s(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            s(static_cast<int>(i), static_cast<int>(j)) = (*this)(rows[i], cols[j]);
    return s;
}

std::vector<double> Matrix::mul(std::span<const double> v) const {
    std::vector<double> out(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> Matrix::mul_transposed(std::span<const double> v) const {
    std::vector<double> out(cols_, 0.0);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) out[j] += (*this)(i, j) * v[i];
    return out;
}

namespace {

double max_abs(const Matrix& m) {
    double mx = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) mx = std::max(mx, std::fabs(m(i, j)));
    return mx;
}

}  // namespace

Rref rref(const Matrix& a, RankOptions opt) {
    Rref out;
    out.m = a;
    Matrix& m = out.m;
    const double mx = max_abs(m);
    out.tol = opt.eps * mx;
    if (mx == 0.0) return out;

    int pivot_row = 0;
    for (int col = 0; col < m.cols() && pivot_row < m.rows(); ++col) {
        int best = -1;
        double best_abs = out.tol;
        for (int r = pivot_row; r < m.rows(); ++r) {
            double v = std::fabs(m(r, col));
            if (v > best_abs) {
                best_abs = v;
                best = r;
            }
        }
        if (best < 0) continue;
        if (best != pivot_row)
            for (int j = 0; j < m.cols(); ++j) std::swap(m(best, j), m(pivot_row, j));
        const double p = m(pivot_row, col);
        for (int j = 0; j < m.cols(); ++j) m(pivot_row, j) /= p;
        m(pivot_row, col) = 1.0;
        for (int r = 0; r < m.rows(); ++r) {
            if (r == pivot_row) continue;
            const double f = m(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < m.cols(); ++j) m(r, j) -= f * m(pivot_row, j);
            m(r, col) = 0.0;
        }
        out.pivot_cols.push_back(col);
        out.pivot_rows.push_back(pivot_row);
        ++pivot_row;
    }
    return out;
}

int rank_of(const Matrix& a, std::span<const int> rows, std::span<const int> cols, RankOptions opt) {
    if (rows.empty() || cols.empty()) return 0;
    Matrix s = a.submatrix(rows, cols);
    return static_cast<int>(rref(s, opt).pivot_cols.size());
}

int rank_of_rows(const Matrix& a, std::span<const int> rows, RankOptions opt) {
    std::vector<int> cols(a.cols());
    std::iota(cols.begin(), cols.end(), 0);
    return rank_of(a, rows, cols, opt);
}

std::vector<double> solve_linear(const Matrix& a, std::span<const double> b, RankOptions opt) {
    const int n = a.rows();
    if (a.cols() != n) throw std::runtime_error("solve_linear: matrix not square");
    Matrix m(n, n + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
        m(i, n) = b[i];
    }
    const double tol = opt.eps * std::max(max_abs(a), 1e-300);
    for (int col = 0; col < n; ++col) {
        int best = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(m(r, col)) > std::fabs(m(best, col))) best = r;
        if (std::fabs(m(best, col)) <= tol) throw std::runtime_error("solve_linear: singular matrix");
        if (best != col)
            for (int j = 0; j <= n; ++j) std::swap(m(best, j), m(col, j));
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m(r, col) / m(col, col);
            if (f == 0.0) continue;
            for (int j = col; j <= n; ++j) m(r, j) -= f * m(col, j);
        }
    }
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = m(i, n) / m(i, i);
    return x;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Rational arithmetic
// ---------------------------------------------------------------------------

namespace {

std::int64_t checked_narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN) throw RatOverflow();
    return static_cast<std::int64_t>(v);
}

}  // namespace

Rat::Rat(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::runtime_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rat Rat::from_decimal(double x, std::int64_t max_den) {
    if (x == std::floor(x) && std::fabs(x) < 9e15) return Rat(static_cast<std::int64_t>(x));
    // Continued fraction expansion, stop at the first convergent that matches.
    double v = x;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        const double fl = std::floor(v);
        if (std::fabs(fl) > 9e15) break;
        const auto a = static_cast<std::int64_t>(fl);
        const __int128 p2 = static_cast<__int128>(a) * p1 + p0;
        const __int128 q2 = static_cast<__int128>(a) * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = checked_narrow(p2);
        q1 = checked_narrow(q2);
        const double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::fabs(approx - x) <= 1e-12 * std::max(1.0, std::fabs(x))) return Rat(p1, q1);
        const double rem = v - fl;
        if (rem < 1e-15) break;
        v = 1.0 / rem;
    }
    throw std::runtime_error("no small rational matches decimal value");
}

Rat operator+(const Rat& a, const Rat& b) {
    const __int128 n = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
    const __int128 d = static_cast<__int128>(a.den) * b.den;
    return Rat(checked_narrow(n), checked_narrow(d));
}

Rat operator-(const Rat& a, const Rat& b) { return a + Rat(-b.num, b.den); }

Rat operator*(const Rat& a, const Rat& b) {
    const __int128 n = static_cast<__int128>(a.num) * b.num;
    const __int128 d = static_cast<__int128>(a.den) * b.den;
    return Rat(checked_narrow(n), checked_narrow(d));
}

Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::runtime_error("rational division by zero");
    return a * Rat(b.den, b.num);
}

int rank_exact(RatMatrix a) {
    int rank = 0;
    for (int col = 0; col < a.cols() && rank < a.rows(); ++col) {
        int pivot = -1;
        for (int r = rank; r < a.rows(); ++r) {
            if (!a(r, col).zero()) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) continue;
        if (pivot != rank)
            for (int j = 0; j < a.cols(); ++j) std::swap(a(pivot, j), a(rank, j));
        const Rat p = a(rank, col);
        for (int j = col; j < a.cols(); ++j) a(rank, j) = a(rank, j) / p;
        for (int r = 0; r < a.rows(); ++r) {
            if (r == rank || a(r, col).zero()) continue;
            const Rat f = a(r, col);
            for (int j = col; j < a.cols(); ++j) a(r, j) = a(r, j) - f * a(rank, j);
        }
        ++rank;
    }
    return rank;
}

int rank_exact(const RatMatrix& a, std::span<const int> rows, std::span<const int> cols) {
    RatMatrix s(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j)
            s(static_cast<int>(i), static_cast<int>(j)) = a(rows[i], cols[j]);
    return rank_exact(std::move(s));
}

}  // namespace gridsec
