#include "bta/dense.hpp"

#include <cmath>
#include <cstdint>

#include "bta/errors.hpp"

namespace bta {

namespace {

// Pivots at or below this are declared not positive definite; the outer
// solvers guarantee SPD inputs, so no perturbation is attempted.
constexpr double kPivotFloor = 1e-300;

void check_same_shape(const DenseBlock& a, const DenseBlock& b, const char* op)
{
    if (a.rows != b.rows || a.cols != b.cols) {
        throw DimensionError(std::string(op) + ": shape mismatch");
    }
}

std::int64_t cube(int b) { return static_cast<std::int64_t>(b) * b * b; }

} // namespace

DenseBlock transpose(const DenseBlock& a)
{
    DenseBlock t(a.cols, a.rows);
    for (int j = 0; j < a.cols; j++) {
        for (int i = 0; i < a.rows; i++) { t(j, i) = a(i, j); }
    }
    return t;
}

void symmetrize_from_lower(DenseBlock& a)
{
    for (int j = 0; j < a.cols; j++) {
        for (int i = j + 1; i < a.rows; i++) { a(j, i) = a(i, j); }
    }
}

double max_abs_diff(const DenseBlock& a, const DenseBlock& b)
{
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t k = 0; k < a.data.size(); k++) {
        m = std::max(m, std::abs(a.data[k] - b.data[k]));
    }
    return m;
}

double inf_norm(const DenseBlock& a)
{
    double m = 0.0;
    for (int i = 0; i < a.rows; i++) {
        double s = 0.0;
        for (int j = 0; j < a.cols; j++) { s += std::abs(a(i, j)); }
        m = std::max(m, s);
    }
    return m;
}

double inf_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) { m = std::max(m, std::abs(x)); }
    return m;
}

DenseBlock chol_lower(DenseBlock a, FlopCounter* fc)
{
    if (a.rows != a.cols) { throw DimensionError("chol_lower: block not square"); }
    const int n = a.rows;
    for (int j = 0; j < n; j++) {
        double d = a(j, j);
        for (int k = 0; k < j; k++) { d -= a(j, k) * a(j, k); }
        if (!(d > kPivotFloor)) {
            throw NotPositiveDefiniteError(
                "chol_lower: not positive definite at row " + std::to_string(j), j);
        }
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (int i = j + 1; i < n; i++) {
            double s = a(i, j);
            for (int k = 0; k < j; k++) { s -= a(i, k) * a(j, k); }
            a(i, j) = s / ljj;
        }
        for (int i = 0; i < j; i++) { a(i, j) = 0.0; } // clear stale upper triangle
    }
    if (fc) { fc->potrf += Rational(cube(n), 3); }
    return a;
}

DenseBlock solve_right_transposed(DenseBlock b, const DenseBlock& l, FlopCounter* fc)
{
    if (l.rows != l.cols) { throw DimensionError("solve_right_transposed: factor not square"); }
    if (b.cols != l.rows) { throw DimensionError("solve_right_transposed: shape mismatch"); }
    const int m = b.rows;
    const int n = l.rows;
    // X L^T = B column by column: X(:,j) = (B(:,j) - sum_{k<j} X(:,k) L(j,k)) / L(j,j).
    for (int j = 0; j < n; j++) {
        const double ljj = l(j, j);
        if (ljj == 0.0) { throw SingularFactorError("solve_right_transposed: zero diagonal"); }
        for (int k = 0; k < j; k++) {
            const double ljk = l(j, k);
            if (ljk == 0.0) { continue; }
            for (int i = 0; i < m; i++) { b(i, j) -= b(i, k) * ljk; }
        }
        for (int i = 0; i < m; i++) { b(i, j) /= ljj; }
    }
    if (fc) { fc->trsm += Rational(static_cast<std::int64_t>(m) * n * n); }
    return b;
}

void sym_downdate(DenseBlock& c, const DenseBlock& x, FlopCounter* fc)
{
    if (c.rows != c.cols || c.rows != x.rows) { throw DimensionError("sym_downdate: shape mismatch"); }
    const int n = c.rows;
    const int m = x.cols;
    for (int j = 0; j < n; j++) {
        for (int k = 0; k < m; k++) {
            const double xjk = x(j, k);
            if (xjk == 0.0) { continue; }
            for (int i = j; i < n; i++) { c(i, j) -= x(i, k) * xjk; }
        }
    }
    if (fc) { fc->syrk += Rational(static_cast<std::int64_t>(n) * n * m); }
}

void mul_sub(DenseBlock& c, const DenseBlock& a, const DenseBlock& b, FlopCounter* fc)
{
    if (a.rows != c.rows || a.cols != b.rows || b.cols != c.cols) {
        throw DimensionError("mul_sub: shape mismatch");
    }
    const int m = c.rows;
    const int n = c.cols;
    const int kk = a.cols;
    for (int j = 0; j < n; j++) {
        for (int k = 0; k < kk; k++) {
            const double bkj = b(k, j);
            if (bkj == 0.0) { continue; }
            for (int i = 0; i < m; i++) { c(i, j) -= a(i, k) * bkj; }
        }
    }
    if (fc) { fc->gemm += Rational(2 * static_cast<std::int64_t>(m) * kk * n); }
}

void mul_sub_nt(DenseBlock& c, const DenseBlock& a, const DenseBlock& b, FlopCounter* fc)
{
    if (a.rows != c.rows || a.cols != b.cols || b.rows != c.cols) {
        throw DimensionError("mul_sub_nt: shape mismatch");
    }
    const int m = c.rows;
    const int n = c.cols;
    const int kk = a.cols;
    for (int j = 0; j < n; j++) {
        for (int k = 0; k < kk; k++) {
            const double bjk = b(j, k);
            if (bjk == 0.0) { continue; }
            for (int i = 0; i < m; i++) { c(i, j) -= a(i, k) * bjk; }
        }
    }
    if (fc) { fc->gemm += Rational(2 * static_cast<std::int64_t>(m) * kk * n); }
}

void tri_solve_forward(const DenseBlock& l, std::span<double> r, FlopCounter* fc)
{
    const int n = l.rows;
    if (l.cols != n || static_cast<int>(r.size()) != n) {
        throw DimensionError("tri_solve_forward: shape mismatch");
    }
    for (int i = 0; i < n; i++) {
        double s = r[i];
        for (int k = 0; k < i; k++) { s -= l(i, k) * r[k]; }
        const double d = l(i, i);
        if (d == 0.0) { throw SingularFactorError("tri_solve_forward: zero diagonal"); }
        r[i] = s / d;
    }
    if (fc) { fc->trsv += Rational(static_cast<std::int64_t>(n) * n, 2); }
}

void tri_solve_backward(const DenseBlock& l, std::span<double> y, FlopCounter* fc)
{
    const int n = l.rows;
    if (l.cols != n || static_cast<int>(y.size()) != n) {
        throw DimensionError("tri_solve_backward: shape mismatch");
    }
    for (int i = n - 1; i >= 0; i--) {
        double s = y[i];
        for (int k = i + 1; k < n; k++) { s -= l(k, i) * y[k]; }
        const double d = l(i, i);
        if (d == 0.0) { throw SingularFactorError("tri_solve_backward: zero diagonal"); }
        y[i] = s / d;
    }
    if (fc) { fc->trsv += Rational(static_cast<std::int64_t>(n) * n, 2); }
}

void mat_vec_sub(std::span<double> y, const DenseBlock& a, std::span<const double> x, FlopCounter* fc)
{
    if (static_cast<int>(y.size()) != a.rows || static_cast<int>(x.size()) != a.cols) {
        throw DimensionError("mat_vec_sub: shape mismatch");
    }
    for (int j = 0; j < a.cols; j++) {
        const double xj = x[j];
        if (xj == 0.0) { continue; }
        for (int i = 0; i < a.rows; i++) { y[i] -= a(i, j) * xj; }
    }
    if (fc) { fc->gemv += Rational(2 * static_cast<std::int64_t>(a.rows) * a.cols); }
}

void mat_vec_sub_t(std::span<double> y, const DenseBlock& a, std::span<const double> x, FlopCounter* fc)
{
    if (static_cast<int>(y.size()) != a.cols || static_cast<int>(x.size()) != a.rows) {
        throw DimensionError("mat_vec_sub_t: shape mismatch");
    }
    for (int j = 0; j < a.cols; j++) {
        double s = 0.0;
        for (int i = 0; i < a.rows; i++) { s += a(i, j) * x[i]; }
        y[j] -= s;
    }
    if (fc) { fc->gemv += Rational(2 * static_cast<std::int64_t>(a.rows) * a.cols); }
}

} // namespace bta
