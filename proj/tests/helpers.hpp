#pragma once

// Shared test utilities: naive reference implementations and oracles kept
// deliberately independent of the library's kernel code paths.

#include <cmath>
#include <random>
#include <vector>

#include "bta/matrix.hpp"
#include "bta/parallel.hpp"

namespace testutil {

using bta::DenseBlock;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo = -1.0, double hi = 1.0)
{
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline DenseBlock random_block(std::mt19937_64& g, int rows, int cols)
{
    DenseBlock b(rows, cols);
    for (auto& x : b.data) { x = uniform(g); }
    return b;
}

// A = M M^T + shift I, filled on both triangles.
inline DenseBlock random_spd_block(std::mt19937_64& g, int n, double shift)
{
    const DenseBlock m = random_block(g, n, n);
    DenseBlock a(n, n);
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            double s = 0.0;
            for (int k = 0; k < n; k++) { s += m(i, k) * m(j, k); }
            a(i, j) = s;
        }
        a(i, i) += shift;
    }
    return a;
}

// Naive references (plain triple loops, no shortcuts).

inline DenseBlock ref_matmul(const DenseBlock& a, const DenseBlock& b)
{
    DenseBlock c(a.rows, b.cols);
    for (int i = 0; i < a.rows; i++) {
        for (int j = 0; j < b.cols; j++) {
            double s = 0.0;
            for (int k = 0; k < a.cols; k++) { s += a(i, k) * b(k, j); }
            c(i, j) = s;
        }
    }
    return c;
}

inline DenseBlock ref_sub(const DenseBlock& a, const DenseBlock& b)
{
    DenseBlock c = a;
    for (std::size_t i = 0; i < c.data.size(); i++) { c.data[i] -= b.data[i]; }
    return c;
}

inline std::vector<double> ref_matvec(const DenseBlock& a, const std::vector<double>& x)
{
    std::vector<double> y(a.rows, 0.0);
    for (int i = 0; i < a.rows; i++) {
        for (int j = 0; j < a.cols; j++) { y[i] += a(i, j) * x[j]; }
    }
    return y;
}

// Dense forward substitution L y = r on an explicitly assembled factor.
inline std::vector<double> ref_forward(const DenseBlock& l, const std::vector<double>& r)
{
    const int n = l.rows;
    std::vector<double> y(r);
    for (int i = 0; i < n; i++) {
        for (int k = 0; k < i; k++) { y[i] -= l(i, k) * y[k]; }
        y[i] /= l(i, i);
    }
    return y;
}

inline std::vector<double> ref_backward(const DenseBlock& l, const std::vector<double>& y)
{
    const int n = l.rows;
    std::vector<double> x(y);
    for (int i = n - 1; i >= 0; i--) {
        for (int k = i + 1; k < n; k++) { x[i] -= l(k, i) * x[k]; }
        x[i] /= l(i, i);
    }
    return x;
}

// Gaussian elimination with partial pivoting; a second dense-solve route
// that shares nothing with any Cholesky code path.
inline std::vector<double> ref_gauss_solve(DenseBlock a, std::vector<double> b)
{
    const int n = a.rows;
    for (int col = 0; col < n; col++) {
        int piv = col;
        for (int r = col + 1; r < n; r++) {
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) { piv = r; }
        }
        if (piv != col) {
            for (int j = 0; j < n; j++) { std::swap(a(col, j), a(piv, j)); }
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; r++) {
            const double f = a(r, col) / a(col, col);
            for (int j = col; j < n; j++) { a(r, j) -= f * a(col, j); }
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int i = n - 1; i >= 0; i--) {
        double s = b[i];
        for (int j = i + 1; j < n; j++) { s -= a(i, j) * x[j]; }
        x[i] = s / a(i, i);
    }
    return x;
}

// Scalar-level permutation (new index -> old index) induced by a partition
// plan on a matrix with the given stage sizes; the global block stays last.
inline std::vector<int> scalar_permutation(const bta::PartitionPlan& plan,
                                           const std::vector<int>& stage_sizes, int global_size)
{
    const int M = static_cast<int>(stage_sizes.size());
    const bta::StagePermutation perm = bta::permutation_of(plan, M);
    std::vector<int> offset(M + 1, 0);
    for (int i = 0; i < M; i++) { offset[i + 1] = offset[i] + stage_sizes[i]; }
    std::vector<int> map;
    for (int pos = 0; pos < M; pos++) {
        const int old_stage = perm.permuted_to_original[pos];
        for (int k = 0; k < stage_sizes[old_stage]; k++) { map.push_back(offset[old_stage] + k); }
    }
    const int base = offset[M];
    for (int k = 0; k < global_size; k++) { map.push_back(base + k); }
    return map;
}

inline DenseBlock permute_dense(const DenseBlock& a, const std::vector<int>& new_to_old)
{
    const int n = a.rows;
    DenseBlock out(n, n);
    for (int j = 0; j < n; j++) {
        for (int i = 0; i < n; i++) { out(i, j) = a(new_to_old[i], new_to_old[j]); }
    }
    return out;
}

inline double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) { m = std::max(m, std::abs(x)); }
    return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) { m = std::max(m, std::abs(a[i] - b[i])); }
    return m;
}

} // namespace testutil
