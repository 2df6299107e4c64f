#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bta/rational.hpp"

namespace bta {

/// Dense column-major block of doubles. For symmetric blocks only the lower
/// triangle is authoritative; the upper triangle may hold garbage.
struct DenseBlock
{
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // column-major, size rows*cols

    DenseBlock() = default;
    DenseBlock(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    static DenseBlock identity(int n)
    {
        DenseBlock b(n, n);
        for (int i = 0; i < n; i++) { b(i, i) = 1.0; }
        return b;
    }

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(j) * rows + i]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(j) * rows + i]; }

    bool empty() const { return rows == 0 || cols == 0; }

    void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
};

DenseBlock transpose(const DenseBlock& a);

/// Mirrors the lower triangle into the upper one (square blocks only).
void symmetrize_from_lower(DenseBlock& a);

/// max_ij |a_ij - b_ij|; blocks must have identical shape.
double max_abs_diff(const DenseBlock& a, const DenseBlock& b);

double inf_norm(const DenseBlock& a);
double inf_norm(std::span<const double> v);

/// Per-category flop tallies in exact rational arithmetic. The quanta follow
/// the usual BLAS conventions (potrf b^3/3, trsm m*b^2, syrk n^2*m, gemm
/// 2*m*k*n, trsv b^2/2, gemv 2*m*n), so table checks are exact equalities.
struct FlopCounter
{
    Rational potrf;
    Rational trsm;
    Rational syrk;
    Rational gemm;
    Rational trsv;
    Rational gemv;

    Rational total() const { return potrf + trsm + syrk + gemm + trsv + gemv; }

    FlopCounter& operator+=(const FlopCounter& o)
    {
        potrf += o.potrf;
        trsm += o.trsm;
        syrk += o.syrk;
        gemm += o.gemm;
        trsv += o.trsv;
        gemv += o.gemv;
        return *this;
    }
};

// Block kernels. All are plain loops over column-major storage; `fc` may be
// null when no instrumentation is wanted. Factor-producing kernels take their
// input by value and work in place on the copy.

/// Lower Cholesky factor of a symmetric positive definite block; only the
/// lower triangle of `a` is read. Throws NotPositiveDefiniteError (with the
/// failing row index) when a pivot is not strictly positive.
DenseBlock chol_lower(DenseBlock a, FlopCounter* fc = nullptr);

/// X such that X L^T = B for lower-triangular L (right-solve against the
/// transposed factor, the trsm of the factorization recurrences).
DenseBlock solve_right_transposed(DenseBlock b, const DenseBlock& l, FlopCounter* fc = nullptr);

/// C -= X X^T, updating only the lower triangle of C.
void sym_downdate(DenseBlock& c, const DenseBlock& x, FlopCounter* fc = nullptr);

/// C -= A B.
void mul_sub(DenseBlock& c, const DenseBlock& a, const DenseBlock& b, FlopCounter* fc = nullptr);

/// C -= A B^T.
void mul_sub_nt(DenseBlock& c, const DenseBlock& a, const DenseBlock& b, FlopCounter* fc = nullptr);

/// In-place forward substitution r <- L^-1 r.
void tri_solve_forward(const DenseBlock& l, std::span<double> r, FlopCounter* fc = nullptr);

/// In-place backward substitution y <- L^-T y.
void tri_solve_backward(const DenseBlock& l, std::span<double> y, FlopCounter* fc = nullptr);

/// y -= A x.
void mat_vec_sub(std::span<double> y, const DenseBlock& a, std::span<const double> x,
                 FlopCounter* fc = nullptr);

/// y -= A^T x.
void mat_vec_sub_t(std::span<double> y, const DenseBlock& a, std::span<const double> x,
                   FlopCounter* fc = nullptr);

} // namespace bta
