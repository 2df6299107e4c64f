#pragma once

#include "bta/matrix.hpp"

namespace bta {

/// Lower block-bidiagonal Cholesky factor with arrow row, produced by the
/// stage-by-stage sequential recurrence.
struct SequentialFactor
{
    std::vector<DenseBlock> diag;  // lower-triangular L_ii
    std::vector<DenseBlock> sub;   // L_{i+1,i}
    std::vector<DenseBlock> arrow; // L_{g,i}, present when global_size > 0
    DenseBlock corner;             // lower-triangular L_gg
    std::vector<int> stage_sizes;
    int global_size = 0;

    FlopCounter factor_flops;
};

SequentialFactor factorize_sequential(const BlockTridiagArrowMatrix& m);

/// Forward/backward substitution on the sequential factor. `solve_flops`,
/// when given, accumulates the tallies of both sweeps.
BlockVector solve_sequential(const SequentialFactor& f, const BlockVector& r,
                             FlopCounter* solve_flops = nullptr);

/// Dense Cholesky solve on a fully assembled matrix; the reference for the
/// equivalence tests. Self-contained scalar loops, independent of the block
/// kernels.
std::vector<double> solve_dense_oracle(const DenseBlock& dense, std::span<const double> rhs);

/// Dense lower Cholesky factor used by the oracle (exposed for tests that
/// compare factors directly).
DenseBlock dense_cholesky_oracle(const DenseBlock& dense);

} // namespace bta
