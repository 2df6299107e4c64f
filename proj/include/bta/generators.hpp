#pragma once

#include <cstdint>

#include "bta/matrix.hpp"

namespace bta {

/// Deterministic random SPD block-tridiagonal-arrow system. Off-diagonal
/// blocks have entries uniform in [-1, 1]; diagonal blocks are G G^T plus
/// a diagonal shift covering the adjacent row-coupling bound plus
/// `dominance`, which makes the assembled matrix strictly block diagonally
/// dominant and hence SPD.
BlockTridiagArrowMatrix random_spd_bta(int stages, int block_size, int global_size,
                                       std::uint64_t seed, double dominance = 1.0);

/// Random right-hand side with entries uniform in [-1, 1], matching `m`.
BlockVector random_rhs(const BlockTridiagArrowMatrix& m, std::uint64_t seed);

/// Relative residual ||m x - r||_inf / (||m||_inf ||x||_inf + ||r||_inf),
/// computed blockwise without assembling the dense matrix.
double relative_residual(const BlockTridiagArrowMatrix& m, const BlockVector& x,
                         const BlockVector& r);

/// m x computed blockwise.
BlockVector multiply(const BlockTridiagArrowMatrix& m, const BlockVector& x);

} // namespace bta
