#pragma once

#include "bta/matrix.hpp"

namespace bta {

/// Flop tallies of a factorization or substitution pass, split the same way
/// the work is: one counter per segment (parallel phase) plus one for the
/// sequential phase.
struct FlopReport
{
    std::vector<FlopCounter> segment;
    FlopCounter sequential;

    FlopCounter combined() const
    {
        FlopCounter t;
        for (const auto& s : segment) { t += s; }
        t += sequential;
        return t;
    }
};

/// Cholesky factor of the permuted matrix. Storage mirrors the factor's
/// sparsity exactly: hatted D/E/G per segment, the separator-row fill
/// blocks Bt (one per interior stage of segments k >= 1), segment tails F,
/// separator factors A with fill H between consecutive separators, arrow
/// blocks Q over the separator columns, and the corner R.
struct ArrowFactor
{
    PartitionPlan plan;
    std::vector<int> stage_sizes;
    int global_size = 0;

    std::vector<std::vector<DenseBlock>> D;  // lower-triangular
    std::vector<std::vector<DenseBlock>> E;
    std::vector<std::vector<DenseBlock>> G;
    std::vector<std::vector<DenseBlock>> Bt; // [k][i]: block in separator k's row at stage (k,i)
    std::vector<DenseBlock> F;               // [k] valid for k < p-1
    std::vector<DenseBlock> A;               // [k] valid for k >= 1, lower-triangular
    std::vector<DenseBlock> H;               // [k] valid for 1 <= k <= p-2
    std::vector<DenseBlock> Q;               // [k] valid for k >= 1
    DenseBlock R;

    FlopReport factor_flops;

    int num_segments() const { return plan.num_segments(); }
};

/// Two-phase parallel Cholesky factorization of a segmented matrix: each of
/// the `workers` threads eliminates its own segment's interior, then the
/// separator chain and the corner are processed on the calling thread.
/// `workers` must equal plan.threads.
ArrowFactor factorize_parallel(const SegmentedKKT& seg, int workers);

/// Forward substitution on the permuted system: solves L_hat dy = r_hat.
/// `report`, when given, accumulates per-segment and sequential-phase flops.
BlockVector forward_parallel(const ArrowFactor& f, const BlockVector& r_hat,
                             FlopReport* report = nullptr);

/// Backward substitution: solves L_hat^T dx = dy. Sequential phase first
/// (separators and corner), then segments in parallel.
BlockVector backward_parallel(const ArrowFactor& f, const BlockVector& dy,
                              FlopReport* report = nullptr);

/// Permute, factorize, substitute, unpermute. Delegates to the sequential
/// path when plan.threads == 1. Requires M >= 2p.
BlockVector solve(const BlockTridiagArrowMatrix& m, const BlockVector& r,
                  const PartitionPlan& plan);

/// Wall-clock decomposition of one solve: factorization, forward+backward
/// substitution, and everything else (layout, permutation, assembly).
struct SolveTiming
{
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
    double other_seconds = 0.0;

    double total() const { return factor_seconds + solve_seconds + other_seconds; }
};

/// Same as solve(), with optional timing decomposition and flop tallies.
/// On the p == 1 path the tallies land in a single-segment report.
BlockVector solve_timed(const BlockTridiagArrowMatrix& m, const BlockVector& r,
                        const PartitionPlan& plan, SolveTiming* timing = nullptr,
                        FlopReport* factor_flops = nullptr, FlopReport* solve_flops = nullptr);

/// Assembles the factor into a dense lower-triangular matrix in permuted
/// ordering (verification utility: L L^T must reproduce the permuted input).
DenseBlock factor_to_dense(const ArrowFactor& f);

/// Position of interior stage i of segment k in the permuted stage order.
int permuted_stage_position(const PartitionPlan& plan, int k, int i);
/// Position of separator k (k >= 1) in the permuted stage order.
int permuted_separator_position(const PartitionPlan& plan, int k);

} // namespace bta
