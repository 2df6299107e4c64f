#pragma once

#include <string>
#include <vector>

#include "bta/dense.hpp"

namespace bta {

/// Symmetric positive definite matrix in block-tridiagonal-arrow form:
/// stage diagonal blocks, sub-diagonal couplings between consecutive stages,
/// an optional dense arrow row coupling every stage to a global block, and
/// the arrow corner. Only the lower triangle is stored.
struct BlockTridiagArrowMatrix
{
    std::vector<int> stage_sizes;  // n_1..n_M
    std::vector<DenseBlock> diag;  // M symmetric blocks, lower triangle authoritative
    std::vector<DenseBlock> sub;   // M-1 blocks, sub[i] couples stage i -> i+1 (n_{i+1} x n_i)
    std::vector<DenseBlock> arrow; // M blocks (n_g x n_i), empty when n_g == 0
    DenseBlock corner;             // n_g x n_g, symmetric
    int global_size = 0;

    int num_stages() const { return static_cast<int>(stage_sizes.size()); }
    int total_dim() const;
};

/// Stage-partitioned vector matching a BlockTridiagArrowMatrix.
struct BlockVector
{
    std::vector<std::vector<double>> stages;
    std::vector<double> global;

    int num_stages() const { return static_cast<int>(stages.size()); }
    int total_dim() const;

    static BlockVector zeros_like(const BlockTridiagArrowMatrix& m);

    std::vector<double> flatten() const;
    static BlockVector from_flat(std::span<const double> v, const std::vector<int>& stage_sizes,
                                 int global_size);
};

/// Partition of M stages into p segments of interior stages separated by
/// p-1 single-stage separators: sum(seg_lengths) + p - 1 == M.
struct PartitionPlan
{
    int threads = 1;
    std::vector<int> seg_lengths;

    int num_segments() const { return static_cast<int>(seg_lengths.size()); }
    int total_stages() const;

    /// Global (0-based) index of the first interior stage of segment k.
    int segment_offset(int k) const;
    /// Global (0-based) index of the separator preceding segment k (k >= 1).
    int separator_index(int k) const { return segment_offset(k) - 1; }

    /// Throws PlanError unless threads == #segments, all lengths >= 1 and
    /// the stage-count identity holds for `stages`.
    void validate(int stages) const;

    static PartitionPlan single(int stages) { return {1, {stages}}; }
};

/// The matrix relabeled into per-segment groups: interior diagonals D,
/// intra-segment couplings E, arrow blocks G, separator diagonals A with
/// arrow blocks Q, segment-to-separator couplings F, separator-to-segment
/// couplings B (stored as they appear in the separator's row, i.e.
/// transposed relative to the sub-diagonal storage), and the corner R.
/// Pure relabeling of the source matrix; no arithmetic.
struct SegmentedKKT
{
    PartitionPlan plan;
    std::vector<int> stage_sizes; // per interior stage, segment by segment
    int block_size = 0;           // uniform stage size; equals stage_sizes[0] when uniform
    int global_size = 0;

    std::vector<std::vector<DenseBlock>> D; // [k][i], i < N_k
    std::vector<std::vector<DenseBlock>> E; // [k][i], i < N_k - 1
    std::vector<std::vector<DenseBlock>> G; // [k][i], present when global_size > 0
    std::vector<DenseBlock> B;              // [k] valid for k >= 1
    std::vector<DenseBlock> F;              // [k] valid for k < p-1
    std::vector<DenseBlock> A;              // [k] valid for k >= 1
    std::vector<DenseBlock> Q;              // [k] valid for k >= 1, present when global_size > 0
    DenseBlock R;

    int num_segments() const { return plan.num_segments(); }
};

/// Old-stage-index <-> permuted-position maps for a plan: interiors segment
/// by segment, then separators in order, the global block staying last.
struct StagePermutation
{
    std::vector<int> permuted_to_original; // [new position] = old stage index
    std::vector<int> original_to_permuted; // inverse
};

/// Checks dimension conformance, symmetry of diagonal blocks and finiteness;
/// returns one message per violation (empty means valid).
std::vector<std::string> validate(const BlockTridiagArrowMatrix& m);

StagePermutation permutation_of(const PartitionPlan& plan, int stages);

/// Relabels `m` under `plan`. Requires uniform stage sizes when plan has
/// more than one segment.
SegmentedKKT make_layout(const BlockTridiagArrowMatrix& m, const PartitionPlan& plan);

BlockVector permute_rhs(const BlockVector& r, const PartitionPlan& plan);
BlockVector unpermute_solution(const BlockVector& x_hat, const PartitionPlan& plan);

/// Full symmetric dense assembly (both triangles filled).
DenseBlock to_dense(const BlockTridiagArrowMatrix& m);

/// Reassembles the original-ordered matrix from a segmented view
/// (exact inverse of make_layout; used by round-trip checks).
BlockTridiagArrowMatrix reassemble(const SegmentedKKT& seg);

} // namespace bta
