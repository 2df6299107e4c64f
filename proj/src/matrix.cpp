#include "bta/matrix.hpp"

#include <cmath>
#include <numeric>

#include "bta/errors.hpp"

namespace bta {

int BlockTridiagArrowMatrix::total_dim() const
{
    return std::accumulate(stage_sizes.begin(), stage_sizes.end(), 0) + global_size;
}

int BlockVector::total_dim() const
{
    int n = static_cast<int>(global.size());
    for (const auto& s : stages) { n += static_cast<int>(s.size()); }
    return n;
}

BlockVector BlockVector::zeros_like(const BlockTridiagArrowMatrix& m)
{
    BlockVector v;
    v.stages.reserve(m.stage_sizes.size());
    for (int n : m.stage_sizes) { v.stages.emplace_back(n, 0.0); }
    v.global.assign(m.global_size, 0.0);
    return v;
}

std::vector<double> BlockVector::flatten() const
{
    std::vector<double> out;
    out.reserve(total_dim());
    for (const auto& s : stages) { out.insert(out.end(), s.begin(), s.end()); }
    out.insert(out.end(), global.begin(), global.end());
    return out;
}

BlockVector BlockVector::from_flat(std::span<const double> v, const std::vector<int>& stage_sizes,
                                   int global_size)
{
    BlockVector out;
    std::size_t pos = 0;
    for (int n : stage_sizes) {
        out.stages.emplace_back(v.begin() + pos, v.begin() + pos + n);
        pos += n;
    }
    out.global.assign(v.begin() + pos, v.begin() + pos + global_size);
    return out;
}

int PartitionPlan::total_stages() const
{
    return std::accumulate(seg_lengths.begin(), seg_lengths.end(), 0) + num_segments() - 1;
}

int PartitionPlan::segment_offset(int k) const
{
    int off = 0;
    for (int j = 0; j < k; j++) { off += seg_lengths[j] + 1; }
    return off;
}

void PartitionPlan::validate(int stages) const
{
    if (threads < 1) { throw PlanError("plan: thread count must be >= 1"); }
    if (threads != num_segments()) {
        throw PlanError("plan: thread count does not match segment count");
    }
    for (int n : seg_lengths) {
        if (n < 1) { throw PlanError("plan: segment lengths must be >= 1"); }
    }
    if (total_stages() != stages) {
        throw PlanError("plan: segment lengths and separators do not cover " +
                        std::to_string(stages) + " stages");
    }
}

std::vector<std::string> validate(const BlockTridiagArrowMatrix& m)
{
    std::vector<std::string> errs;
    const int M = m.num_stages();
    const int ng = m.global_size;

    auto all_finite = [](const DenseBlock& b) {
        for (double x : b.data) {
            if (!std::isfinite(x)) { return false; }
        }
        return true;
    };

    if (M == 0) {
        errs.push_back("matrix has no stages");
        return errs;
    }
    if (static_cast<int>(m.diag.size()) != M) {
        errs.push_back("diag block count != stage count");
        return errs;
    }
    if (static_cast<int>(m.sub.size()) != M - 1) {
        errs.push_back("sub block count != stage count - 1");
        return errs;
    }

    for (int i = 0; i < M; i++) {
        const DenseBlock& d = m.diag[i];
        if (d.rows != m.stage_sizes[i] || d.cols != m.stage_sizes[i]) {
            errs.push_back("diag[" + std::to_string(i) + "] has wrong dimensions");
            continue;
        }
        if (!all_finite(d)) { errs.push_back("diag[" + std::to_string(i) + "] has non-finite entries"); }
        // Symmetry of the authoritative lower triangle against the stored upper
        // part, when the caller filled both.
        double asym = 0.0;
        double scale = 0.0;
        for (int c = 0; c < d.cols; c++) {
            for (int r = c; r < d.rows; r++) {
                asym = std::max(asym, std::abs(d(r, c) - d(c, r)));
                scale = std::max(scale, std::abs(d(r, c)));
            }
        }
        const bool upper_filled = [&] {
            for (int c = 0; c < d.cols; c++) {
                for (int r = 0; r < c; r++) {
                    if (d(r, c) != 0.0) { return true; }
                }
            }
            return false;
        }();
        if (upper_filled && asym > 1e-12 * std::max(scale, 1.0)) {
            errs.push_back("diag[" + std::to_string(i) + "] is not symmetric");
        }
    }
    for (int i = 0; i + 1 < M; i++) {
        const DenseBlock& s = m.sub[i];
        if (s.rows != m.stage_sizes[i + 1] || s.cols != m.stage_sizes[i]) {
            errs.push_back("sub[" + std::to_string(i) + "] has wrong dimensions");
        } else if (!all_finite(s)) {
            errs.push_back("sub[" + std::to_string(i) + "] has non-finite entries");
        }
    }

    if (ng > 0) {
        if (static_cast<int>(m.arrow.size()) != M) {
            errs.push_back("arrow block count != stage count");
        } else {
            for (int i = 0; i < M; i++) {
                const DenseBlock& g = m.arrow[i];
                if (g.rows != ng || g.cols != m.stage_sizes[i]) {
                    errs.push_back("arrow[" + std::to_string(i) + "] has wrong dimensions");
                } else if (!all_finite(g)) {
                    errs.push_back("arrow[" + std::to_string(i) + "] has non-finite entries");
                }
            }
        }
        if (m.corner.rows != ng || m.corner.cols != ng) {
            errs.push_back("corner has wrong dimensions");
        } else if (!all_finite(m.corner)) {
            errs.push_back("corner has non-finite entries");
        }
    } else {
        if (!m.arrow.empty()) { errs.push_back("arrow blocks present but global size is 0"); }
        if (!m.corner.empty()) { errs.push_back("corner present but global size is 0"); }
    }
    return errs;
}

StagePermutation permutation_of(const PartitionPlan& plan, int stages)
{
    plan.validate(stages);
    StagePermutation perm;
    perm.permuted_to_original.reserve(stages);
    const int p = plan.num_segments();
    for (int k = 0; k < p; k++) {
        const int off = plan.segment_offset(k);
        for (int i = 0; i < plan.seg_lengths[k]; i++) { perm.permuted_to_original.push_back(off + i); }
    }
    for (int k = 1; k < p; k++) { perm.permuted_to_original.push_back(plan.separator_index(k)); }
    perm.original_to_permuted.assign(stages, 0);
    for (int pos = 0; pos < stages; pos++) {
        perm.original_to_permuted[perm.permuted_to_original[pos]] = pos;
    }
    return perm;
}

SegmentedKKT make_layout(const BlockTridiagArrowMatrix& m, const PartitionPlan& plan)
{
    const int M = m.num_stages();
    plan.validate(M);
    const int p = plan.num_segments();
    if (p > 1) {
        for (int n : m.stage_sizes) {
            if (n != m.stage_sizes[0]) {
                throw PlanError("make_layout: non-uniform stage sizes require a single segment");
            }
        }
    }

    SegmentedKKT seg;
    seg.plan = plan;
    seg.block_size = m.stage_sizes[0];
    seg.global_size = m.global_size;
    seg.D.resize(p);
    seg.E.resize(p);
    seg.G.resize(p);
    seg.B.resize(p);
    seg.F.resize(p);
    seg.A.resize(p);
    seg.Q.resize(p);

    for (int k = 0; k < p; k++) {
        const int nk = plan.seg_lengths[k];
        const int off = plan.segment_offset(k);
        for (int i = 0; i < nk; i++) {
            seg.D[k].push_back(m.diag[off + i]);
            seg.stage_sizes.push_back(m.stage_sizes[off + i]);
            if (i + 1 < nk) { seg.E[k].push_back(m.sub[off + i]); }
            if (m.global_size > 0) { seg.G[k].push_back(m.arrow[off + i]); }
        }
        if (k >= 1) {
            const int s = plan.separator_index(k);
            seg.A[k] = m.diag[s];
            seg.B[k] = transpose(m.sub[s]); // block in the separator's row
            if (m.global_size > 0) { seg.Q[k] = m.arrow[s]; }
        }
        if (k + 1 < p) {
            seg.F[k] = m.sub[off + nk - 1]; // last interior stage -> next separator
        }
    }
    seg.R = m.corner;
    return seg;
}

BlockTridiagArrowMatrix reassemble(const SegmentedKKT& seg)
{
    const PartitionPlan& plan = seg.plan;
    const int p = plan.num_segments();
    const int M = plan.total_stages();

    BlockTridiagArrowMatrix m;
    m.global_size = seg.global_size;
    m.stage_sizes.assign(M, 0);
    m.diag.resize(M);
    m.sub.resize(M - 1);
    if (seg.global_size > 0) { m.arrow.resize(M); }
    m.corner = seg.R;

    int interior = 0;
    for (int k = 0; k < p; k++) {
        const int nk = plan.seg_lengths[k];
        const int off = plan.segment_offset(k);
        for (int i = 0; i < nk; i++) {
            m.diag[off + i] = seg.D[k][i];
            m.stage_sizes[off + i] = seg.stage_sizes[interior++];
            if (i + 1 < nk) { m.sub[off + i] = seg.E[k][i]; }
            if (seg.global_size > 0) { m.arrow[off + i] = seg.G[k][i]; }
        }
        if (k >= 1) {
            const int s = plan.separator_index(k);
            m.diag[s] = seg.A[k];
            m.stage_sizes[s] = seg.A[k].rows;
            m.sub[s] = transpose(seg.B[k]);
            if (seg.global_size > 0) { m.arrow[s] = seg.Q[k]; }
        }
        if (k + 1 < p) { m.sub[off + nk - 1] = seg.F[k]; }
    }
    return m;
}

BlockVector permute_rhs(const BlockVector& r, const PartitionPlan& plan)
{
    const int M = r.num_stages();
    const StagePermutation perm = permutation_of(plan, M);
    BlockVector out;
    out.stages.reserve(M);
    for (int pos = 0; pos < M; pos++) { out.stages.push_back(r.stages[perm.permuted_to_original[pos]]); }
    out.global = r.global;
    return out;
}

BlockVector unpermute_solution(const BlockVector& x_hat, const PartitionPlan& plan)
{
    const int M = x_hat.num_stages();
    const StagePermutation perm = permutation_of(plan, M);
    BlockVector out;
    out.stages.resize(M);
    for (int pos = 0; pos < M; pos++) { out.stages[perm.permuted_to_original[pos]] = x_hat.stages[pos]; }
    out.global = x_hat.global;
    return out;
}

DenseBlock to_dense(const BlockTridiagArrowMatrix& m)
{
    const int M = m.num_stages();
    const int n = m.total_dim();
    std::vector<int> offset(M + 1, 0);
    for (int i = 0; i < M; i++) { offset[i + 1] = offset[i] + m.stage_sizes[i]; }
    const int g0 = offset[M];

    DenseBlock dense(n, n);
    for (int i = 0; i < M; i++) {
        const DenseBlock& d = m.diag[i];
        for (int c = 0; c < d.cols; c++) {
            for (int r = c; r < d.rows; r++) {
                dense(offset[i] + r, offset[i] + c) = d(r, c);
                dense(offset[i] + c, offset[i] + r) = d(r, c);
            }
        }
        if (i + 1 < M) {
            const DenseBlock& s = m.sub[i];
            for (int c = 0; c < s.cols; c++) {
                for (int r = 0; r < s.rows; r++) {
                    dense(offset[i + 1] + r, offset[i] + c) = s(r, c);
                    dense(offset[i] + c, offset[i + 1] + r) = s(r, c);
                }
            }
        }
        if (m.global_size > 0) {
            const DenseBlock& g = m.arrow[i];
            for (int c = 0; c < g.cols; c++) {
                for (int r = 0; r < g.rows; r++) {
                    dense(g0 + r, offset[i] + c) = g(r, c);
                    dense(offset[i] + c, g0 + r) = g(r, c);
                }
            }
        }
    }
    if (m.global_size > 0) {
        for (int c = 0; c < m.global_size; c++) {
            for (int r = c; r < m.global_size; r++) {
                dense(g0 + r, g0 + c) = m.corner(r, c);
                dense(g0 + c, g0 + r) = m.corner(r, c);
            }
        }
    }
    return dense;
}

} // namespace bta
