#include "bta/parallel.hpp"

#include <chrono>
#include <exception>
#include <functional>
#include <thread>
#include <utility>

#include "bta/errors.hpp"
#include "bta/sequential.hpp"

namespace bta {

namespace {

// Fork-join over segment indices 0..p-1. The caller runs segment 0 (the
// longest one); worker exceptions are re-thrown in ascending segment order
// so error reports are deterministic.
void run_fork_join(int p, const std::function<void(int)>& task)
{
    if (p == 1) {
        task(0);
        return;
    }
    std::vector<std::exception_ptr> errors(p);
    std::vector<std::thread> threads;
    threads.reserve(p - 1);
    for (int k = 1; k < p; k++) {
        threads.emplace_back([&, k] {
            try {
                task(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    try {
        task(0);
    } catch (...) {
        errors[0] = std::current_exception();
    }
    for (auto& t : threads) { t.join(); }
    for (int k = 0; k < p; k++) {
        if (errors[k]) { std::rethrow_exception(errors[k]); }
    }
}

} // namespace

int permuted_stage_position(const PartitionPlan& plan, int k, int i)
{
    int pos = 0;
    for (int j = 0; j < k; j++) { pos += plan.seg_lengths[j]; }
    return pos + i;
}

int permuted_separator_position(const PartitionPlan& plan, int k)
{
    int interiors = 0;
    for (int n : plan.seg_lengths) { interiors += n; }
    return interiors + k - 1;
}

ArrowFactor factorize_parallel(const SegmentedKKT& seg, int workers)
{
    const PartitionPlan& plan = seg.plan;
    const int p = plan.num_segments();
    if (workers != plan.threads) {
        throw PlanError("factorize_parallel: worker count does not match plan");
    }
    const int ng = seg.global_size;

    ArrowFactor f;
    f.plan = plan;
    f.stage_sizes = seg.stage_sizes;
    f.global_size = ng;
    f.D = seg.D;
    f.E = seg.E;
    f.G = seg.G;
    f.Bt.resize(p);
    f.F.resize(p);
    f.A = seg.A;
    f.H.resize(p);
    f.Q = seg.Q;
    f.factor_flops.segment.resize(p);

    // Per-segment corner accumulators, merged in ascending order afterwards.
    std::vector<DenseBlock> corner_local;
    if (ng > 0) { corner_local.assign(p, DenseBlock(ng, ng)); }

    // Parallel phase: eliminate each segment's interior independently.
    run_fork_join(p, [&](int k) {
        FlopCounter* fc = &f.factor_flops.segment[k];
        const int nk = plan.seg_lengths[k];
        auto& D = f.D[k];
        auto& E = f.E[k];
        auto& G = f.G[k];

        if (k > 0) {
            f.Bt[k].resize(nk);
            f.Bt[k][0] = seg.B[k];
            for (int i = 1; i < nk; i++) {
                f.Bt[k][i] = DenseBlock(seg.B[k].rows, seg.B[k].cols);
            }
        }

        for (int i = 0; i < nk; i++) {
            try {
                D[i] = chol_lower(std::move(D[i]), fc);
            } catch (const NotPositiveDefiniteError&) {
                throw NotPositiveDefiniteError("factorize_parallel: not positive definite at "
                                               "segment " + std::to_string(k + 1) + ", stage " +
                                                   std::to_string(i + 1),
                                               permuted_stage_position(plan, k, i));
            }
            if (i + 1 < nk) { E[i] = solve_right_transposed(std::move(E[i]), D[i], fc); }
            if (ng > 0) {
                G[i] = solve_right_transposed(std::move(G[i]), D[i], fc);
                sym_downdate(corner_local[k], G[i], fc);
            }
            if (i + 1 < nk) { sym_downdate(D[i + 1], E[i], fc); }
            if (ng > 0 && i + 1 < nk) { mul_sub_nt(G[i + 1], G[i], E[i], fc); }
            if (k > 0) {
                f.Bt[k][i] = solve_right_transposed(std::move(f.Bt[k][i]), D[i], fc);
                sym_downdate(f.A[k], f.Bt[k][i], fc);
                if (i + 1 < nk) { mul_sub_nt(f.Bt[k][i + 1], f.Bt[k][i], E[i], fc); }
                if (ng > 0) { mul_sub_nt(f.Q[k], G[i], f.Bt[k][i], fc); }
            }
        }
        if (k + 1 < p) { f.F[k] = solve_right_transposed(seg.F[k], D[nk - 1], fc); }
        if (k > 0 && k + 1 < p) {
            f.H[k] = DenseBlock(f.F[k].rows, f.Bt[k].back().rows);
            mul_sub_nt(f.H[k], f.F[k], f.Bt[k].back(), fc);
        }
    });

    // Sequential phase: separator chain, then the corner.
    FlopCounter* sc = &f.factor_flops.sequential;
    f.R = seg.R;
    for (int k = 1; k < p; k++) {
        sym_downdate(f.A[k], f.F[k - 1], sc);
        try {
            f.A[k] = chol_lower(std::move(f.A[k]), sc);
        } catch (const NotPositiveDefiniteError&) {
            throw NotPositiveDefiniteError(
                "factorize_parallel: not positive definite at separator " + std::to_string(k),
                permuted_separator_position(plan, k));
        }
        if (k + 1 < p) { f.H[k] = solve_right_transposed(std::move(f.H[k]), f.A[k], sc); }
        if (ng > 0) {
            mul_sub_nt(f.Q[k], f.G[k - 1].back(), f.F[k - 1], sc);
            f.Q[k] = solve_right_transposed(std::move(f.Q[k]), f.A[k], sc);
        }
        if (k + 1 < p) {
            sym_downdate(f.A[k + 1], f.H[k], sc);
            if (ng > 0) { mul_sub_nt(f.Q[k + 1], f.Q[k], f.H[k], sc); }
        }
        if (ng > 0) { sym_downdate(f.R, f.Q[k], sc); }
    }
    if (ng > 0) {
        for (int k = 0; k < p; k++) {
            for (std::size_t idx = 0; idx < f.R.data.size(); idx++) {
                f.R.data[idx] += corner_local[k].data[idx];
            }
        }
        try {
            f.R = chol_lower(std::move(f.R), sc);
        } catch (const NotPositiveDefiniteError&) {
            throw NotPositiveDefiniteError("factorize_parallel: corner not positive definite", -1);
        }
    }
    return f;
}

BlockVector forward_parallel(const ArrowFactor& f, const BlockVector& r_hat, FlopReport* report)
{
    const PartitionPlan& plan = f.plan;
    const int p = plan.num_segments();
    const int ng = f.global_size;
    if (report && report->segment.empty()) { report->segment.resize(p); }

    BlockVector y = r_hat; // worked on in place, stage order is already permuted
    std::vector<std::vector<double>> yg_local;
    if (ng > 0) { yg_local.assign(p, std::vector<double>(ng, 0.0)); }

    run_fork_join(p, [&](int k) {
        FlopCounter* fc = report ? &report->segment[k] : nullptr;
        const int nk = plan.seg_lengths[k];
        const int base = permuted_stage_position(plan, k, 0);
        auto* sep = k > 0 ? &y.stages[permuted_separator_position(plan, k)] : nullptr;
        for (int i = 0; i < nk; i++) {
            auto& yi = y.stages[base + i];
            tri_solve_forward(f.D[k][i], yi, fc);
            if (i + 1 < nk) { mat_vec_sub(y.stages[base + i + 1], f.E[k][i], yi, fc); }
            if (k > 0) { mat_vec_sub(*sep, f.Bt[k][i], yi, fc); }
            if (ng > 0) { mat_vec_sub(yg_local[k], f.G[k][i], yi, fc); }
        }
    });

    FlopCounter* sc = report ? &report->sequential : nullptr;
    if (ng > 0) {
        for (int k = 0; k < p; k++) {
            for (int j = 0; j < ng; j++) { y.global[j] += yg_local[k][j]; }
        }
    }
    for (int k = 1; k < p; k++) {
        auto& sep = y.stages[permuted_separator_position(plan, k)];
        const int tail = permuted_stage_position(plan, k - 1, plan.seg_lengths[k - 1] - 1);
        mat_vec_sub(sep, f.F[k - 1], y.stages[tail], sc);
        tri_solve_forward(f.A[k], sep, sc);
        if (k + 1 < p) {
            mat_vec_sub(y.stages[permuted_separator_position(plan, k + 1)], f.H[k], sep, sc);
        }
        if (ng > 0) { mat_vec_sub(y.global, f.Q[k], sep, sc); }
    }
    if (ng > 0) { tri_solve_forward(f.R, y.global, sc); }
    return y;
}

BlockVector backward_parallel(const ArrowFactor& f, const BlockVector& dy, FlopReport* report)
{
    const PartitionPlan& plan = f.plan;
    const int p = plan.num_segments();
    const int ng = f.global_size;
    if (report && report->segment.empty()) { report->segment.resize(p); }

    BlockVector x = dy;
    FlopCounter* sc = report ? &report->sequential : nullptr;

    if (ng > 0) { tri_solve_backward(f.R, x.global, sc); }
    for (int k = p - 1; k >= 1; k--) {
        auto& sep = x.stages[permuted_separator_position(plan, k)];
        if (ng > 0) { mat_vec_sub_t(sep, f.Q[k], x.global, sc); }
        if (k + 1 < p) {
            mat_vec_sub_t(sep, f.H[k], x.stages[permuted_separator_position(plan, k + 1)], sc);
        }
        tri_solve_backward(f.A[k], sep, sc);
    }

    run_fork_join(p, [&](int k) {
        FlopCounter* fc = report ? &report->segment[k] : nullptr;
        const int nk = plan.seg_lengths[k];
        const int base = permuted_stage_position(plan, k, 0);
        if (k + 1 < p) {
            mat_vec_sub_t(x.stages[base + nk - 1], f.F[k],
                          x.stages[permuted_separator_position(plan, k + 1)], fc);
        }
        const auto* sep = k > 0 ? &x.stages[permuted_separator_position(plan, k)] : nullptr;
        for (int i = nk - 1; i >= 0; i--) {
            auto& xi = x.stages[base + i];
            if (ng > 0) { mat_vec_sub_t(xi, f.G[k][i], x.global, fc); }
            if (k > 0) { mat_vec_sub_t(xi, f.Bt[k][i], *sep, fc); }
            tri_solve_backward(f.D[k][i], xi, fc);
            if (i > 0) { mat_vec_sub_t(x.stages[base + i - 1], f.E[k][i - 1], xi, fc); }
        }
    });
    return x;
}

BlockVector solve(const BlockTridiagArrowMatrix& m, const BlockVector& r, const PartitionPlan& plan)
{
    return solve_timed(m, r, plan);
}

BlockVector solve_timed(const BlockTridiagArrowMatrix& m, const BlockVector& r,
                        const PartitionPlan& plan, SolveTiming* timing, FlopReport* factor_flops,
                        FlopReport* solve_flops)
{
    using clock = std::chrono::steady_clock;
    const auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    const int M = m.num_stages();
    plan.validate(M);
    const int p = plan.threads;

    if (p == 1) {
        // One segment with no separators is exactly the sequential recurrence.
        auto t0 = clock::now();
        SequentialFactor f = factorize_sequential(m);
        if (timing) { timing->factor_seconds = seconds_since(t0); }
        if (factor_flops) {
            factor_flops->segment.assign(1, f.factor_flops);
        }
        FlopCounter solve_fc;
        t0 = clock::now();
        BlockVector x = solve_sequential(f, r, solve_flops ? &solve_fc : nullptr);
        if (timing) { timing->solve_seconds = seconds_since(t0); }
        if (solve_flops) { solve_flops->segment.assign(1, solve_fc); }
        return x;
    }

    if (M < 2 * p) {
        throw PlanError("solve: infeasible plan, requires M >= 2p (M=" + std::to_string(M) +
                        ", p=" + std::to_string(p) + ")");
    }

    auto t0 = clock::now();
    SegmentedKKT seg = make_layout(m, plan);
    BlockVector r_hat = permute_rhs(r, plan);
    if (timing) { timing->other_seconds += seconds_since(t0); }

    t0 = clock::now();
    ArrowFactor f = factorize_parallel(seg, p);
    if (timing) { timing->factor_seconds = seconds_since(t0); }
    if (factor_flops) { *factor_flops = f.factor_flops; }

    t0 = clock::now();
    BlockVector dy = forward_parallel(f, r_hat, solve_flops);
    BlockVector dx_hat = backward_parallel(f, dy, solve_flops);
    if (timing) { timing->solve_seconds = seconds_since(t0); }

    t0 = clock::now();
    BlockVector x = unpermute_solution(dx_hat, plan);
    if (timing) { timing->other_seconds += seconds_since(t0); }
    return x;
}

DenseBlock factor_to_dense(const ArrowFactor& f)
{
    const PartitionPlan& plan = f.plan;
    const int p = plan.num_segments();
    const int M = plan.total_stages();
    const int ng = f.global_size;

    // Scalar offsets per permuted stage position.
    std::vector<int> size_at(M, 0);
    for (int k = 0; k < p; k++) {
        for (int i = 0; i < plan.seg_lengths[k]; i++) {
            size_at[permuted_stage_position(plan, k, i)] = f.D[k][i].rows;
        }
        if (k >= 1) { size_at[permuted_separator_position(plan, k)] = f.A[k].rows; }
    }
    std::vector<int> offset(M + 1, 0);
    for (int i = 0; i < M; i++) { offset[i + 1] = offset[i] + size_at[i]; }
    const int n = offset[M] + ng;
    const int g0 = offset[M];

    DenseBlock L(n, n);
    auto put = [&](int row_pos, int col_pos, const DenseBlock& b) {
        for (int c = 0; c < b.cols; c++) {
            for (int r = 0; r < b.rows; r++) { L(offset[row_pos] + r, offset[col_pos] + c) = b(r, c); }
        }
    };
    auto put_arrow = [&](int col_pos, const DenseBlock& b) {
        for (int c = 0; c < b.cols; c++) {
            for (int r = 0; r < b.rows; r++) { L(g0 + r, offset[col_pos] + c) = b(r, c); }
        }
    };

    for (int k = 0; k < p; k++) {
        const int nk = plan.seg_lengths[k];
        for (int i = 0; i < nk; i++) {
            const int pos = permuted_stage_position(plan, k, i);
            put(pos, pos, f.D[k][i]);
            if (i + 1 < nk) { put(pos + 1, pos, f.E[k][i]); }
            if (k > 0) { put(permuted_separator_position(plan, k), pos, f.Bt[k][i]); }
            if (ng > 0) { put_arrow(pos, f.G[k][i]); }
        }
        if (k + 1 < p) {
            put(permuted_separator_position(plan, k + 1), permuted_stage_position(plan, k, nk - 1),
                f.F[k]);
        }
        if (k >= 1) {
            const int sp = permuted_separator_position(plan, k);
            put(sp, sp, f.A[k]);
            if (k + 1 < p) { put(permuted_separator_position(plan, k + 1), sp, f.H[k]); }
            if (ng > 0) { put_arrow(sp, f.Q[k]); }
        }
    }
    if (ng > 0) {
        for (int c = 0; c < ng; c++) {
            for (int r = 0; r < ng; r++) { L(g0 + r, g0 + c) = f.R(r, c); }
        }
    }
    // Keep strictly lower-triangular content only.
    for (int c = 0; c < n; c++) {
        for (int r = 0; r < c; r++) { L(r, c) = 0.0; }
    }
    return L;
}

} // namespace bta
