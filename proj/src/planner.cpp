#include "bta/planner.hpp"

#include <cmath>

#include "bta/errors.hpp"

namespace bta {
namespace planner {

namespace {

const Rational kSigma(19, 7); // first-segment / other-segment length ratio

Rational per_segment_factor_cost(int k, int nk)
{
    // Parallel-phase cost of segment k in b^3 units, without the constant
    // offsets (-1/-4): the first segment skips the separator-row updates.
    return k == 0 ? Rational(7, 3) * Rational(nk) : Rational(19, 3) * Rational(nk);
}

Rational per_segment_solve_cost(int k, int nk)
{
    return k == 0 ? Rational(5 * nk - 2) : Rational(9 * nk - 2);
}

} // namespace

PartitionPlan optimal_partition(int N, int p, PartitionRule rule)
{
    if (p < 1) { throw PlanError("optimal_partition: p must be >= 1"); }
    if (p == 1) {
        if (N < 1) { throw PlanError("optimal_partition: N must be >= 1"); }
        return PartitionPlan::single(N);
    }
    if (N < 2 * p) {
        throw PlanError("optimal_partition: infeasible, requires N >= 2p (N=" + std::to_string(N) +
                        ", p=" + std::to_string(p) + ")");
    }

    const Rational denom =
        rule == PartitionRule::kBalanced ? Rational(p - 1) + kSigma : Rational(p) + kSigma;
    const double target = (Rational(N - p + 1) / denom).to_double();
    const int lo = static_cast<int>(std::floor(target));
    const int hi = static_cast<int>(std::ceil(target));

    bool found = false;
    int best_nk = 0;
    int best_n1 = 0;
    Rational best_cost;
    for (int nk : {lo, hi}) {
        const int n1 = N - (p - 1) * nk - (p - 1);
        if (nk < 1 || n1 < 1) { continue; }
        const Rational cost = max(Rational(7, 3) * Rational(n1), Rational(19, 3) * Rational(nk));
        // Ties go to the larger N_k; candidates are evaluated in ascending order.
        if (!found || cost <= best_cost) {
            found = true;
            best_cost = cost;
            best_nk = nk;
            best_n1 = n1;
        }
    }
    if (!found) {
        throw PlanError("optimal_partition: no feasible rounding candidate for N=" +
                        std::to_string(N) + ", p=" + std::to_string(p));
    }

    PartitionPlan plan;
    plan.threads = p;
    plan.seg_lengths.assign(p, best_nk);
    plan.seg_lengths[0] = best_n1;
    return plan;
}

Rational factor_flops_sequential(int N) { return Rational(7, 3) * Rational(N) - Rational(2); }

Rational factor_flops_parallel(const PartitionPlan& plan)
{
    const int p = plan.num_segments();
    if (p == 1) { return factor_flops_sequential(plan.seg_lengths[0]); }
    Rational m;
    for (int k = 0; k < p; k++) { m = max(m, per_segment_factor_cost(k, plan.seg_lengths[k])); }
    return m + Rational(10, 3) * Rational(p) - Rational(19, 3);
}

Rational solve_flops_sequential(int N) { return Rational(5 * N - 2); }

Rational solve_flops_parallel(const PartitionPlan& plan)
{
    const int p = plan.num_segments();
    if (p == 1) { return solve_flops_sequential(plan.seg_lengths[0]); }
    Rational m;
    for (int k = 0; k < p; k++) { m = max(m, per_segment_solve_cost(k, plan.seg_lengths[k])); }
    return m + Rational(7 * p - 11);
}

TheoryPoint theory_point(int N, int p)
{
    TheoryPoint t;
    t.N = N;
    t.p = p;
    t.feasible = p == 1 ? N >= 1 : N >= 2 * p;
    if (!t.feasible) { return t; }
    const PartitionPlan plan = optimal_partition(N, p);
    t.N1 = plan.seg_lengths[0];
    t.Nk = plan.seg_lengths[p - 1];
    t.factor_flops_seq = factor_flops_sequential(N);
    t.factor_flops_par = factor_flops_parallel(plan);
    t.solve_flops_seq = solve_flops_sequential(N);
    t.solve_flops_par = solve_flops_parallel(plan);
    t.gamma_factor = (t.factor_flops_seq / t.factor_flops_par).to_double();
    t.gamma_solve = (t.solve_flops_seq / t.solve_flops_par).to_double();
    return t;
}

Speedup speedup(int N, int p)
{
    const TheoryPoint t = theory_point(N, p);
    if (!t.feasible) {
        throw PlanError("speedup: infeasible (N=" + std::to_string(N) + ", p=" + std::to_string(p) +
                        ")");
    }
    return {t.gamma_factor, t.gamma_solve};
}

Rational gamma_max_exact(int p)
{
    if (p < 1) { throw PlanError("gamma_max: p must be >= 1"); }
    if (p == 1) { return Rational(1); }
    return Rational(7 * p + 12, 19);
}

double gamma_max(int p) { return gamma_max_exact(p).to_double(); }

std::optional<int> min_horizon(int p, const Rational& target)
{
    if (p == 1) { return target <= Rational(1) ? std::optional<int>(1) : std::nullopt; }
    if (target >= gamma_max_exact(p)) { return std::nullopt; }
    constexpr int kScanLimit = 200000;
    for (int N = 2 * p; N <= kScanLimit; N++) {
        const PartitionPlan plan = optimal_partition(N, p);
        // gamma >= target  <=>  O_seq >= target * O_par, exactly.
        if (factor_flops_sequential(N) >= target * factor_flops_parallel(plan)) { return N; }
    }
    return std::nullopt;
}

std::optional<int> min_horizon_fraction(int p, const Rational& fraction)
{
    return min_horizon(p, fraction * gamma_max_exact(p));
}

std::vector<TheoryPoint> theory_grid(int p_lo, int p_hi, int N_lo, int N_hi)
{
    std::vector<TheoryPoint> grid;
    for (int p = p_lo; p <= p_hi; p++) {
        for (int N = N_lo; N <= N_hi; N++) { grid.push_back(theory_point(N, p)); }
    }
    return grid;
}

namespace {

Rational b3_of(int b) { return Rational(static_cast<std::int64_t>(b) * b * b); }
Rational b2_of(int b) { return Rational(static_cast<std::int64_t>(b) * b); }

} // namespace

Rational factor_segment_flops(const PartitionPlan& plan, int k, int b, int ng)
{
    const int p = plan.num_segments();
    const std::int64_t N = plan.seg_lengths[k];
    const Rational b3 = b3_of(b);
    Rational total = Rational(N) * b3 / Rational(3);         // potrf per stage
    total += Rational(2 * (N - 1)) * b3;                      // E trsm + D syrk
    if (k > 0) { total += Rational(2 * N + 2 * (N - 1)) * b3; } // B trsm, A syrk, fill gemm
    if (k + 1 < p) { total += b3; }                           // F trsm
    if (k > 0 && k + 1 < p) { total += Rational(2) * b3; }    // H gemm
    if (ng > 0) {
        const Rational gb2(static_cast<std::int64_t>(ng) * b * b);
        const Rational g2b(static_cast<std::int64_t>(ng) * ng * b);
        total += Rational(N) * gb2;                 // G trsm
        total += Rational(N) * g2b;                 // corner accumulator syrk
        total += Rational(2 * (N - 1)) * gb2;       // G gemm
        if (k > 0) { total += Rational(2 * N) * gb2; } // Q gemm
    }
    return total;
}

Rational factor_seq_phase_flops(const PartitionPlan& plan, int b, int ng)
{
    const int p = plan.num_segments();
    const Rational b3 = b3_of(b);
    Rational total = Rational(4 * (p - 1)) * b3 / Rational(3); // A syrk + potrf
    const int middles = p > 2 ? p - 2 : 0;
    total += Rational(2 * middles) * b3; // H trsm + next-A syrk
    if (ng > 0) {
        const Rational gb2(static_cast<std::int64_t>(ng) * b * b);
        const Rational g2b(static_cast<std::int64_t>(ng) * ng * b);
        total += Rational(p - 1) * (Rational(3) * gb2 + g2b); // Q gemm + Q trsm + R syrk
        if (p > 2) { total += Rational(2 * (p - 2)) * gb2; }  // Q propagation gemm
        total += Rational(static_cast<std::int64_t>(ng) * ng * ng, 3); // corner potrf
    }
    return total;
}

Rational solve_segment_flops(const PartitionPlan& plan, int k, int b, int ng)
{
    const int p = plan.num_segments();
    const std::int64_t N = plan.seg_lengths[k];
    const Rational b2 = b2_of(b);
    Rational total = Rational(N) * b2;            // two trsv sweeps
    total += Rational(4 * (N - 1)) * b2;          // E gemvs both sweeps
    if (k > 0) { total += Rational(4 * N) * b2; } // separator-row gemvs both sweeps
    if (k + 1 < p) { total += Rational(2) * b2; } // F^T gemv
    if (ng > 0) { total += Rational(4 * N * ng * b); } // G gemvs both sweeps
    return total;
}

Rational solve_seq_phase_flops(const PartitionPlan& plan, int b, int ng)
{
    const int p = plan.num_segments();
    const Rational b2 = b2_of(b);
    Rational total = Rational(3 * (p - 1)) * b2;  // F gemv + two A trsv per separator
    if (p > 2) { total += Rational(4 * (p - 2)) * b2; } // H gemvs both sweeps
    if (ng > 0) {
        total += Rational(4 * (p - 1) * ng * b);  // Q gemvs both sweeps
        total += Rational(static_cast<std::int64_t>(ng) * ng); // two corner trsv
    }
    return total;
}

Rational factor_single_flops(int stages, int b, int ng)
{
    const Rational b3 = b3_of(b);
    Rational total = (Rational(7, 3) * Rational(stages) - Rational(2)) * b3;
    if (ng > 0) {
        const Rational gb2(static_cast<std::int64_t>(ng) * b * b);
        const Rational g2b(static_cast<std::int64_t>(ng) * ng * b);
        total += Rational(stages) * (gb2 + g2b) + Rational(2 * (stages - 1)) * gb2;
        total += Rational(static_cast<std::int64_t>(ng) * ng * ng, 3);
    }
    return total;
}

Rational solve_single_flops(int stages, int b, int ng)
{
    Rational total = Rational(5 * stages - 2) * b2_of(b);
    if (ng > 0) {
        total += Rational(4 * static_cast<std::int64_t>(stages) * ng * b) +
                 Rational(static_cast<std::int64_t>(ng) * ng);
    }
    return total;
}

Rational factor_critical_path_flops(const PartitionPlan& plan, int b, int ng)
{
    const int p = plan.num_segments();
    if (p == 1) { return factor_single_flops(plan.seg_lengths[0], b, ng); }
    Rational m;
    for (int k = 0; k < p; k++) { m = max(m, factor_segment_flops(plan, k, b, ng)); }
    return m + factor_seq_phase_flops(plan, b, ng);
}

Rational solve_critical_path_flops(const PartitionPlan& plan, int b, int ng)
{
    const int p = plan.num_segments();
    if (p == 1) { return solve_single_flops(plan.seg_lengths[0], b, ng); }
    Rational m;
    for (int k = 0; k < p; k++) { m = max(m, solve_segment_flops(plan, k, b, ng)); }
    return m + solve_seq_phase_flops(plan, b, ng);
}

} // namespace planner
} // namespace bta
