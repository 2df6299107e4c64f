// Acceptance suite: every criterion prints one PASS/FAIL line; the binary
// exits nonzero when a gating criterion fails. Informational entries are
// marked INFO and never gate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "bta/generators.hpp"
#include "bta/matrix.hpp"
#include "bta/parallel.hpp"
#include "bta/planner.hpp"
#include "bta/raceline.hpp"
#include "bta/sequential.hpp"

using namespace bta;

namespace {

int g_failures = 0;

struct Criterion
{
    std::string name;
    double budget_seconds;
    std::function<bool(std::string&)> run;
};

double now_seconds()
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void run_criterion(const Criterion& c)
{
    std::string detail;
    const double t0 = now_seconds();
    bool ok = false;
    try {
        ok = c.run(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
        ok = false;
    }
    const double elapsed = now_seconds() - t0;
    if (c.budget_seconds > 0.0 && elapsed >= c.budget_seconds) {
        ok = false;
        detail += " [over time budget " + std::to_string(c.budget_seconds) + "s]";
    }
    std::printf("[%s] %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", c.name.c_str(), elapsed,
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) { g_failures++; }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) { m = std::max(m, std::abs(a[i] - b[i])); }
    return m;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) { m = std::max(m, std::abs(x)); }
    return m;
}

// 1. Oracle equivalence over >= 500 randomized instances.
bool criterion_oracle_equivalence(std::string& detail)
{
    std::mt19937_64 g(20240901);
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(g);
    };

    int count = 0;
    double worst_residual = 0.0;
    double worst_oracle = 0.0;
    double worst_seq = 0.0;
    while (count < 500) {
        const int p = pick(2, 6);
        const int b = pick(1, 8);
        const int ng_sel = pick(0, 2);
        const int ng = ng_sel == 0 ? 0 : (ng_sel == 1 ? 2 : 5);
        const int M = pick(2 * p, 40);

        const PartitionPlan plan = planner::optimal_partition(M, p);
        const auto m = random_spd_bta(M, b, ng, 77000 + count, 0.5);
        const auto r = random_rhs(m, 88000 + count);
        const auto x = solve(m, r, plan);
        count++;

        worst_residual = std::max(worst_residual, relative_residual(m, x, r));

        const auto x_oracle = solve_dense_oracle(to_dense(m), r.flatten());
        const double scale = std::max(1.0, max_abs(x_oracle));
        worst_oracle = std::max(worst_oracle, max_abs_diff(x.flatten(), x_oracle) / scale);

        const auto x_seq = solve_sequential(factorize_sequential(m), r).flatten();
        worst_seq = std::max(worst_seq, max_abs_diff(x.flatten(), x_seq) / scale);
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%d instances, worst residual %.2e, oracle diff %.2e, seq diff %.2e", count,
                  worst_residual, worst_oracle, worst_seq);
    detail = buf;
    return worst_residual <= 1e-10 && worst_oracle <= 1e-10 && worst_seq <= 1e-9;
}

// 2. Per-segment flop accounting, exact rational equality.
bool criterion_flop_accounting(std::string& detail)
{
    const std::vector<std::tuple<int, int, int>> cases = {{50, 3, 4}, {37, 1, 3}, {101, 2, 6}};
    for (const auto& [M, b, p] : cases) {
        const PartitionPlan plan = planner::optimal_partition(M, p);
        const auto m = random_spd_bta(M, b, 0, 4242 + M);
        const auto seg = make_layout(m, plan);
        const auto f = factorize_parallel(seg, p);
        const Rational b3(static_cast<std::int64_t>(b) * b * b);
        const Rational b2(static_cast<std::int64_t>(b) * b);

        for (int k = 0; k < p; k++) {
            const Rational nk(plan.seg_lengths[k]);
            Rational expect;
            if (k == 0) {
                expect = (Rational(7, 3) * nk - Rational(1)) * b3;
            } else if (k + 1 < p) {
                expect = (Rational(19, 3) * nk - Rational(1)) * b3;
            } else {
                expect = (Rational(19, 3) * nk - Rational(4)) * b3;
            }
            if (f.factor_flops.segment[k].total() != expect) {
                detail = "factor tally mismatch at (M=" + std::to_string(M) +
                         ", b=" + std::to_string(b) + ", p=" + std::to_string(p) + "), segment " +
                         std::to_string(k + 1);
                return false;
            }
        }
        if (f.factor_flops.sequential.total() !=
            (Rational(10, 3) * Rational(p) - Rational(16, 3)) * b3) {
            detail = "factor sequential-phase tally mismatch";
            return false;
        }

        FlopReport solve_flops;
        const auto r = random_rhs(m, 11);
        const auto dy = forward_parallel(f, permute_rhs(r, plan), &solve_flops);
        backward_parallel(f, dy, &solve_flops);
        for (int k = 0; k < p; k++) {
            const int nk = plan.seg_lengths[k];
            Rational expect;
            if (k == 0) {
                expect = Rational(5 * nk - 2) * b2;
            } else if (k + 1 < p) {
                expect = Rational(9 * nk - 2) * b2;
            } else {
                expect = Rational(9 * nk - 4) * b2;
            }
            if (solve_flops.segment[k].total() != expect) {
                detail = "solve tally mismatch at segment " + std::to_string(k + 1);
                return false;
            }
        }
        if (solve_flops.sequential.total() != Rational(7 * p - 11) * b2) {
            detail = "solve sequential-phase tally mismatch";
            return false;
        }
    }
    detail = "exact equality on all segments of (50,3,4), (37,1,3), (101,2,6)";
    return true;
}

// 3. Published speedup table reproduction.
bool criterion_table2(std::string& detail)
{
    const std::vector<std::pair<int, const char*>> gamma_rows = {
        {2, "1.37"}, {4, "2.11"}, {6, "2.84"}, {8, "3.58"},
        {10, "4.32"}, {12, "5.05"}, {14, "5.79"}, {16, "6.53"},
    };
    for (const auto& [p, want] : gamma_rows) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", planner::gamma_max(p));
        if (std::string(buf) != want) {
            detail = "gamma_max(" + std::to_string(p) + ") = " + buf + ", published " + want;
            return false;
        }
    }
    if (planner::min_horizon(4, Rational(2)) != 83 ||
        planner::min_horizon_fraction(4, Rational(9, 10)) != 43 ||
        planner::min_horizon(6, Rational(2)) != 35) {
        detail = "pinned min-horizon cells do not reproduce";
        return false;
    }

    // Remaining cells: computed and compared; mismatches reported, not gated.
    struct Cell
    {
        int p, n2, n3, n4, n09;
    };
    const std::vector<Cell> published = {
        {2, 0, 0, 0, 5},         {4, 83, 0, 0, 43},       {6, 35, 0, 0, 120},
        {8, 35, 133, 0, 239},    {10, 41, 101, 536, 384}, {12, 46, 93, 244, 573},
        {14, 52, 102, 201, 813}, {16, 58, 102, 190, 1060},
    };
    int mismatches = 0;
    for (const auto& c : published) {
        const auto check = [&](const char* row, std::optional<int> got, int want) {
            if (got.value_or(0) != want) {
                std::printf("       report: table cell %s(p=%d) computed %d, published %d\n", row,
                            c.p, got.value_or(0), want);
                mismatches++;
            }
        };
        check("N_gamma2", planner::min_horizon(c.p, Rational(2)), c.n2);
        check("N_gamma3", planner::min_horizon(c.p, Rational(3)), c.n3);
        check("N_gamma4", planner::min_horizon(c.p, Rational(4)), c.n4);
        check("N_0.9gmax", planner::min_horizon_fraction(c.p, Rational(9, 10)), c.n09);
    }
    detail = "gamma_max row and pinned cells exact; " + std::to_string(mismatches) +
             " documented mismatch(es) in the informational cells";
    return true;
}

// 4. Speedup boundary at (83, 4).
bool criterion_speedup_boundary(std::string& detail)
{
    const Rational g83 = planner::factor_flops_sequential(83) /
                         planner::factor_flops_parallel(planner::optimal_partition(83, 4));
    const Rational g82 = planner::factor_flops_sequential(82) /
                         planner::factor_flops_parallel(planner::optimal_partition(82, 4));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "gamma(83,4) = %s = %.4f, gamma(82,4) = %.4f",
                  g83.str().c_str(), g83.to_double(), g82.to_double());
    detail = buf;
    return g83 == Rational(575, 287) && g83 >= Rational(2) && g82 < Rational(2);
}

// 5. Bitwise determinism across repeated parallel solves.
bool criterion_determinism(std::string& detail)
{
    const auto m = random_spd_bta(60, 8, 0, 31337);
    const auto r = random_rhs(m, 31338);
    const PartitionPlan plan = planner::optimal_partition(60, 4);
    const auto first = solve(m, r, plan).flatten();
    for (int rep = 1; rep < 10; rep++) {
        if (solve(m, r, plan).flatten() != first) {
            detail = "solution differed at repetition " + std::to_string(rep + 1);
            return false;
        }
    }
    detail = "10 solves of (M=60, b=8, p=4) bitwise identical";
    return true;
}

// 6. Race-line demo on synthetic circle and oval.
bool criterion_raceline(std::string& detail)
{
    const int n = 360;
    const double radius = 50.0;
    const double width = 3.0;
    const auto circle = make_circle_track(radius, n, width);
    const auto cp = build_raceline_qp(circle, compute_frames(circle));
    PenaltySchedule sched;
    RacelineReport creport;
    raceline_penalty_solve(cp, sched, planner::optimal_partition(n, 2), &creport);
    const double dphi = 2.0 * M_PI / n;
    const double chord = 2.0 * radius * std::sin(dphi / 2.0);
    const double analytic =
        n * std::pow((radius - width) * dphi * dphi, 2.0) / std::pow(chord, 4.0);
    const double obj = creport.iterations.back().objective;
    if (std::abs(obj - analytic) > 0.01 * analytic) {
        detail = "circle objective " + std::to_string(obj) + " vs analytic " +
                 std::to_string(analytic);
        return false;
    }

    const int oval_n = 2356;
    const auto oval = make_oval_track(oval_n, 2500.0, 150.0, 5.0);
    const auto op = build_raceline_qp(oval, compute_frames(oval));
    RacelineReport oreport;
    raceline_penalty_solve(op, PenaltySchedule{}, planner::optimal_partition(oval_n, 4), &oreport);
    const auto& last = oreport.iterations.back();
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "circle obj %.6g (analytic %.6g); oval eq residual %.2e, obj %.6g vs centerline "
                  "%.6g",
                  obj, analytic, last.eq_residual_inf, last.objective,
                  oreport.centerline_objective);
    detail = buf;
    return last.eq_residual_inf <= 1e-6 && last.objective < oreport.centerline_objective;
}

// 7. Informational benchmark; flags but never fails.
void informational_benchmark()
{
    const int M = 200;
    const int b = 59;
    const int p = 4;
    const int reps = 5;
    const double t0 = now_seconds();
    const auto m = random_spd_bta(M, b, 0, 777);
    const auto r = random_rhs(m, 778);

    auto mean_factor_time = [&](const PartitionPlan& plan) {
        double factor_sum = 0.0;
        for (int rep = 0; rep < reps; rep++) {
            SolveTiming t;
            solve_timed(m, r, plan, &t);
            factor_sum += t.factor_seconds;
        }
        return factor_sum / reps;
    };

    const double seq_factor = mean_factor_time(PartitionPlan::single(M));
    const double par_factor = mean_factor_time(planner::optimal_partition(M, p));
    const double measured = seq_factor / par_factor;
    const double theory = planner::speedup(M, p).gamma_factor;
    const unsigned cores = std::thread::hardware_concurrency();
    const double elapsed = now_seconds() - t0;
    std::printf("[INFO] 7. benchmark M=%d b=%d p=%d (%d reps, %u hw cores): measured "
                "factorization speedup %.2f, theoretical %.2f (%.2fs)%s\n",
                M, b, p, reps, cores, measured, theory, elapsed,
                measured < 1.3 ? " — flagged: below 1.3, machine-dependent (not a failure)" : "");
}

} // namespace

int main()
{
    std::printf("acceptance suite\n");
    run_criterion(
        {"1. oracle equivalence, 500 random instances", 60.0, criterion_oracle_equivalence});
    run_criterion(
        {"2. flop accounting vs published per-segment counts", 0.0, criterion_flop_accounting});
    run_criterion({"3. speedup table reproduction", 5.0, criterion_table2});
    run_criterion(
        {"4. speedup boundary gamma(83,4) >= 2 > gamma(82,4)", 0.0, criterion_speedup_boundary});
    run_criterion(
        {"5. bitwise determinism across 10 parallel solves", 5.0, criterion_determinism});
    run_criterion({"6. race-line demo: circle analytic, oval residual and objective", 30.0,
                   criterion_raceline});
    informational_benchmark();

    if (g_failures > 0) {
        std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("acceptance: all gating criteria passed\n");
    return 0;
}
