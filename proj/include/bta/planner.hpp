#pragma once

#include <optional>
#include <vector>

#include "bta/matrix.hpp"
#include "bta/rational.hpp"

namespace bta {
namespace planner {

/// One cell of the theoretical speedup grid. Flop quantities are exact
/// rationals in units of b^3 (factorization) and b^2 (solve).
struct TheoryPoint
{
    int N = 0;
    int p = 0;
    bool feasible = false; // requires N >= 2p
    int N1 = 0;
    int Nk = 0;
    Rational factor_flops_seq;
    Rational factor_flops_par;
    Rational solve_flops_seq;
    Rational solve_flops_par;
    double gamma_factor = 0.0;
    double gamma_solve = 0.0;
};

/// Which denominator the balanced segment-length target uses. The workload
/// balance 7/3 N_1 = 19/3 N_k combined with N_1 + (p-1) N_k + p - 1 = N
/// gives (N - p + 1)/(p - 1 + sigma); the alternative (N - p + 1)/(p + sigma)
/// is kept available for side-by-side comparison.
enum class PartitionRule
{
    kBalanced,
    kAlternative,
};

/// Optimal segment lengths for a horizon of N stages on p threads: evaluates
/// floor and ceil of the balanced target N_k and keeps the one minimizing
/// max{7/3 N_1, 19/3 N_k}, ties broken toward the larger N_k.
/// Requires N >= 2p for p > 1.
PartitionPlan optimal_partition(int N, int p, PartitionRule rule = PartitionRule::kBalanced);

/// Critical-path factorization cost of the parallel scheme in b^3 units:
/// max over segments of the per-segment parallel-phase cost plus the
/// sequential-phase cost. Degenerates to the sequential formula for p = 1.
Rational factor_flops_parallel(const PartitionPlan& plan);

/// (7/3 N - 2) in b^3 units.
Rational factor_flops_sequential(int N);

/// Critical-path triangular-solve cost (forward + backward) in b^2 units.
Rational solve_flops_parallel(const PartitionPlan& plan);

/// (5N - 2) in b^2 units.
Rational solve_flops_sequential(int N);

struct Speedup
{
    double gamma_factor;
    double gamma_solve;
};

/// Theoretical speedups sequential/parallel at the optimal partition.
Speedup speedup(int N, int p);

/// Asymptotic factorization speedup (p - 1 + sigma)/sigma = (7p + 12)/19.
Rational gamma_max_exact(int p);
double gamma_max(int p);

/// Smallest N >= 2p whose factorization speedup reaches `target` (exact
/// rational comparison), or nullopt when the target is unattainable.
std::optional<int> min_horizon(int p, const Rational& target);

/// Same, with the target expressed as a fraction of gamma_max(p).
std::optional<int> min_horizon_fraction(int p, const Rational& fraction);

/// Grid of theory points over inclusive ranges, infeasible cells marked.
std::vector<TheoryPoint> theory_grid(int p_lo, int p_hi, int N_lo, int N_hi);

/// Fully evaluated point for one (N, p) cell.
TheoryPoint theory_point(int N, int p);

// Detailed flop model in raw flops, including the global-variable terms
// (b_g b^2, b_g^2 b, b_g^3/3 and the matching vector costs). These predict
// the instrumented tallies exactly, per segment and per phase; the b^3/b^2
// functions above are this model's n_g = 0 critical path in block units.

/// Parallel-phase factorization flops of segment k under `plan`.
Rational factor_segment_flops(const PartitionPlan& plan, int k, int b, int ng);
/// Sequential-phase factorization flops (separator chain plus corner).
Rational factor_seq_phase_flops(const PartitionPlan& plan, int b, int ng);
/// Parallel-phase substitution flops (forward + backward) of segment k.
Rational solve_segment_flops(const PartitionPlan& plan, int k, int b, int ng);
/// Sequential-phase substitution flops.
Rational solve_seq_phase_flops(const PartitionPlan& plan, int b, int ng);

/// Single-segment (p = 1) totals for the sequential factorization/solve.
Rational factor_single_flops(int stages, int b, int ng);
Rational solve_single_flops(int stages, int b, int ng);

/// Critical-path totals: max over segments plus the sequential phase for
/// p > 1, the single-segment totals otherwise.
Rational factor_critical_path_flops(const PartitionPlan& plan, int b, int ng);
Rational solve_critical_path_flops(const PartitionPlan& plan, int b, int ng);

} // namespace planner
} // namespace bta
