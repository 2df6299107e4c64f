#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bta/errors.hpp"
#include "bta/generators.hpp"
#include "bta/parallel.hpp"
#include "bta/planner.hpp"
#include "bta/sequential.hpp"
#include "helpers.hpp"

using namespace bta;
using namespace testutil;

namespace {

BlockTridiagArrowMatrix block_identity(int stages, int b, int ng)
{
    BlockTridiagArrowMatrix m;
    m.stage_sizes.assign(stages, b);
    for (int i = 0; i < stages; i++) { m.diag.push_back(DenseBlock::identity(b)); }
    for (int i = 0; i + 1 < stages; i++) { m.sub.emplace_back(b, b); }
    if (ng > 0) {
        for (int i = 0; i < stages; i++) { m.arrow.emplace_back(ng, b); }
        m.corner = DenseBlock::identity(ng);
        m.global_size = ng;
    }
    return m;
}

BlockTridiagArrowMatrix laplacian_1d(int stages)
{
    BlockTridiagArrowMatrix m;
    m.stage_sizes.assign(stages, 1);
    for (int i = 0; i < stages; i++) {
        DenseBlock d(1, 1);
        d(0, 0) = 2.0;
        m.diag.push_back(d);
    }
    for (int i = 0; i + 1 < stages; i++) {
        DenseBlock s(1, 1);
        s(0, 0) = -1.0;
        m.sub.push_back(s);
    }
    return m;
}

PartitionPlan random_plan(std::mt19937_64& g, int p, int min_len, int max_len)
{
    PartitionPlan plan;
    plan.threads = p;
    for (int k = 0; k < p; k++) {
        plan.seg_lengths.push_back(min_len +
                                   static_cast<int>(uniform(g, 0, max_len - min_len + 0.99)));
    }
    return plan;
}

// L L^T of a dense lower-triangular factor.
DenseBlock gram_lower(const DenseBlock& l)
{
    DenseBlock out(l.rows, l.rows);
    for (int i = 0; i < l.rows; i++) {
        for (int j = 0; j < l.rows; j++) {
            double s = 0.0;
            for (int k = 0; k <= std::min(i, j); k++) { s += l(i, k) * l(j, k); }
            out(i, j) = s;
        }
    }
    return out;
}

} // namespace

TEST_CASE("factorize_parallel: block identity gives identity factor everywhere")
{
    const auto m = block_identity(9, 2, 2);
    const PartitionPlan plan{3, {3, 2, 2}};
    const auto f = factorize_parallel(make_layout(m, plan), 3);
    for (int k = 0; k < 3; k++) {
        for (const auto& d : f.D[k]) { CHECK(max_abs_diff(d, DenseBlock::identity(2)) == 0.0); }
        for (const auto& e : f.E[k]) { CHECK(inf_norm(e) == 0.0); }
        for (const auto& gg : f.G[k]) { CHECK(inf_norm(gg) == 0.0); }
    }
    for (int k = 1; k < 3; k++) {
        CHECK(max_abs_diff(f.A[k], DenseBlock::identity(2)) == 0.0);
        for (const auto& b : f.Bt[k]) { CHECK(inf_norm(b) == 0.0); }
        CHECK(inf_norm(f.Q[k]) == 0.0);
    }
    for (int k = 0; k < 2; k++) { CHECK(inf_norm(f.F[k]) == 0.0); }
    CHECK(inf_norm(f.H[1]) == 0.0);
    CHECK(max_abs_diff(f.R, DenseBlock::identity(2)) == 0.0);
}

TEST_CASE("factorize_parallel: M=5 b=1 p=2 tridiag(2,-1) matches dense Cholesky of P Psi P^T")
{
    const auto m = laplacian_1d(5);
    const PartitionPlan plan{2, {2, 2}};
    const auto f = factorize_parallel(make_layout(m, plan), 2);

    const auto map = scalar_permutation(plan, m.stage_sizes, 0);
    const DenseBlock permuted = permute_dense(to_dense(m), map);
    const DenseBlock l_ref = dense_cholesky_oracle(permuted);
    const DenseBlock l_par = factor_to_dense(f);
    CHECK(max_abs_diff(l_par, l_ref) < 1e-14);
}

TEST_CASE("factorize_parallel: reconstruction L L^T = P Psi P^T with global variables")
{
    const auto m = random_spd_bta(9, 2, 3, 42);
    const PartitionPlan plan{2, {4, 4}};
    const auto f = factorize_parallel(make_layout(m, plan), 2);

    const auto map = scalar_permutation(plan, m.stage_sizes, 3);
    const DenseBlock permuted = permute_dense(to_dense(m), map);
    const DenseBlock rec = gram_lower(factor_to_dense(f));
    CHECK(max_abs_diff(rec, permuted) < 1e-11 * inf_norm(permuted));
}

TEST_CASE("factorize_parallel: worker-count mismatch and SPD failure reporting")
{
    const auto m = random_spd_bta(8, 2, 0, 1);
    const PartitionPlan plan{2, {4, 3}};
    const auto seg = make_layout(m, plan);
    CHECK_THROWS_AS(factorize_parallel(seg, 3), PlanError);

    auto bad = m;
    bad.diag[6] = DenseBlock(2, 2);
    bad.diag[6](0, 0) = -1.0;
    bad.diag[6](1, 1) = -1.0; // second interior stage of segment 2
    try {
        factorize_parallel(make_layout(bad, plan), 2);
        FAIL("expected throw");
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(std::string(e.what()).find("segment 2") != std::string::npos);
        CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
    }
}

TEST_CASE("fill-in locality: factor holds exactly the expected block sets")
{
    const auto m = random_spd_bta(14, 2, 2, 9);
    const PartitionPlan plan{3, {5, 4, 3}};
    const auto f = factorize_parallel(make_layout(m, plan), 3);

    REQUIRE(f.D.size() == 3);
    for (int k = 0; k < 3; k++) {
        CHECK(static_cast<int>(f.D[k].size()) == plan.seg_lengths[k]);
        CHECK(static_cast<int>(f.E[k].size()) == plan.seg_lengths[k] - 1);
        CHECK(static_cast<int>(f.G[k].size()) == plan.seg_lengths[k]);
    }
    CHECK(f.Bt[0].empty());            // no separator-row fill in the first segment
    CHECK(f.Bt[1].size() == 4);        // fill spans every interior stage
    CHECK(f.Bt[2].size() == 3);
    CHECK(!f.F[0].empty());
    CHECK(!f.F[1].empty());
    CHECK(f.F[2].empty());             // last segment has no tail coupling
    CHECK(f.A[0].empty());
    CHECK(!f.A[1].empty());
    CHECK(!f.A[2].empty());
    CHECK(f.H[0].empty());
    CHECK(!f.H[1].empty());            // only between consecutive separators
    CHECK(f.Q[0].empty());
    CHECK(!f.Q[1].empty());
    CHECK(!f.Q[2].empty());

    // Triangular blocks have strictly positive diagonals.
    for (int k = 0; k < 3; k++) {
        for (const auto& d : f.D[k]) {
            for (int i = 0; i < d.rows; i++) { CHECK(d(i, i) > 0.0); }
        }
    }
    for (int k = 1; k < 3; k++) {
        for (int i = 0; i < f.A[k].rows; i++) { CHECK(f.A[k](i, i) > 0.0); }
    }
}

TEST_CASE("forward_parallel: identity factor, zero rhs, dense oracle")
{
    const auto m_id = block_identity(8, 2, 2);
    const PartitionPlan plan{2, {4, 3}};
    const auto f_id = factorize_parallel(make_layout(m_id, plan), 2);
    const auto r = random_rhs(m_id, 3);
    const auto r_hat = permute_rhs(r, plan);
    const auto dy = forward_parallel(f_id, r_hat);
    for (int i = 0; i < 8; i++) { CHECK(dy.stages[i] == r_hat.stages[i]); }
    CHECK(dy.global == r_hat.global);

    const auto zero = BlockVector::zeros_like(m_id);
    const auto dz = forward_parallel(f_id, zero);
    for (const auto& s : dz.stages) { CHECK(max_abs(s) == 0.0); }

    // Random instance against dense forward substitution on the assembled factor.
    const auto m = random_spd_bta(11, 3, 2, 77);
    const PartitionPlan plan2{3, {4, 3, 2}};
    const auto f = factorize_parallel(make_layout(m, plan2), 3);
    const auto rr = random_rhs(m, 78);
    const auto rr_hat = permute_rhs(rr, plan2);
    const auto got = forward_parallel(f, rr_hat);
    const auto ref = ref_forward(factor_to_dense(f), rr_hat.flatten());
    CHECK(max_abs_diff(got.flatten(), ref) < 1e-12 * (1.0 + max_abs(ref)));
}

TEST_CASE("backward_parallel: identity factor and composition with forward")
{
    const auto m_id = block_identity(8, 2, 0);
    const PartitionPlan plan{2, {4, 3}};
    const auto f_id = factorize_parallel(make_layout(m_id, plan), 2);
    const auto y = permute_rhs(random_rhs(m_id, 5), plan);
    const auto x = backward_parallel(f_id, y);
    for (int i = 0; i < 8; i++) { CHECK(x.stages[i] == y.stages[i]); }

    // Composition: L^T x = y after L y = r solves the permuted system.
    const auto m = random_spd_bta(13, 2, 4, 17);
    const PartitionPlan plan2{3, {5, 3, 3}};
    const auto f = factorize_parallel(make_layout(m, plan2), 3);
    const auto r = random_rhs(m, 18);
    const auto r_hat = permute_rhs(r, plan2);
    const auto dy = forward_parallel(f, r_hat);
    const auto dx = backward_parallel(f, dy);

    const auto ref_y = ref_forward(factor_to_dense(f), r_hat.flatten());
    const auto ref_x = ref_backward(factor_to_dense(f), ref_y);
    CHECK(max_abs_diff(dx.flatten(), ref_x) < 1e-10 * (1.0 + max_abs(ref_x)));

    // Hand case: M=5, b=1, p=2.
    const auto lap = laplacian_1d(5);
    const PartitionPlan lap_plan{2, {2, 2}};
    const auto lf = factorize_parallel(make_layout(lap, lap_plan), 2);
    const auto lr = random_rhs(lap, 3);
    const auto lhat = permute_rhs(lr, lap_plan);
    const auto ly = forward_parallel(lf, lhat);
    const auto lx = backward_parallel(lf, ly);
    const auto oy = ref_forward(factor_to_dense(lf), lhat.flatten());
    const auto ox = ref_backward(factor_to_dense(lf), oy);
    CHECK(max_abs_diff(lx.flatten(), ox) < 1e-13);
}

TEST_CASE("solve: identity system, infeasible plan, p=1 delegation")
{
    const auto m = block_identity(6, 2, 2);
    const auto r = random_rhs(m, 4);
    const auto x = solve(m, r, PartitionPlan{2, {3, 2}});
    for (int i = 0; i < 6; i++) { CHECK(max_abs_diff(x.stages[i], r.stages[i]) < 1e-15); }

    const auto m5 = block_identity(5, 2, 2);
    const auto r5 = random_rhs(m5, 4);
    CHECK_THROWS_AS(solve(m5, r5, PartitionPlan{3, {1, 1, 1}}), PlanError);

    const auto m2 = random_spd_bta(7, 2, 2, 5);
    const auto r2 = random_rhs(m2, 6);
    const auto seq_x = solve_sequential(factorize_sequential(m2), r2);
    const auto par_x = solve(m2, r2, PartitionPlan::single(7));
    CHECK(max_abs_diff(par_x.flatten(), seq_x.flatten()) == 0.0);
}

TEST_CASE("oracle equivalence: random instances across p, b, n_g")
{
    auto g = rng(909);
    int done = 0;
    for (int rep = 0; done < 120; rep++) {
        const int p = 2 + static_cast<int>(uniform(g, 0, 4.99));
        const int b = 1 + static_cast<int>(uniform(g, 0, 7.99));
        const int ng_pick = static_cast<int>(uniform(g, 0, 2.99));
        const int ng = ng_pick == 0 ? 0 : (ng_pick == 1 ? 2 : 5);
        auto plan = random_plan(g, p, 1, 6);
        const int M = plan.total_stages();
        if (M < 2 * p || M * b > 200) { continue; }
        done++;

        const auto m = random_spd_bta(M, b, ng, 40000 + rep, 0.5);
        const auto r = random_rhs(m, 50000 + rep);
        const auto x = solve(m, r, plan);

        CHECK(relative_residual(m, x, r) < 1e-10);

        const auto x_dense = solve_dense_oracle(to_dense(m), r.flatten());
        const double scale = std::max(1.0, max_abs(x_dense));
        CHECK(max_abs_diff(x.flatten(), x_dense) < 1e-10 * scale);

        const auto x_seq = solve_sequential(factorize_sequential(m), r);
        CHECK(max_abs_diff(x.flatten(), x_seq.flatten()) < 1e-9 * scale);
    }
}

TEST_CASE("determinism: repeated solves are bitwise identical")
{
    const auto m = random_spd_bta(24, 4, 3, 2025);
    const auto r = random_rhs(m, 2026);
    const PartitionPlan plan = planner::optimal_partition(24, 4);
    const auto first = solve(m, r, plan).flatten();
    for (int rep = 0; rep < 6; rep++) {
        const auto again = solve(m, r, plan).flatten();
        CHECK(again == first);
    }
}

TEST_CASE("flop accounting: per-segment factorization and solve tallies match the table")
{
    auto check_case = [](int M, int b, int p) {
        const PartitionPlan plan = planner::optimal_partition(M, p);
        const auto m = random_spd_bta(M, b, 0, 321 + M);
        const auto f = factorize_parallel(make_layout(m, plan), p);

        const Rational b3(static_cast<std::int64_t>(b) * b * b);
        const Rational b2(static_cast<std::int64_t>(b) * b);
        // Parallel phase per segment.
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
            CHECK(f.factor_flops.segment[k].total() == expect);
        }
        CHECK(f.factor_flops.sequential.total() ==
              (Rational(10, 3) * Rational(p) - Rational(16, 3)) * b3);

        // Substitution tallies, forward + backward combined.
        FlopReport solve_flops;
        const auto r = random_rhs(m, 55);
        const auto r_hat = permute_rhs(r, plan);
        const auto dy = forward_parallel(f, r_hat, &solve_flops);
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
            CHECK(solve_flops.segment[k].total() == expect);
        }
        CHECK(solve_flops.sequential.total() == Rational(7 * p - 11) * b2);
    };
    check_case(50, 3, 4);
    check_case(37, 1, 3);
    check_case(101, 2, 6);
    check_case(24, 2, 3);
}

TEST_CASE("parallel-vs-sequential agreement stays within reordering noise")
{
    auto g = rng(3141);
    for (int rep = 0; rep < 40; rep++) {
        const int p = 2 + static_cast<int>(uniform(g, 0, 3.99));
        auto plan = random_plan(g, p, 2, 5);
        const int M = plan.total_stages();
        if (M < 2 * p) { continue; }
        const auto m = random_spd_bta(M, 3, 2, 7000 + rep, 0.5);
        const auto r = random_rhs(m, 8000 + rep);
        const auto xp = solve(m, r, plan).flatten();
        const auto xs = solve_sequential(factorize_sequential(m), r).flatten();
        CHECK(max_abs_diff(xp, xs) <= 1e-9 * std::max(1.0, max_abs(xs)));
    }
}
