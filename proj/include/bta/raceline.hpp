#pragma once

#include <string>
#include <vector>

#include "bta/matrix.hpp"

namespace bta {

/// Closed track: centerline points plus distances to the left/right
/// boundaries at each point. Closure is implicit (last point connects back
/// to the first).
struct TrackData
{
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w_left;
    std::vector<double> w_right;

    int size() const { return static_cast<int>(x.size()); }
};

/// Unit tangent and right-hand normal per knot, plus the chord length to the
/// next knot.
struct Frames
{
    std::vector<double> tx, ty; // unit tangents
    std::vector<double> nx, ny; // right-hand normals (ty, -tx)
    std::vector<double> chord;  // |p_{i+1} - p_i|, cyclic

    int size() const { return static_cast<int>(tx.size()); }
};

/// One stage of the multistage QP: cost blocks, equality rows
/// A x_i + B x_{i+1} + Eg g = b and inequality rows
/// C x_i + D x_{i+1} + Fg g <= h. Empty blocks mean zero. The terminal
/// stage carries its closure rows with B and D empty.
struct StageQP
{
    DenseBlock Q;
    DenseBlock S;
    DenseBlock T;
    std::vector<double> c;

    DenseBlock A, B, Eg;
    std::vector<double> b;

    DenseBlock C, D, Fg;
    std::vector<double> h;
};

struct MultistageQPData
{
    std::vector<StageQP> stages;
    DenseBlock Qg;
    std::vector<double> cg;
    int global_size = 0;

    int num_stages() const { return static_cast<int>(stages.size()); }
};

/// Where the squared curvature of each cubic segment is sampled.
enum class CurvatureSampling
{
    kKnot,     // s = 0 only
    kTwoPoint, // s = 0 and s = 1, weight 1/2 each
};

/// Minimum-curvature race-line QP over per-segment cubic spline coefficients
/// theta_i = [a_x, b_x, c_x, d_x, a_y, b_y, c_y, d_y], with an 8-dimensional
/// global variable tying the last segment back to the first.
struct RaceLineProblem
{
    TrackData track;
    Frames frames;
    MultistageQPData qp;
    CurvatureSampling sampling = CurvatureSampling::kKnot;
};

TrackData load_track(const std::string& path);
void save_track(const TrackData& track, const std::string& path);

TrackData make_circle_track(double radius, int segments, double width);

/// Stadium-shaped track: two straights of length `straight` joined by
/// semicircles of radius `radius`, sampled uniformly by arc length.
TrackData make_oval_track(int segments, double straight, double radius, double width);

Frames compute_frames(const TrackData& track);

RaceLineProblem build_raceline_qp(const TrackData& track, const Frames& frames,
                                  CurvatureSampling sampling = CurvatureSampling::kKnot);

/// Periodic cubic spline interpolating the centerline; the feasible starting
/// point of the penalty iteration. Stage i holds theta_i, the global block
/// holds a copy of theta_1.
BlockVector fit_centerline_spline(const TrackData& track);

/// SPD penalty proxy of the QP's KKT system at the current iterate:
/// Psi = H + delta*I + rho*(Jeq^T Jeq + Jact^T Jact), with Jact the
/// boundary inequalities violated at `theta`, and r the negative gradient.
std::pair<BlockTridiagArrowMatrix, BlockVector> assemble_penalty_kkt(const RaceLineProblem& p,
                                                                     const BlockVector& theta,
                                                                     double rho, double delta);

/// Sum of sampled squared curvatures; equals theta^T H theta for the H
/// assembled by build_raceline_qp.
double curvature_objective(const BlockVector& theta, const Frames& frames,
                           CurvatureSampling sampling = CurvatureSampling::kKnot);

struct RacelineIteration
{
    double rho = 0.0;
    double objective = 0.0;
    double eq_residual_inf = 0.0;
    double max_boundary_violation = 0.0;
    double merit_before = 0.0; // penalty merit at the iteration's start, this rho
    double merit = 0.0;        // penalty merit after the step(s)
    int active_set_passes = 0; // inner re-solves until the hinge set stabilized
};

struct RacelineReport
{
    std::vector<RacelineIteration> iterations;
    double centerline_objective = 0.0;
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
    double other_seconds = 0.0;
};

struct PenaltySchedule
{
    int iterations = 6;
    double rho0 = 10.0;
    double growth = 10.0;
    double delta = 1e-8;
};

/// Quadratic-penalty race-line solve: repeated assemble + parallel solve
/// from the centerline spline with geometrically increasing rho.
BlockVector raceline_penalty_solve(const RaceLineProblem& p, const PenaltySchedule& schedule,
                                   const PartitionPlan& plan, RacelineReport* report = nullptr);

/// Equality residual (inf-norm) and max hinge violation of `theta`.
struct ConstraintMetrics
{
    double eq_residual_inf = 0.0;
    double max_boundary_violation = 0.0;
    double eq_residual_sq = 0.0;
    double violation_sq = 0.0;
};
ConstraintMetrics constraint_metrics(const RaceLineProblem& p, const BlockVector& theta);

/// Knot table: index, x, y, lateral offset n^T r, signed curvature.
void write_raceline_csv(const RaceLineProblem& p, const BlockVector& theta,
                        const std::string& path);

} // namespace bta
