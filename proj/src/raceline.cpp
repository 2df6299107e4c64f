#include "bta/raceline.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bta/errors.hpp"
#include "bta/parallel.hpp"
#include "bta/sequential.hpp"

namespace bta {

namespace {

constexpr int kCoeffs = 8; // [a_x, b_x, c_x, d_x, a_y, b_y, c_y, d_y]

using Row = std::array<double, kCoeffs>;

Row row_value(int axis, double s)
{
    Row r{};
    const int o = axis * 4;
    r[o] = 1.0;
    r[o + 1] = s;
    r[o + 2] = s * s;
    r[o + 3] = s * s * s;
    return r;
}

Row row_d1(int axis, double s)
{
    Row r{};
    const int o = axis * 4;
    r[o + 1] = 1.0;
    r[o + 2] = 2.0 * s;
    r[o + 3] = 3.0 * s * s;
    return r;
}

Row row_d2(int axis, double s)
{
    Row r{};
    const int o = axis * 4;
    r[o + 2] = 2.0;
    r[o + 3] = 6.0 * s;
    return r;
}

void set_row(DenseBlock& m, int row, const Row& r)
{
    for (int j = 0; j < kCoeffs; j++) { m(row, j) = r[j]; }
}

struct CurvatureWeights
{
    double pxx, pxy, pyy;
};

CurvatureWeights curvature_weights(const Frames& frames, int i)
{
    const double dx = frames.chord[i] * frames.tx[i];
    const double dy = frames.chord[i] * frames.ty[i];
    const double n2 = dx * dx + dy * dy;
    const double z = n2 * n2 * n2;
    return {dy * dy / z, -dx * dy / z, dx * dx / z};
}

// theta^T (J^T P J) theta contribution of one sample point, J mapping theta
// to [x'', y''] at s.
void add_sample_hessian(DenseBlock& q, const CurvatureWeights& w, double s, double weight)
{
    const Row jx = row_d2(0, s);
    const Row jy = row_d2(1, s);
    for (int a = 0; a < kCoeffs; a++) {
        for (int b = 0; b < kCoeffs; b++) {
            q(a, b) += weight * (jx[a] * w.pxx * jx[b] + jx[a] * w.pxy * jy[b] +
                                 jy[a] * w.pxy * jx[b] + jy[a] * w.pyy * jy[b]);
        }
    }
}

double parse_double(const std::string& tok, int line_no, const char* what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ParseError("track line " + std::to_string(line_no) + ": bad " + what + " value '" +
                         tok + "'");
    }
    if (used != tok.size()) {
        throw ParseError("track line " + std::to_string(line_no) + ": trailing characters in " +
                         what + " value '" + tok + "'");
    }
    return v;
}

} // namespace

TrackData load_track(const std::string& path)
{
    std::ifstream in(path);
    if (!in) { throw ParseError("cannot open track file '" + path + "'"); }
    TrackData track;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        // Strip comments and whitespace-only lines.
        if (auto pos = line.find('#'); pos != std::string::npos) { line.erase(pos); }
        if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }

        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ss, tok, ',')) {
            const auto b = tok.find_first_not_of(" \t\r");
            const auto e = tok.find_last_not_of(" \t\r");
            toks.push_back(b == std::string::npos ? std::string() : tok.substr(b, e - b + 1));
        }
        if (line_no == 1 && !toks.empty() &&
            toks[0].find_first_not_of("+-.0123456789eE") != std::string::npos) {
            continue; // header row
        }
        if (toks.size() != 4) {
            throw ParseError("track line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(toks.size()));
        }
        track.x.push_back(parse_double(toks[0], line_no, "x"));
        track.y.push_back(parse_double(toks[1], line_no, "y"));
        track.w_left.push_back(parse_double(toks[2], line_no, "w_l"));
        track.w_right.push_back(parse_double(toks[3], line_no, "w_r"));
        if (track.w_left.back() <= 0.0 || track.w_right.back() <= 0.0) {
            throw ParseError("track line " + std::to_string(line_no) + ": widths must be positive");
        }
    }
    if (track.size() < 4) { throw ParseError("track needs at least 4 points"); }
    return track;
}

void save_track(const TrackData& track, const std::string& path)
{
    std::ofstream out(path);
    if (!out) { throw ParseError("cannot open '" + path + "' for writing"); }
    out << "x,y,w_l,w_r\n";
    char buf[160];
    for (int i = 0; i < track.size(); i++) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", track.x[i], track.y[i],
                      track.w_left[i], track.w_right[i]);
        out << buf;
    }
}

TrackData make_circle_track(double radius, int segments, double width)
{
    TrackData t;
    for (int i = 0; i < segments; i++) {
        const double phi = 2.0 * M_PI * i / segments;
        t.x.push_back(radius * std::cos(phi));
        t.y.push_back(radius * std::sin(phi));
        t.w_left.push_back(width);
        t.w_right.push_back(width);
    }
    return t;
}

TrackData make_oval_track(int segments, double straight, double radius, double width)
{
    const double perimeter = 2.0 * straight + 2.0 * M_PI * radius;
    TrackData t;
    for (int i = 0; i < segments; i++) {
        double s = perimeter * i / segments;
        double px = 0.0;
        double py = 0.0;
        if (s < straight) { // bottom straight, left to right
            px = -straight / 2.0 + s;
            py = -radius;
        } else if (s < straight + M_PI * radius) { // right turn
            const double a = (s - straight) / radius - M_PI / 2.0;
            px = straight / 2.0 + radius * std::cos(a);
            py = radius * std::sin(a);
        } else if (s < 2.0 * straight + M_PI * radius) { // top straight, right to left
            px = straight / 2.0 - (s - straight - M_PI * radius);
            py = radius;
        } else { // left turn
            const double a = (s - 2.0 * straight - M_PI * radius) / radius + M_PI / 2.0;
            px = -straight / 2.0 + radius * std::cos(a);
            py = radius * std::sin(a);
        }
        t.x.push_back(px);
        t.y.push_back(py);
        t.w_left.push_back(width);
        t.w_right.push_back(width);
    }
    return t;
}

Frames compute_frames(const TrackData& track)
{
    const int n = track.size();
    if (n < 3) { throw DimensionError("compute_frames: needs at least 3 points"); }
    Frames f;
    for (int i = 0; i < n; i++) {
        const int prev = (i + n - 1) % n;
        const int next = (i + 1) % n;
        const double dx = track.x[next] - track.x[prev];
        const double dy = track.y[next] - track.y[prev];
        const double len = std::hypot(dx, dy);
        const double chord = std::hypot(track.x[next] - track.x[i], track.y[next] - track.y[i]);
        if (chord < 1e-12 || len < 1e-12) {
            throw DimensionError("compute_frames: coincident points near index " +
                                 std::to_string(i));
        }
        f.tx.push_back(dx / len);
        f.ty.push_back(dy / len);
        f.nx.push_back(dy / len);  // right-hand normal (t_y, -t_x)
        f.ny.push_back(-dx / len);
        f.chord.push_back(chord);
    }
    return f;
}

RaceLineProblem build_raceline_qp(const TrackData& track, const Frames& frames,
                                  CurvatureSampling sampling)
{
    const int n = track.size();
    if (frames.size() != n) { throw DimensionError("build_raceline_qp: frames/track mismatch"); }

    RaceLineProblem p;
    p.track = track;
    p.frames = frames;
    p.sampling = sampling;
    p.qp.global_size = kCoeffs;
    p.qp.Qg = DenseBlock(kCoeffs, kCoeffs);
    p.qp.cg.assign(kCoeffs, 0.0);
    p.qp.stages.resize(n);

    for (int i = 0; i < n; i++) {
        StageQP& st = p.qp.stages[i];
        st.Q = DenseBlock(kCoeffs, kCoeffs);
        const CurvatureWeights w = curvature_weights(frames, i);
        if (sampling == CurvatureSampling::kKnot) {
            add_sample_hessian(st.Q, w, 0.0, 1.0);
        } else {
            add_sample_hessian(st.Q, w, 0.0, 0.5);
            add_sample_hessian(st.Q, w, 1.0, 0.5);
        }
        st.c.assign(kCoeffs, 0.0);

        const bool terminal = i == n - 1;
        const bool pins_global = i == 0;
        const int eq_rows = 6 + 1 + (pins_global ? kCoeffs : 0);
        st.A = DenseBlock(eq_rows, kCoeffs);
        st.b.assign(eq_rows, 0.0);
        if (!terminal) { st.B = DenseBlock(eq_rows, kCoeffs); }
        if (terminal || pins_global) { st.Eg = DenseBlock(eq_rows, kCoeffs); }

        // Continuity (or closure, at the terminal stage) up to the second
        // derivative, x then y.
        for (int axis = 0; axis < 2; axis++) {
            const int r0 = axis * 3;
            set_row(st.A, r0 + 0, row_value(axis, 1.0));
            set_row(st.A, r0 + 1, row_d1(axis, 1.0));
            set_row(st.A, r0 + 2, row_d2(axis, 1.0));
            DenseBlock& other = terminal ? st.Eg : st.B;
            Row v = row_value(axis, 0.0);
            Row d1 = row_d1(axis, 0.0);
            Row d2 = row_d2(axis, 0.0);
            for (auto* row : {&v, &d1, &d2}) {
                for (double& e : *row) { e = -e; }
            }
            set_row(other, r0 + 0, v);
            set_row(other, r0 + 1, d1);
            set_row(other, r0 + 2, d2);
        }
        // Knot stays on the normal line through the centerline point.
        st.A(6, 0) = frames.tx[i];
        st.A(6, 4) = frames.ty[i];
        st.b[6] = frames.tx[i] * track.x[i] + frames.ty[i] * track.y[i];
        // The global variable is a copy of theta_1.
        if (pins_global) {
            for (int j = 0; j < kCoeffs; j++) {
                st.A(7 + j, j) = 1.0;
                st.Eg(7 + j, j) = -1.0;
            }
        }

        // Track boundary: -w_l <= n^T r <= w_r at the knot.
        st.C = DenseBlock(2, kCoeffs);
        st.h.assign(2, 0.0);
        const double nc = frames.nx[i] * track.x[i] + frames.ny[i] * track.y[i];
        st.C(0, 0) = frames.nx[i];
        st.C(0, 4) = frames.ny[i];
        st.h[0] = track.w_right[i] + nc;
        st.C(1, 0) = -frames.nx[i];
        st.C(1, 4) = -frames.ny[i];
        st.h[1] = track.w_left[i] - nc;
    }
    return p;
}

BlockVector fit_centerline_spline(const TrackData& track)
{
    const int n = track.size();
    if (n < 4) { throw DimensionError("fit_centerline_spline: track needs at least 4 points"); }

    // Periodic cubic spline: first derivatives m solve the cyclic tridiagonal
    // system m_{i-1} + 4 m_i + m_{i+1} = 3 (q_{i+1} - q_{i-1}). The cyclic
    // wrap is the arrow coupling when the last unknown is treated as the
    // global variable.
    BlockTridiagArrowMatrix sys;
    const int M = n - 1;
    sys.global_size = 1;
    sys.stage_sizes.assign(M, 1);
    for (int i = 0; i < M; i++) {
        DenseBlock d(1, 1);
        d(0, 0) = 4.0;
        sys.diag.push_back(d);
        DenseBlock a(1, 1);
        a(0, 0) = (i == 0 ? 1.0 : 0.0) + (i == M - 1 ? 1.0 : 0.0);
        sys.arrow.push_back(a);
        if (i + 1 < M) {
            DenseBlock s(1, 1);
            s(0, 0) = 1.0;
            sys.sub.push_back(s);
        }
    }
    sys.corner = DenseBlock(1, 1);
    sys.corner(0, 0) = 4.0;

    const SequentialFactor factor = factorize_sequential(sys);

    auto solve_coord = [&](const std::vector<double>& q) {
        BlockVector rhs = BlockVector::zeros_like(sys);
        for (int i = 0; i < n; i++) {
            const double v = 3.0 * (q[(i + 1) % n] - q[(i + n - 1) % n]);
            if (i < M) {
                rhs.stages[i][0] = v;
            } else {
                rhs.global[0] = v;
            }
        }
        const BlockVector sol = solve_sequential(factor, rhs);
        std::vector<double> deriv(n);
        for (int i = 0; i < M; i++) { deriv[i] = sol.stages[i][0]; }
        deriv[n - 1] = sol.global[0];
        return deriv;
    };

    const std::vector<double> mx = solve_coord(track.x);
    const std::vector<double> my = solve_coord(track.y);

    BlockVector theta;
    theta.stages.assign(n, std::vector<double>(kCoeffs, 0.0));
    for (int i = 0; i < n; i++) {
        const int next = (i + 1) % n;
        auto fill = [&](int axis, const std::vector<double>& q, const std::vector<double>& m) {
            const int o = axis * 4;
            const double dq = q[next] - q[i];
            theta.stages[i][o] = q[i];
            theta.stages[i][o + 1] = m[i];
            theta.stages[i][o + 2] = 3.0 * dq - 2.0 * m[i] - m[next];
            theta.stages[i][o + 3] = -2.0 * dq + m[i] + m[next];
        };
        fill(0, track.x, mx);
        fill(1, track.y, my);
    }
    theta.global = theta.stages[0];
    return theta;
}

double curvature_objective(const BlockVector& theta, const Frames& frames,
                           CurvatureSampling sampling)
{
    const int n = frames.size();
    double total = 0.0;
    for (int i = 0; i < n; i++) {
        const CurvatureWeights w = curvature_weights(frames, i);
        auto sample = [&](double s) {
            const auto& th = theta.stages[i];
            const double ddx = 2.0 * th[2] + 6.0 * th[3] * s;
            const double ddy = 2.0 * th[6] + 6.0 * th[7] * s;
            return ddx * ddx * w.pxx + 2.0 * ddx * ddy * w.pxy + ddy * ddy * w.pyy;
        };
        if (sampling == CurvatureSampling::kKnot) {
            total += sample(0.0);
        } else {
            total += 0.5 * sample(0.0) + 0.5 * sample(1.0);
        }
    }
    return total;
}

namespace {

// Residual of one constraint row group of stage i: A x_i + B x_{i+1} + Eg g - rhs.
std::vector<double> stage_row_residual(const BlockVector& theta, int i, const DenseBlock& a,
                                       const DenseBlock& b_blk, const DenseBlock& eg,
                                       const std::vector<double>& rhs)
{
    std::vector<double> res(rhs.size(), 0.0);
    for (std::size_t r = 0; r < rhs.size(); r++) { res[r] = -rhs[r]; }
    const int n_stages = static_cast<int>(theta.stages.size());
    for (int r = 0; r < a.rows; r++) {
        for (int j = 0; j < a.cols; j++) { res[r] += a(r, j) * theta.stages[i][j]; }
    }
    if (!b_blk.empty() && i + 1 < n_stages) {
        for (int r = 0; r < b_blk.rows; r++) {
            for (int j = 0; j < b_blk.cols; j++) { res[r] += b_blk(r, j) * theta.stages[i + 1][j]; }
        }
    }
    if (!eg.empty()) {
        for (int r = 0; r < eg.rows; r++) {
            for (int j = 0; j < eg.cols; j++) { res[r] += eg(r, j) * theta.global[j]; }
        }
    }
    return res;
}

} // namespace

ConstraintMetrics constraint_metrics(const RaceLineProblem& p, const BlockVector& theta)
{
    ConstraintMetrics m;
    const int n = p.qp.num_stages();
    for (int i = 0; i < n; i++) {
        const StageQP& st = p.qp.stages[i];
        const auto res = stage_row_residual(theta, i, st.A, st.B, st.Eg, st.b);
        for (double v : res) {
            m.eq_residual_inf = std::max(m.eq_residual_inf, std::abs(v));
            m.eq_residual_sq += v * v;
        }
        if (!st.C.empty()) {
            const auto viol = stage_row_residual(theta, i, st.C, st.D, st.Fg, st.h);
            for (double v : viol) {
                if (v > 0.0) {
                    m.max_boundary_violation = std::max(m.max_boundary_violation, v);
                    m.violation_sq += v * v;
                }
            }
        }
    }
    return m;
}

std::pair<BlockTridiagArrowMatrix, BlockVector> assemble_penalty_kkt(const RaceLineProblem& p,
                                                                     const BlockVector& theta,
                                                                     double rho, double delta)
{
    if (delta <= 0.0) { throw DimensionError("assemble_penalty_kkt: delta must be positive"); }
    const int n = p.qp.num_stages();
    const int ng = p.qp.global_size;
    if (theta.num_stages() != n || static_cast<int>(theta.global.size()) != ng) {
        throw DimensionError("assemble_penalty_kkt: iterate does not match problem");
    }

    BlockTridiagArrowMatrix psi;
    psi.global_size = ng;
    for (int i = 0; i < n; i++) {
        psi.stage_sizes.push_back(p.qp.stages[i].Q.rows);
        psi.diag.emplace_back(psi.stage_sizes[i], psi.stage_sizes[i]);
        if (i + 1 < n) { psi.sub.emplace_back(p.qp.stages[i + 1].Q.rows, psi.stage_sizes[i]); }
        if (ng > 0) { psi.arrow.emplace_back(ng, psi.stage_sizes[i]); }
    }
    psi.corner = DenseBlock(ng, ng);

    BlockVector grad = BlockVector::zeros_like(psi);

    // Cost term H theta and H + delta I.
    for (int i = 0; i < n; i++) {
        const DenseBlock& q = p.qp.stages[i].Q;
        for (int c = 0; c < q.cols; c++) {
            for (int r = 0; r < q.rows; r++) {
                psi.diag[i](r, c) += q(r, c);
                grad.stages[i][r] += q(r, c) * theta.stages[i][c];
            }
        }
        for (int r = 0; r < psi.diag[i].rows; r++) { psi.diag[i](r, r) += delta; }
    }
    for (int c = 0; c < ng; c++) {
        for (int r = 0; r < ng; r++) {
            psi.corner(r, c) += p.qp.Qg.empty() ? 0.0 : p.qp.Qg(r, c);
            if (!p.qp.Qg.empty()) { grad.global[r] += p.qp.Qg(r, c) * theta.global[c]; }
        }
    }
    for (int r = 0; r < ng; r++) { psi.corner(r, r) += delta; }

    // rho * J^T J and rho * J^T res, row group by row group.
    auto accumulate_rows = [&](int i, const DenseBlock& a, const DenseBlock& b_blk,
                               const DenseBlock& eg, const std::vector<double>& res,
                               const std::vector<bool>* active) {
        const int rows = a.rows;
        auto on = [&](int r) { return active == nullptr || (*active)[r]; };
        for (int r = 0; r < rows; r++) {
            if (!on(r)) { continue; }
            // Gradient: rho * row^T * res_r over (x_i, x_{i+1}, g).
            for (int j = 0; j < a.cols; j++) { grad.stages[i][j] += rho * a(r, j) * res[r]; }
            if (!b_blk.empty()) {
                for (int j = 0; j < b_blk.cols; j++) {
                    grad.stages[i + 1][j] += rho * b_blk(r, j) * res[r];
                }
            }
            if (!eg.empty()) {
                for (int j = 0; j < eg.cols; j++) { grad.global[j] += rho * eg(r, j) * res[r]; }
            }
            // Hessian blocks.
            for (int cj = 0; cj < a.cols; cj++) {
                for (int ci = 0; ci < a.cols; ci++) {
                    psi.diag[i](ci, cj) += rho * a(r, ci) * a(r, cj);
                }
                if (!b_blk.empty()) {
                    for (int ci = 0; ci < b_blk.cols; ci++) {
                        psi.sub[i](ci, cj) += rho * b_blk(r, ci) * a(r, cj);
                    }
                }
                if (!eg.empty()) {
                    for (int ci = 0; ci < ng; ci++) {
                        psi.arrow[i](ci, cj) += rho * eg(r, ci) * a(r, cj);
                    }
                }
            }
            if (!b_blk.empty()) {
                for (int cj = 0; cj < b_blk.cols; cj++) {
                    for (int ci = 0; ci < b_blk.cols; ci++) {
                        psi.diag[i + 1](ci, cj) += rho * b_blk(r, ci) * b_blk(r, cj);
                    }
                    if (!eg.empty()) {
                        for (int ci = 0; ci < ng; ci++) {
                            psi.arrow[i + 1](ci, cj) += rho * eg(r, ci) * b_blk(r, cj);
                        }
                    }
                }
            }
            if (!eg.empty()) {
                for (int cj = 0; cj < ng; cj++) {
                    for (int ci = 0; ci < ng; ci++) {
                        psi.corner(ci, cj) += rho * eg(r, ci) * eg(r, cj);
                    }
                }
            }
        }
    };

    if (rho != 0.0) {
        for (int i = 0; i < n; i++) {
            const StageQP& st = p.qp.stages[i];
            const auto eq_res = stage_row_residual(theta, i, st.A, st.B, st.Eg, st.b);
            accumulate_rows(i, st.A, st.B, st.Eg, eq_res, nullptr);
            if (!st.C.empty()) {
                const auto viol = stage_row_residual(theta, i, st.C, st.D, st.Fg, st.h);
                std::vector<bool> active(viol.size());
                bool any = false;
                for (std::size_t r = 0; r < viol.size(); r++) {
                    active[r] = viol[r] > 0.0;
                    any = any || active[r];
                }
                if (any) { accumulate_rows(i, st.C, st.D, st.Fg, viol, &active); }
            }
        }
    }

    BlockVector r = grad;
    for (auto& s : r.stages) {
        for (auto& v : s) { v = -v; }
    }
    for (auto& v : r.global) { v = -v; }
    return {std::move(psi), std::move(r)};
}

BlockVector raceline_penalty_solve(const RaceLineProblem& p, const PenaltySchedule& schedule,
                                   const PartitionPlan& plan, RacelineReport* report)
{
    using clock = std::chrono::steady_clock;
    const auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    auto t0 = clock::now();
    BlockVector theta = fit_centerline_spline(p.track);
    const double centerline_obj = curvature_objective(theta, p.frames, p.sampling);
    if (report) {
        report->centerline_objective = centerline_obj;
        report->other_seconds += seconds_since(t0);
    }

    // Active-set signature: which hinge rows are violated at theta.
    auto active_signature = [&p](const BlockVector& th) {
        std::vector<bool> sig;
        for (int i = 0; i < p.qp.num_stages(); i++) {
            const StageQP& st = p.qp.stages[i];
            if (st.C.empty()) { continue; }
            const auto viol = stage_row_residual(th, i, st.C, st.D, st.Fg, st.h);
            for (double v : viol) { sig.push_back(v > 0.0); }
        }
        return sig;
    };
    auto merit_at = [&p](const BlockVector& th, double rho_now, double* obj_out,
                         ConstraintMetrics* cm_out) {
        const double obj = curvature_objective(th, p.frames, p.sampling);
        const ConstraintMetrics cm = constraint_metrics(p, th);
        if (obj_out) { *obj_out = obj; }
        if (cm_out) { *cm_out = cm; }
        return obj + rho_now * (cm.eq_residual_sq + cm.violation_sq);
    };

    auto add_scaled = [](const BlockVector& base, const BlockVector& dir, double t) {
        BlockVector out = base;
        for (std::size_t i = 0; i < out.stages.size(); i++) {
            for (std::size_t j = 0; j < out.stages[i].size(); j++) {
                out.stages[i][j] += t * dir.stages[i][j];
            }
        }
        for (std::size_t j = 0; j < out.global.size(); j++) { out.global[j] += t * dir.global[j]; }
        return out;
    };

    constexpr int kMaxActiveSetPasses = 20;
    double rho = schedule.rho0;
    for (int iter = 0; iter < schedule.iterations; iter++) {
        const double merit_before = merit_at(theta, rho, nullptr, nullptr);

        // Semismooth Newton on the penalty function at this rho. The hinge
        // makes it piecewise quadratic but C^1, and the assembled gradient
        // matches the true gradient at the current point, so the step is a
        // descent direction; Armijo backtracking keeps the merit monotone
        // and a full step with an unchanged active set is an exact minimizer.
        int passes = 0;
        double merit_cur = merit_before;
        while (passes < kMaxActiveSetPasses) {
            const auto sig_before = active_signature(theta);

            t0 = clock::now();
            auto [psi, r] = assemble_penalty_kkt(p, theta, rho, schedule.delta);
            if (report) { report->other_seconds += seconds_since(t0); }

            SolveTiming timing;
            const BlockVector step = solve_timed(psi, r, plan, &timing);
            if (report) {
                report->factor_seconds += timing.factor_seconds;
                report->solve_seconds += timing.solve_seconds;
                report->other_seconds += timing.other_seconds;
            }

            // grad^T step = -r^T step (r is the negative gradient).
            double grad_dot_step = 0.0;
            for (int i = 0; i < theta.num_stages(); i++) {
                for (std::size_t j = 0; j < step.stages[i].size(); j++) {
                    grad_dot_step -= r.stages[i][j] * step.stages[i][j];
                }
            }
            for (std::size_t j = 0; j < step.global.size(); j++) {
                grad_dot_step -= r.global[j] * step.global[j];
            }

            double t = 1.0;
            BlockVector trial = add_scaled(theta, step, t);
            double merit_trial = merit_at(trial, rho, nullptr, nullptr);
            while (merit_trial > merit_cur + 1e-4 * t * grad_dot_step && t > 1e-8) {
                t *= 0.5;
                trial = add_scaled(theta, step, t);
                merit_trial = merit_at(trial, rho, nullptr, nullptr);
            }
            theta = std::move(trial);
            passes++;

            const bool no_progress = merit_cur - merit_trial <=
                                     1e-14 * std::max(1.0, std::abs(merit_cur));
            merit_cur = merit_trial;
            if ((t == 1.0 && active_signature(theta) == sig_before) || no_progress) { break; }
        }

        double obj = 0.0;
        ConstraintMetrics cm;
        const double merit = merit_at(theta, rho, &obj, &cm);
        if (!std::isfinite(obj) || !std::isfinite(cm.eq_residual_inf)) {
            throw std::runtime_error("raceline_penalty_solve: diverged at iteration " +
                                     std::to_string(iter + 1));
        }
        if (report) {
            RacelineIteration it;
            it.rho = rho;
            it.objective = obj;
            it.eq_residual_inf = cm.eq_residual_inf;
            it.max_boundary_violation = cm.max_boundary_violation;
            it.merit_before = merit_before;
            it.merit = merit;
            it.active_set_passes = passes;
            report->iterations.push_back(it);
        }
        rho *= schedule.growth;
    }
    return theta;
}

void write_raceline_csv(const RaceLineProblem& p, const BlockVector& theta, const std::string& path)
{
    std::ofstream out(path);
    if (!out) { throw ParseError("cannot open '" + path + "' for writing"); }
    out << "index,x,y,offset,kappa\n";
    char buf[200];
    for (int i = 0; i < p.qp.num_stages(); i++) {
        const auto& th = theta.stages[i];
        const double rx = th[0] - p.track.x[i];
        const double ry = th[4] - p.track.y[i];
        const double offset = p.frames.nx[i] * rx + p.frames.ny[i] * ry;
        const double dx = p.frames.chord[i] * p.frames.tx[i];
        const double dy = p.frames.chord[i] * p.frames.ty[i];
        const double ddx = 2.0 * th[2];
        const double ddy = 2.0 * th[6];
        const double kappa = (dx * ddy - ddx * dy) / std::pow(dx * dx + dy * dy, 1.5);
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", i, th[0], th[4], offset,
                      kappa);
        out << buf;
    }
}

} // namespace bta
