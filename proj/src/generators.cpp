#include "bta/generators.hpp"

#include <cmath>
#include <random>

#include "bta/errors.hpp"

namespace bta {

namespace {

DenseBlock random_block(std::mt19937_64& rng, int rows, int cols)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseBlock b(rows, cols);
    for (auto& x : b.data) { x = u(rng); }
    return b;
}

double abs_row_sum(const DenseBlock& b, int row)
{
    double s = 0.0;
    for (int j = 0; j < b.cols; j++) { s += std::abs(b(row, j)); }
    return s;
}

double abs_col_sum(const DenseBlock& b, int col)
{
    double s = 0.0;
    for (int i = 0; i < b.rows; i++) { s += std::abs(b(i, col)); }
    return s;
}

} // namespace

BlockTridiagArrowMatrix random_spd_bta(int stages, int block_size, int global_size,
                                       std::uint64_t seed, double dominance)
{
    if (stages < 1 || block_size < 1 || global_size < 0) {
        throw DimensionError("random_spd_bta: invalid sizes");
    }
    std::mt19937_64 rng(seed);
    BlockTridiagArrowMatrix m;
    m.global_size = global_size;
    m.stage_sizes.assign(stages, block_size);

    for (int i = 0; i + 1 < stages; i++) {
        m.sub.push_back(random_block(rng, block_size, block_size));
    }
    if (global_size > 0) {
        for (int i = 0; i < stages; i++) { m.arrow.push_back(random_block(rng, global_size, block_size)); }
    }

    for (int i = 0; i < stages; i++) {
        DenseBlock g = random_block(rng, block_size, block_size);
        DenseBlock d(block_size, block_size);
        for (int c = 0; c < block_size; c++) {
            for (int r = c; r < block_size; r++) {
                double s = 0.0;
                for (int k = 0; k < block_size; k++) { s += g(r, k) * g(c, k); }
                d(r, c) = s;
            }
        }
        for (int r = 0; r < block_size; r++) {
            double coupling = 0.0;
            if (i > 0) { coupling += abs_row_sum(m.sub[i - 1], r); }       // block to the left
            if (i + 1 < stages) { coupling += abs_col_sum(m.sub[i], r); } // transposed block to the right
            if (global_size > 0) { coupling += abs_col_sum(m.arrow[i], r); }
            d(r, r) += dominance + coupling;
        }
        m.diag.push_back(std::move(d));
    }

    if (global_size > 0) {
        DenseBlock g = random_block(rng, global_size, global_size);
        DenseBlock corner(global_size, global_size);
        for (int c = 0; c < global_size; c++) {
            for (int r = c; r < global_size; r++) {
                double s = 0.0;
                for (int k = 0; k < global_size; k++) { s += g(r, k) * g(c, k); }
                corner(r, c) = s;
            }
        }
        for (int r = 0; r < global_size; r++) {
            double coupling = 0.0;
            for (int i = 0; i < stages; i++) { coupling += abs_row_sum(m.arrow[i], r); }
            corner(r, r) += dominance + coupling;
        }
        m.corner = std::move(corner);
    }
    return m;
}

BlockVector random_rhs(const BlockTridiagArrowMatrix& m, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockVector v = BlockVector::zeros_like(m);
    for (auto& s : v.stages) {
        for (auto& x : s) { x = u(rng); }
    }
    for (auto& x : v.global) { x = u(rng); }
    return v;
}

BlockVector multiply(const BlockTridiagArrowMatrix& m, const BlockVector& x)
{
    const int M = m.num_stages();
    const int ng = m.global_size;
    BlockVector y = BlockVector::zeros_like(m);

    auto add_sym = [](const DenseBlock& d, std::span<const double> v, std::span<double> out) {
        // Lower triangle authoritative.
        for (int c = 0; c < d.cols; c++) {
            for (int r = c; r < d.rows; r++) {
                out[r] += d(r, c) * v[c];
                if (r != c) { out[c] += d(r, c) * v[r]; }
            }
        }
    };
    auto add = [](const DenseBlock& b, std::span<const double> v, std::span<double> out) {
        for (int c = 0; c < b.cols; c++) {
            for (int r = 0; r < b.rows; r++) { out[r] += b(r, c) * v[c]; }
        }
    };
    auto add_t = [](const DenseBlock& b, std::span<const double> v, std::span<double> out) {
        for (int c = 0; c < b.cols; c++) {
            double s = 0.0;
            for (int r = 0; r < b.rows; r++) { s += b(r, c) * v[r]; }
            out[c] += s;
        }
    };

    for (int i = 0; i < M; i++) {
        add_sym(m.diag[i], x.stages[i], y.stages[i]);
        if (i + 1 < M) {
            add(m.sub[i], x.stages[i], y.stages[i + 1]);
            add_t(m.sub[i], x.stages[i + 1], y.stages[i]);
        }
        if (ng > 0) {
            add(m.arrow[i], x.stages[i], y.global);
            add_t(m.arrow[i], x.global, y.stages[i]);
        }
    }
    if (ng > 0) { add_sym(m.corner, x.global, y.global); }
    return y;
}

double relative_residual(const BlockTridiagArrowMatrix& m, const BlockVector& x,
                         const BlockVector& r)
{
    const BlockVector mx = multiply(m, x);
    double res = 0.0;
    for (int i = 0; i < m.num_stages(); i++) {
        for (std::size_t j = 0; j < mx.stages[i].size(); j++) {
            res = std::max(res, std::abs(mx.stages[i][j] - r.stages[i][j]));
        }
    }
    for (std::size_t j = 0; j < mx.global.size(); j++) {
        res = std::max(res, std::abs(mx.global[j] - r.global[j]));
    }

    // ||m||_inf from block row sums; the diagonal contribution mirrors the
    // authoritative lower triangle.
    const int M = m.num_stages();
    const int ng = m.global_size;
    double norm_m = 0.0;
    auto sym_row_sum = [](const DenseBlock& d, int row) {
        double s = 0.0;
        for (int j = 0; j <= row; j++) { s += std::abs(d(row, j)); }
        for (int i = row + 1; i < d.rows; i++) { s += std::abs(d(i, row)); }
        return s;
    };
    for (int i = 0; i < M; i++) {
        for (int row = 0; row < m.stage_sizes[i]; row++) {
            double s = sym_row_sum(m.diag[i], row);
            if (i > 0) {
                for (int j = 0; j < m.sub[i - 1].cols; j++) { s += std::abs(m.sub[i - 1](row, j)); }
            }
            if (i + 1 < M) {
                for (int r2 = 0; r2 < m.sub[i].rows; r2++) { s += std::abs(m.sub[i](r2, row)); }
            }
            if (ng > 0) {
                for (int r2 = 0; r2 < ng; r2++) { s += std::abs(m.arrow[i](r2, row)); }
            }
            norm_m = std::max(norm_m, s);
        }
    }
    if (ng > 0) {
        for (int row = 0; row < ng; row++) {
            double s = sym_row_sum(m.corner, row);
            for (int i = 0; i < M; i++) {
                for (int j = 0; j < m.arrow[i].cols; j++) { s += std::abs(m.arrow[i](row, j)); }
            }
            norm_m = std::max(norm_m, s);
        }
    }
    double norm_x = 0.0;
    double norm_r = 0.0;
    for (int i = 0; i < m.num_stages(); i++) {
        norm_x = std::max(norm_x, inf_norm(std::span<const double>(x.stages[i])));
        norm_r = std::max(norm_r, inf_norm(std::span<const double>(r.stages[i])));
    }
    norm_x = std::max(norm_x, inf_norm(std::span<const double>(x.global)));
    norm_r = std::max(norm_r, inf_norm(std::span<const double>(r.global)));
    return res / (norm_m * norm_x + norm_r);
}

} // namespace bta
