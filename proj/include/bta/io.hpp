#pragma once

#include <string>

#include "bta/matrix.hpp"

namespace bta {

/// Versioned JSON interchange formats. A matrix file is an object
/// {version, M, n_g, stage_sizes, blocks} where each block carries
/// {name: "diag"|"sub"|"arrow"|"corner", index, rows, cols, data} with
/// 1-based stage indices (sub[i] couples stage i to i+1) and column-major
/// data. A vector file is {version, M, n_g, stage_sizes, stages, global}.
/// Floats are written with 17 significant digits, so round-trips are
/// bit-exact.
void save_matrix(const BlockTridiagArrowMatrix& m, const std::string& path);
BlockTridiagArrowMatrix load_matrix(const std::string& path);

void save_vector(const BlockVector& v, const std::string& path);
BlockVector load_vector(const std::string& path);

/// Shortest-of-17-significant-digits decimal representation.
std::string format_double(double x);

} // namespace bta
