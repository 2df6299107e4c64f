#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bta {
namespace cli {

// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;
inline constexpr int kExitInfeasiblePlan = 5;

struct SolveOptions
{
    std::string matrix_file;
    std::string rhs_file;
    std::string out_file;
    int threads = 1;
    std::optional<std::pair<int, int>> plan_override; // (N1, Nk)
};

struct BenchOptions
{
    int stages = 200;
    int block_size = 59;
    int global_size = 0;
    std::vector<int> threads = {1, 2, 4};
    int reps = 30;
    std::uint64_t seed = 42;
    std::string csv_path; // empty: CSV to stdout
};

struct TheoryOptions
{
    int p_lo = 2;
    int p_hi = 16;
    int n_lo = 10;
    int n_hi = 200;
    std::string mode = "table2"; // table2 | grid | partition
    std::string csv_path;
};

struct RacelineOptions
{
    std::string track_file;
    std::string synthetic; // e.g. "circle:360" or "oval:2356"
    int threads = 1;
    int iterations = 6;
    std::string out_csv;
    double rho0 = 10.0;
    double growth = 10.0;
    double delta = 1e-8;
    bool two_point_sampling = false;
};

int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err);
int cmd_theory(const TheoryOptions& opt, std::ostream& out, std::ostream& err);
int cmd_raceline(const RacelineOptions& opt, std::ostream& out, std::ostream& err);

} // namespace cli
} // namespace bta
