#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bta/commands.hpp"

int main(int argc, char** argv)
{
    using namespace bta::cli;

    CLI::App app{"Block-tridiagonal-arrow KKT solver: parallel Cholesky factorization, "
                 "flop model, and problem generators"};
    app.require_subcommand(1);

    SolveOptions solve_opt;
    std::string plan_str;
    auto* solve = app.add_subcommand("solve", "Solve a system from matrix/rhs files");
    solve->add_option("--matrix", solve_opt.matrix_file, "Matrix JSON file")->required();
    solve->add_option("--rhs", solve_opt.rhs_file, "Right-hand side JSON file")->required();
    solve->add_option("--out", solve_opt.out_file, "Solution output file")->required();
    solve->add_option("--threads", solve_opt.threads, "Worker count p")->default_val(1);
    solve->add_option("--plan", plan_str, "Override segment lengths as \"N1,Nk\"");

    BenchOptions bench_opt;
    auto* bench = app.add_subcommand("bench", "Benchmark factorization and solve");
    bench->add_option("--stages", bench_opt.stages, "Stage count M")->default_val(200);
    bench->add_option("--block-size", bench_opt.block_size, "Stage block size b")->default_val(59);
    bench->add_option("--global-size", bench_opt.global_size, "Global block size n_g")
        ->default_val(0);
    bench->add_option("--threads", bench_opt.threads, "Thread counts to benchmark")
        ->delimiter(',');
    bench->add_option("--reps", bench_opt.reps, "Repetitions per configuration")->default_val(30);
    bench->add_option("--seed", bench_opt.seed, "Generator seed")->default_val(42);
    bench->add_option("--csv", bench_opt.csv_path, "Write the CSV report here (default stdout)");

    TheoryOptions theory_opt;
    auto* theory = app.add_subcommand("theory", "Emit theoretical speedup tables");
    theory->add_option("--mode", theory_opt.mode, "table2 | grid | partition")
        ->default_val("table2");
    theory->add_option("--p-min", theory_opt.p_lo, "Smallest thread count")->default_val(2);
    theory->add_option("--p-max", theory_opt.p_hi, "Largest thread count")->default_val(16);
    theory->add_option("--n-min", theory_opt.n_lo, "Smallest horizon")->default_val(10);
    theory->add_option("--n-max", theory_opt.n_hi, "Largest horizon")->default_val(200);
    theory->add_option("--csv", theory_opt.csv_path, "Write the CSV here (default stdout)");

    RacelineOptions race_opt;
    auto* race = app.add_subcommand("raceline", "Minimum-curvature race-line demo");
    race->add_option("--track", race_opt.track_file, "Track CSV (x,y,w_l,w_r)");
    race->add_option("--synthetic", race_opt.synthetic,
                     "Synthetic track, e.g. circle:360 or oval:2356");
    race->add_option("--threads", race_opt.threads, "Worker count p")->default_val(1);
    race->add_option("--iters", race_opt.iterations, "Penalty iterations")->default_val(6);
    race->add_option("--out", race_opt.out_csv, "Race-line CSV output");
    race->add_option("--rho0", race_opt.rho0, "Initial penalty weight")->default_val(10.0);
    race->add_option("--rho-growth", race_opt.growth, "Penalty growth per iteration")
        ->default_val(10.0);
    race->add_option("--delta", race_opt.delta, "Step regularization")->default_val(1e-8);
    race->add_flag("--two-point", race_opt.two_point_sampling,
                   "Sample curvature at both segment ends");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (solve->parsed()) {
        if (!plan_str.empty()) {
            const auto comma = plan_str.find(',');
            try {
                if (comma == std::string::npos) { throw std::invalid_argument(plan_str); }
                solve_opt.plan_override = {std::stoi(plan_str.substr(0, comma)),
                                           std::stoi(plan_str.substr(comma + 1))};
            } catch (const std::exception&) {
                std::cerr << "error: --plan expects \"N1,Nk\"\n";
                return kExitUsage;
            }
        }
        return cmd_solve(solve_opt, std::cout, std::cerr);
    }
    if (bench->parsed()) { return cmd_bench(bench_opt, std::cout, std::cerr); }
    if (theory->parsed()) { return cmd_theory(theory_opt, std::cout, std::cerr); }
    if (race->parsed()) { return cmd_raceline(race_opt, std::cout, std::cerr); }
    return kExitUsage;
}
