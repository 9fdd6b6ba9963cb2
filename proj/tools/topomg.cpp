#include <cstdlib>
#include <iostream>

#include <omp.h>

#include "CLI11.hpp"
#include "topomg/bench.hpp"

namespace {

int fail(int code, const std::string& what) {
    std::cerr << "error: " << what << '\n';
    return code;
}

void apply_seed_override(topomg::BenchConfig& cfg) {
    if (const char* env = std::getenv("TOPOMG_SEED")) {
        try {
            cfg.opt.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw topomg::ConfigError("TOPOMG_SEED is not a non-negative integer");
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multigrid-preconditioned topology optimization benchmarks"};
    app.require_subcommand(0, 1);
    bool print_schema = false;
    int threads = 0;
    app.add_flag("--print-schema", print_schema, "Print the JSON schema of run configurations");
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);

    auto* run = app.add_subcommand("run", "Run a configured experiment");
    std::string config_path, output_dir;
    run->add_option("config", config_path, "JSON configuration")->required();
    run->add_option("--output", output_dir, "Output directory (overrides the config)");
    run->add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);

    auto* grid = app.add_subcommand("grid", "Single grid-diagnostic solve");
    topomg::GridSpec spec;
    std::string strategy = "gmg";
    topomg::PreconditionerConfig pc;
    pc.coarse_max_dofs = 700;
    grid->add_option("--pitch-x", spec.column_pitch, "Column pitch (elements)")->required();
    grid->add_option("--pitch-y", spec.beam_pitch, "Beam pitch (elements)")->required();
    grid->add_option("--strategy", strategy, "Preconditioner")
        ->check(CLI::IsMember({"gmg", "amg", "hybrid", "hybrid_adaptive"}));
    grid->add_option("--domain", spec.domain, "Elements per side");
    grid->add_option("--width", spec.feature_width, "Strip width (elements)");
    grid->add_option("--coarse-max-dofs", pc.coarse_max_dofs, "Coarse-grid bound");
    grid->add_option("--n-geo", pc.n_geo, "Geometric levels of the hybrid");
    grid->add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);

    auto* report = app.add_subcommand("report", "Iteration and time ratios from CSV outputs");
    std::vector<std::string> csvs;
    report->add_option("csv", csvs, "history or grid CSV files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (threads > 0) omp_set_num_threads(threads);

    if (print_schema) {
        std::cout << topomg::bench_config_schema().dump(2) << '\n';
        return 0;
    }
    try {
        if (*run) {
            topomg::BenchConfig cfg = topomg::load_bench_config(config_path);
            apply_seed_override(cfg);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            topomg::run_benchmark(cfg, std::cerr);
            std::cout << "wrote " << cfg.output_dir.string() << '\n';
        } else if (*grid) {
            spec.validate();
            pc.strategy = topomg::strategy_from_string(strategy);
            topomg::SolveConfig solver;
            solver.rtol = topomg::default_solver_rtol(topomg::ProblemKind::grid_diagnostic);
            if (const char* env = std::getenv("TOPOMG_SEED")) pc.seed = std::stoull(env);
            const auto p = topomg::run_grid_point(spec, pc, solver);
            std::cout << topomg::kGridHeader << ",levels,converged\n"
                      << p.pitch_x << ',' << p.pitch_y << ',' << strategy << ',' << p.iterations << ',' << p.setup_s
                      << ',' << p.solve_s << ',' << p.levels << ',' << (p.converged ? 1 : 0) << '\n';
            if (!p.converged) return fail(2, "solver did not converge");
        } else if (*report) {
            std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
            topomg::print_report(topomg::compare_report(paths), std::cout);
        } else {
            std::cout << app.help();
        }
    } catch (const topomg::ConfigError& e) {
        return fail(1, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(1, e.what());
    } catch (const std::exception& e) {
        return fail(2, e.what());
    }
    return 0;
}
