#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "topomg/optimization.hpp"

namespace topomg {

/// Invalid or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Grid diagnostic -------------------------------------------------------------

struct GridSpec {
    Index domain = 264;
    Index feature_width = 4;
    Index column_pitch = 8;  // x period of the vertical strips
    Index beam_pitch = 8;    // y period of the horizontal strips

    void validate() const;
};

/// Strip start positions along one axis: 0, pitch, 2 pitch, ... plus a strip
/// flush with the far edge when the periodic pattern does not reach it.
[[nodiscard]] std::vector<Index> strip_starts(Index domain, Index width, Index pitch);

/// Per-element densities (x fastest): 1 on strips, `void_density` elsewhere.
[[nodiscard]] Vector generate_grid_structure(const GridSpec& spec, double void_density = 1e-10);

struct GridConfig {
    Index domain = 264;
    Index feature_width = 4;
    std::vector<Index> pitches{8, 16, 32, 64, 128};
    std::vector<Strategy> strategies{Strategy::gmg, Strategy::amg, Strategy::hybrid};
    double void_density = 1e-10;
    double penalty = 3.0;
};

struct GridPoint {
    Index pitch_x = 0;
    Index pitch_y = 0;
    Strategy strategy = Strategy::gmg;
    int levels = 0;
    int iterations = 0;
    double setup_s = 0.0;
    double solve_s = 0.0;
    bool converged = false;
    nlohmann::json hierarchy;
};

/// Builds K for the grid structure and solves once from a zero guess.
[[nodiscard]] GridPoint run_grid_point(const GridSpec& spec, const PreconditionerConfig& pc, const SolveConfig& solver,
                                       double penalty = 3.0, double void_density = 1e-10, double nu = 0.3);

[[nodiscard]] std::vector<GridPoint> run_grid_sweep(const GridConfig& grid, const PreconditionerConfig& base,
                                                    const SolveConfig& solver, std::uint64_t seed);

// Configuration ----------------------------------------------------------------

struct BenchConfig {
    OptimizationConfig opt;
    std::optional<GridConfig> grid;  // set for grid_diagnostic
    std::filesystem::path output_dir = "out";
};

[[nodiscard]] BenchConfig parse_bench_config(const nlohmann::json& j);
[[nodiscard]] BenchConfig load_bench_config(const std::filesystem::path& path);
/// Fully resolved configuration (defaults filled in).
[[nodiscard]] nlohmann::json to_json(const BenchConfig& cfg);
[[nodiscard]] nlohmann::json bench_config_schema();

// Outputs ----------------------------------------------------------------------

inline constexpr const char* kHistoryHeader =
    "step,penalty,strategy,levels,n_geo,setup_s,solve_s,solve_iters,eig_s,eig_iters,adjoint_s,adjoint_iters,objective,"
    "volume";
inline constexpr const char* kGridHeader = "pitch_x,pitch_y,strategy,iterations,setup_s,solve_s";

[[nodiscard]] std::string history_csv_row(const StepRecord& r);
void write_history_csv(const std::filesystem::path& path, const std::vector<StepRecord>& history);
void write_grid_csv(const std::filesystem::path& path, const std::vector<GridPoint>& points);
void write_density(const std::filesystem::path& stem, const StructuredMesh& mesh, std::span<const double> rho);

/// Runs the configured experiment and writes its artifacts; returns the
/// manifest. Progress lines go to `log`.
nlohmann::json run_benchmark(const BenchConfig& cfg, std::ostream& log);

// Reporting --------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const;
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

struct RatioRow {
    std::string key;            // "pitch_x=..,pitch_y=.." or a strategy label
    std::string numerator;      // strategy
    std::string denominator;    // strategy
    double iteration_ratio = 0.0;
    double time_ratio = 0.0;
};

struct Report {
    std::string kind;  // "history" or "grid"
    std::vector<RatioRow> rows;
};

/// GMG/AMG and hybrid/AMG iteration and time ratios. History CSVs are
/// compared by totals over the run, grid CSVs point by point.
[[nodiscard]] Report compare_report(const std::vector<std::filesystem::path>& csv_paths);
void print_report(const Report& report, std::ostream& out);

}  // namespace topomg
