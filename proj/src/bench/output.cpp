#include <cstdio>
#include <fstream>
#include <ostream>

#include "topomg/bench.hpp"

namespace topomg {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }
std::string seconds(double v) { return fmt("%.6f", v); }

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { open_out(path) << j.dump(2) << '\n'; }

constexpr const char* kShadowHeader = "step,label,strategy,levels,setup_s,solve_s,solve_iters,converged";

}  // namespace

std::string history_csv_row(const StepRecord& r) {
    std::string s = std::to_string(r.step) + ',' + exact(r.penalty) + ',' + r.strategy + ',' +
                    std::to_string(r.levels) + ',' + std::to_string(r.n_geo) + ',' + seconds(r.setup_s) + ',' +
                    seconds(r.solve_s) + ',' + std::to_string(r.solve_iters) + ',';
    s += (r.eig_s ? seconds(*r.eig_s) : "") + ',';
    s += (r.eig_iters ? std::to_string(*r.eig_iters) : "") + ',';
    s += (r.adjoint_s ? seconds(*r.adjoint_s) : "") + ',';
    s += (r.adjoint_iters ? std::to_string(*r.adjoint_iters) : "") + ',';
    s += exact(r.objective) + ',' + exact(r.volume);
    return s;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<StepRecord>& history) {
    auto out = open_out(path);
    out << kHistoryHeader << '\n';
    for (const auto& r : history) out << history_csv_row(r) << '\n';
}

void write_grid_csv(const std::filesystem::path& path, const std::vector<GridPoint>& points) {
    auto out = open_out(path);
    out << kGridHeader << '\n';
    for (const auto& p : points) {
        out << p.pitch_x << ',' << p.pitch_y << ',' << to_string(p.strategy) << ',' << p.iterations << ','
            << seconds(p.setup_s) << ',' << seconds(p.solve_s) << '\n';
    }
}

void write_density(const std::filesystem::path& stem, const StructuredMesh& mesh, std::span<const double> rho) {
    {
        auto bin = open_out(std::filesystem::path(stem).replace_extension(".bin"), std::ios::out | std::ios::binary);
        bin.write(reinterpret_cast<const char*>(rho.data()), static_cast<std::streamsize>(rho.size_bytes()));
    }
    auto vtk = open_out(std::filesystem::path(stem).replace_extension(".vtk"));
    const auto& d = mesh.dims();
    const auto& h = mesh.element_size();
    vtk << "# vtk DataFile Version 3.0\ndensity\nASCII\nDATASET STRUCTURED_POINTS\n";
    vtk << "DIMENSIONS " << d[0] + 1 << ' ' << d[1] + 1 << ' ' << (d.size() > 2 ? d[2] + 1 : 1) << '\n';
    vtk << "ORIGIN 0 0 0\n";
    vtk << "SPACING " << h[0] << ' ' << h[1] << ' ' << (h.size() > 2 ? h[2] : h[0]) << '\n';
    vtk << "CELL_DATA " << rho.size() << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
    for (double v : rho) vtk << exact(v) << '\n';
}

nlohmann::json run_benchmark(const BenchConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    nlohmann::json manifest;
    manifest["config"] = to_json(cfg);
    nlohmann::json files = nlohmann::json::array();

    if (cfg.grid) {
        const GridConfig& g = *cfg.grid;
        nlohmann::json hier = nlohmann::json::array();
        for (Strategy s : g.strategies) {
            GridConfig one = g;
            one.strategies = {s};
            const auto points = run_grid_sweep(one, cfg.opt.preconditioner, cfg.opt.solver, cfg.opt.seed);
            const std::string name = "grid_" + to_string(s) + ".csv";
            write_grid_csv(cfg.output_dir / name, points);
            files.push_back(name);
            for (const auto& p : points) {
                log << to_string(s) << " pitch_x=" << p.pitch_x << " pitch_y=" << p.pitch_y << " levels=" << p.levels
                    << " iters=" << p.iterations << (p.converged ? "" : " (not converged)") << '\n';
                hier.push_back({{"pitch_x", p.pitch_x},
                                {"pitch_y", p.pitch_y},
                                {"strategy", to_string(s)},
                                {"converged", p.converged},
                                {"hierarchy", p.hierarchy}});
            }
        }
        write_json(cfg.output_dir / "hierarchy.json", hier);
        files.push_back("hierarchy.json");
        manifest["files"] = files;
        write_json(cfg.output_dir / "manifest.json", manifest);
        return manifest;
    }

    auto history = open_out(cfg.output_dir / "history.csv");
    history << kHistoryHeader << '\n';
    const OptimizationResult res = run_optimization(cfg.opt, [&](const StepRecord& r) {
        history << history_csv_row(r) << '\n' << std::flush;
        log << "step " << r.step << " p=" << r.penalty << " iters=" << r.solve_iters << " obj=" << r.objective
            << " vol=" << r.volume << '\n';
    });
    history.close();
    files.push_back("history.csv");

    if (!res.shadow.empty()) {
        auto out = open_out(cfg.output_dir / "shadow.csv");
        out << kShadowHeader << '\n';
        for (const auto& s : res.shadow) {
            out << s.step << ',' << s.label << ',' << s.strategy << ',' << s.levels << ',' << seconds(s.setup_s) << ','
                << seconds(s.solve_s) << ',' << s.solve_iters << ',' << (s.converged ? 1 : 0) << '\n';
        }
        files.push_back("shadow.csv");
    }
    write_density(cfg.output_dir / "density", res.problem.mesh, res.rho);
    files.push_back("density.bin");
    files.push_back("density.vtk");
    write_json(cfg.output_dir / "hierarchy.json", res.hierarchy_summary);
    files.push_back("hierarchy.json");

    manifest["files"] = files;
    manifest["steps"] = res.history.size();
    if (!res.history.empty()) {
        manifest["final_objective"] = res.history.back().objective;
        manifest["final_volume"] = res.history.back().volume;
    }
    write_json(cfg.output_dir / "manifest.json", manifest);
    return manifest;
}

}  // namespace topomg
