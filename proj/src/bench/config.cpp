#include <fstream>
#include <set>

#include "topomg/bench.hpp"

namespace topomg {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

double read_number(const json& j, const char* key, double fallback, const std::string& where) {
    double v = fallback;
    if (j.contains(key) && !j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
    read(j, key, v, where);
    return v;
}

int read_int(const json& j, const char* key, int fallback, const std::string& where) {
    if (j.contains(key) && !j.at(key).is_number_integer()) {
        throw ConfigError(where + "." + key + ": expected an integer");
    }
    int v = fallback;
    read(j, key, v, where);
    return v;
}

SmootherConfig parse_smoother(const json& j, SmootherConfig s) {
    const std::string w = "preconditioner.smoother";
    check_keys(j, w, {"kind", "weight", "inner_iterations", "power_steps", "chebyshev_lower", "chebyshev_upper"});
    if (j.contains("kind")) {
        try {
            s.kind = smoother_kind_from_string(j.at("kind").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(w + ".kind: " + e.what());
        }
    }
    s.weight = read_number(j, "weight", s.weight, w);
    s.inner_iterations = read_int(j, "inner_iterations", s.inner_iterations, w);
    s.power_steps = read_int(j, "power_steps", s.power_steps, w);
    s.chebyshev_lower = read_number(j, "chebyshev_lower", s.chebyshev_lower, w);
    s.chebyshev_upper = read_number(j, "chebyshev_upper", s.chebyshev_upper, w);
    return s;
}

PreconditionerConfig parse_preconditioner(const json& j, PreconditionerConfig pc, const std::string& w,
                                          bool allow_label = false) {
    std::set<std::string> keys{"strategy", "coarse_max_dofs", "n_geo", "max_levels", "n_pre", "n_post", "smoother"};
    if (allow_label) keys.insert("label");
    check_keys(j, w, keys);
    if (j.contains("strategy")) {
        try {
            pc.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(w + ".strategy: " + e.what());
        }
    }
    pc.coarse_max_dofs = read_int(j, "coarse_max_dofs", pc.coarse_max_dofs, w);
    pc.n_geo = read_int(j, "n_geo", pc.n_geo, w);
    pc.max_levels = read_int(j, "max_levels", pc.max_levels, w);
    pc.n_pre = read_int(j, "n_pre", pc.n_pre, w);
    pc.n_post = read_int(j, "n_post", pc.n_post, w);
    if (j.contains("smoother")) pc.smoother = parse_smoother(j.at("smoother"), pc.smoother);
    return pc;
}

PenaltySchedule default_schedule(ProblemKind kind) {
    PenaltySchedule s;
    if (kind == ProblemKind::column_stability) {
        s.increment = 0.125;
        s.steps_per_value = 30;
        s.extension = PenaltySchedule::Extension{12.0, 0.25, 40};
    }
    return s;
}

json schedule_json(const PenaltySchedule& s) {
    json j{{"start", s.start}, {"stop", s.stop}, {"increment", s.increment}, {"steps_per_value", s.steps_per_value}};
    if (s.extension) {
        j["extension"] = {{"stop", s.extension->stop},
                          {"increment", s.extension->increment},
                          {"steps_per_value", s.extension->steps_per_value}};
    }
    return j;
}

json smoother_json(const SmootherConfig& s) {
    return {{"kind", to_string(s.kind)},
            {"weight", s.weight},
            {"inner_iterations", s.inner_iterations},
            {"power_steps", s.power_steps},
            {"chebyshev_lower", s.chebyshev_lower},
            {"chebyshev_upper", s.chebyshev_upper}};
}

json preconditioner_json(const PreconditionerConfig& p) {
    return {{"strategy", to_string(p.strategy)}, {"coarse_max_dofs", p.coarse_max_dofs},
            {"n_geo", p.n_geo},                  {"max_levels", p.max_levels},
            {"n_pre", p.n_pre},                  {"n_post", p.n_post},
            {"smoother", smoother_json(p.smoother)}};
}

}  // namespace

BenchConfig parse_bench_config(const json& j) {
    check_keys(j, "config",
               {"problem", "resolution", "volume_fraction", "schedule", "max_steps", "preconditioner", "solver", "eigen",
                "mma", "filter_radius", "nu", "seed", "output_dir", "compare", "compare_every", "grid"});
    if (!j.contains("problem")) throw ConfigError("config: missing required key 'problem'");
    BenchConfig cfg;
    OptimizationConfig& o = cfg.opt;
    try {
        o.problem = problem_kind_from_string(j.at("problem").get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config.problem: ") + e.what());
    }
    const bool grid = o.problem == ProblemKind::grid_diagnostic;
    const bool stability = o.problem == ProblemKind::column_stability;

    if (grid) {
        for (const char* k : {"schedule", "max_steps", "compare", "compare_every", "eigen", "mma", "volume_fraction",
                              "resolution", "filter_radius"}) {
            if (j.contains(k)) throw ConfigError(std::string("config: '") + k + "' is not allowed for grid_diagnostic");
        }
    } else if (j.contains("grid")) {
        throw ConfigError("config: 'grid' is only allowed for grid_diagnostic");
    }
    if (!stability && j.contains("eigen")) throw ConfigError("config: 'eigen' is only allowed for column_stability");

    if (j.contains("resolution")) {
        std::vector<Index> r;
        read(j, "resolution", r, "config");
        if (r.size() != default_resolution(o.problem).size()) throw ConfigError("config.resolution: wrong dimension count");
        for (Index d : r) {
            if (d < 1) throw ConfigError("config.resolution: entries must be >= 1");
        }
        o.resolution = r;
    } else if (!grid) {
        o.resolution = default_resolution(o.problem);
    }
    o.volume_fraction = read_number(j, "volume_fraction", default_volume_fraction(o.problem), "config");

    o.schedule = default_schedule(o.problem);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        check_keys(s, "schedule", {"start", "stop", "increment", "steps_per_value", "extension"});
        o.schedule.start = read_number(s, "start", o.schedule.start, "schedule");
        o.schedule.stop = read_number(s, "stop", o.schedule.stop, "schedule");
        o.schedule.increment = read_number(s, "increment", o.schedule.increment, "schedule");
        o.schedule.steps_per_value = read_int(s, "steps_per_value", o.schedule.steps_per_value, "schedule");
        if (s.contains("extension")) {
            if (s.at("extension").is_null()) {
                o.schedule.extension.reset();
            } else {
                const json& e = s.at("extension");
                check_keys(e, "schedule.extension", {"stop", "increment", "steps_per_value"});
                PenaltySchedule::Extension ext = o.schedule.extension.value_or(PenaltySchedule::Extension{});
                ext.stop = read_number(e, "stop", ext.stop, "schedule.extension");
                ext.increment = read_number(e, "increment", ext.increment, "schedule.extension");
                ext.steps_per_value = read_int(e, "steps_per_value", ext.steps_per_value, "schedule.extension");
                o.schedule.extension = ext;
            }
        }
    }
    o.max_steps = read_int(j, "max_steps", -1, "config");

    if (grid) {
        o.preconditioner.coarse_max_dofs = 700;
    }
    if (j.contains("preconditioner")) {
        o.preconditioner = parse_preconditioner(j.at("preconditioner"), o.preconditioner, "preconditioner");
    }

    o.solver.rtol = default_solver_rtol(o.problem);
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s, "solver", {"method", "rtol", "max_iterations", "restart"});
        if (s.contains("method")) {
            const std::string m = s.at("method").get<std::string>();
            if (m == "gmres") {
                o.solver.method = KrylovMethod::gmres;
            } else if (m == "fgmres") {
                o.solver.method = KrylovMethod::fgmres;
            } else {
                throw ConfigError("solver.method: expected gmres or fgmres");
            }
        }
        o.solver.rtol = read_number(s, "rtol", o.solver.rtol, "solver");
        o.solver.max_iterations = read_int(s, "max_iterations", o.solver.max_iterations, "solver");
        o.solver.restart = read_int(s, "restart", o.solver.restart, "solver");
    }

    if (j.contains("eigen")) {
        const json& e = j.at("eigen");
        check_keys(e, "eigen", {"j_min", "j_max", "n_modes", "rtol_residual", "rtol_eigenvalue_stall", "max_iterations"});
        o.eigen.j_min = read_int(e, "j_min", o.eigen.j_min, "eigen");
        o.eigen.j_max = read_int(e, "j_max", o.eigen.j_max, "eigen");
        o.eigen.n_modes = read_int(e, "n_modes", o.eigen.n_modes, "eigen");
        o.eigen.rtol_residual = read_number(e, "rtol_residual", o.eigen.rtol_residual, "eigen");
        o.eigen.rtol_eigenvalue_stall = read_number(e, "rtol_eigenvalue_stall", o.eigen.rtol_eigenvalue_stall, "eigen");
        o.eigen.max_iterations = read_int(e, "max_iterations", o.eigen.max_iterations, "eigen");
    }
    if (j.contains("mma")) {
        const json& m = j.at("mma");
        check_keys(m, "mma", {"move", "asym_init", "asym_increase", "asym_decrease", "asym_min", "asym_max"});
        o.mma.move = read_number(m, "move", o.mma.move, "mma");
        o.mma.asym_init = read_number(m, "asym_init", o.mma.asym_init, "mma");
        o.mma.asym_increase = read_number(m, "asym_increase", o.mma.asym_increase, "mma");
        o.mma.asym_decrease = read_number(m, "asym_decrease", o.mma.asym_decrease, "mma");
        o.mma.asym_min = read_number(m, "asym_min", o.mma.asym_min, "mma");
        o.mma.asym_max = read_number(m, "asym_max", o.mma.asym_max, "mma");
        if (!(o.mma.move > 0.0 && o.mma.move <= 1.0)) throw ConfigError("mma.move: must be in (0, 1]");
    }
    o.filter_radius = read_number(j, "filter_radius", o.filter_radius, "config");
    o.nu = read_number(j, "nu", o.nu, "config");
    if (j.contains("seed")) {
        const json& seed = j.at("seed");
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
            throw ConfigError("config.seed: expected a non-negative integer");
        }
        o.seed = seed.get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        std::string d;
        read(j, "output_dir", d, "config");
        cfg.output_dir = d;
    }
    if (j.contains("compare")) {
        if (!j.at("compare").is_array()) throw ConfigError("config.compare: expected an array");
        for (std::size_t i = 0; i < j.at("compare").size(); ++i) {
            const json& c = j.at("compare")[i];
            const std::string w = "compare[" + std::to_string(i) + "]";
            PreconditionerConfig pc = parse_preconditioner(c, o.preconditioner, w, true);
            std::string label = to_string(pc.strategy) + "_" + std::to_string(pc.coarse_max_dofs);
            read(c, "label", label, w);
            o.shadow_preconditioners.emplace_back(label, pc);
        }
    }
    o.shadow_every = read_int(j, "compare_every", 1, "config");

    if (grid) {
        GridConfig g;
        if (j.contains("grid")) {
            const json& gj = j.at("grid");
            check_keys(gj, "grid", {"domain", "feature_width", "pitches", "strategies", "void_density", "penalty"});
            g.domain = read_int(gj, "domain", g.domain, "grid");
            g.feature_width = read_int(gj, "feature_width", g.feature_width, "grid");
            read(gj, "pitches", g.pitches, "grid");
            if (gj.contains("strategies")) {
                std::vector<std::string> names;
                read(gj, "strategies", names, "grid");
                g.strategies.clear();
                for (const auto& n : names) {
                    try {
                        g.strategies.push_back(strategy_from_string(n));
                    } catch (const std::exception& e) {
                        throw ConfigError(std::string("grid.strategies: ") + e.what());
                    }
                }
            }
            g.void_density = read_number(gj, "void_density", g.void_density, "grid");
            g.penalty = read_number(gj, "penalty", g.penalty, "grid");
        }
        if (g.pitches.empty() || g.strategies.empty()) throw ConfigError("grid: pitches and strategies must be non-empty");
        for (Index p : g.pitches) {
            if (p < g.feature_width) throw ConfigError("grid.pitches: every pitch must be >= feature_width");
        }
        if (g.domain < g.feature_width || g.feature_width < 1) throw ConfigError("grid: invalid domain/feature_width");
        if (!(g.void_density > 0.0 && g.void_density <= 1.0)) throw ConfigError("grid.void_density: must be in (0, 1]");
        o.resolution = {g.domain, g.domain};
        cfg.grid = g;
    }

    try {
        if (grid) {
            o.preconditioner.validate();
            o.solver.validate();
        } else {
            o.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_bench_config(j);
}

json to_json(const BenchConfig& cfg) {
    const OptimizationConfig& o = cfg.opt;
    json j;
    j["problem"] = to_string(o.problem);
    j["resolution"] = o.resolution;
    j["preconditioner"] = preconditioner_json(o.preconditioner);
    j["solver"] = {{"method", o.solver.method == KrylovMethod::gmres ? "gmres" : "fgmres"},
                   {"rtol", o.solver.rtol},
                   {"max_iterations", o.solver.max_iterations},
                   {"restart", o.solver.restart}};
    j["nu"] = o.nu;
    j["seed"] = o.seed;
    j["output_dir"] = cfg.output_dir.string();
    if (cfg.grid) {
        const GridConfig& g = *cfg.grid;
        std::vector<std::string> names;
        for (Strategy s : g.strategies) names.push_back(to_string(s));
        j["grid"] = {{"domain", g.domain},       {"feature_width", g.feature_width}, {"pitches", g.pitches},
                     {"strategies", names},      {"void_density", g.void_density},   {"penalty", g.penalty}};
        return j;
    }
    j["volume_fraction"] = o.volume_fraction.value_or(default_volume_fraction(o.problem));
    j["schedule"] = schedule_json(o.schedule);
    j["max_steps"] = o.max_steps;
    j["filter_radius"] = o.filter_radius;
    j["mma"] = {{"move", o.mma.move},           {"asym_init", o.mma.asym_init}, {"asym_increase", o.mma.asym_increase},
                {"asym_decrease", o.mma.asym_decrease}, {"asym_min", o.mma.asym_min}, {"asym_max", o.mma.asym_max}};
    if (o.problem == ProblemKind::column_stability) {
        j["eigen"] = {{"j_min", o.eigen.j_min},
                      {"j_max", o.eigen.j_max},
                      {"n_modes", o.eigen.n_modes},
                      {"rtol_residual", o.eigen.rtol_residual},
                      {"rtol_eigenvalue_stall", o.eigen.rtol_eigenvalue_stall},
                      {"max_iterations", o.eigen.max_iterations}};
    }
    if (!o.shadow_preconditioners.empty()) {
        json c = json::array();
        for (const auto& [label, pc] : o.shadow_preconditioners) {
            json e = preconditioner_json(pc);
            e["label"] = label;
            c.push_back(e);
        }
        j["compare"] = c;
        j["compare_every"] = o.shadow_every;
    }
    return j;
}

json bench_config_schema() {
    const json positive_int = {{"type", "integer"}, {"minimum", 1}};
    const json smoother = {
        {"type", "object"},
        {"additionalProperties", false},
        {"properties",
         {{"kind", {{"enum", {"weighted_jacobi", "block_jacobi", "sor_chebyshev", "sor_gmres"}}}},
          {"weight", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
          {"inner_iterations", positive_int},
          {"power_steps", positive_int},
          {"chebyshev_lower", {{"type", "number"}}},
          {"chebyshev_upper", {{"type", "number"}}}}}};
    const json preconditioner = {
        {"type", "object"},
        {"additionalProperties", false},
        {"properties",
         {{"strategy", {{"enum", {"gmg", "amg", "hybrid", "hybrid_adaptive"}}}},
          {"coarse_max_dofs", positive_int},
          {"n_geo", {{"type", "integer"}, {"minimum", 0}}},
          {"max_levels", positive_int},
          {"n_pre", {{"type", "integer"}, {"minimum", 0}}},
          {"n_post", {{"type", "integer"}, {"minimum", 0}}},
          {"smoother", smoother}}}};
    json compare_entry = preconditioner;
    compare_entry["properties"]["label"] = {{"type", "string"}};
    return {
        {"$schema", "http://json-schema.org/draft-07/schema#"},
        {"title", "topomg benchmark configuration"},
        {"type", "object"},
        {"required", {"problem"}},
        {"additionalProperties", false},
        {"properties",
         {{"problem", {{"enum", {"cantilever2d", "column_stability", "grid_diagnostic", "cantilever3d"}}}},
          {"resolution", {{"type", "array"}, {"items", positive_int}, {"minItems", 2}, {"maxItems", 3}}},
          {"volume_fraction", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}},
          {"schedule",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"start", {{"type", "number"}}},
              {"stop", {{"type", "number"}}},
              {"increment", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"steps_per_value", positive_int},
              {"extension",
               {{"type", {"object", "null"}},
                {"properties",
                 {{"stop", {{"type", "number"}}},
                  {"increment", {{"type", "number"}}},
                  {"steps_per_value", positive_int}}}}}}}}},
          {"max_steps", {{"type", "integer"}}},
          {"preconditioner", preconditioner},
          {"solver",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"method", {{"enum", {"gmres", "fgmres"}}}},
              {"rtol", {{"type", "number"}, {"exclusiveMinimum", 0}, {"exclusiveMaximum", 1}}},
              {"max_iterations", {{"type", "integer"}, {"minimum", 0}}},
              {"restart", positive_int}}}}},
          {"eigen",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"j_min", positive_int},
              {"j_max", positive_int},
              {"n_modes", positive_int},
              {"rtol_residual", {{"type", "number"}}},
              {"rtol_eigenvalue_stall", {{"type", "number"}}},
              {"max_iterations", {{"type", "integer"}, {"minimum", 0}}}}}}},
          {"mma",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"move", {{"type", "number"}}},
              {"asym_init", {{"type", "number"}}},
              {"asym_increase", {{"type", "number"}}},
              {"asym_decrease", {{"type", "number"}}},
              {"asym_min", {{"type", "number"}}},
              {"asym_max", {{"type", "number"}}}}}}},
          {"filter_radius", {{"type", "number"}, {"exclusiveMinimum", 0}}},
          {"nu", {{"type", "number"}}},
          {"seed", {{"type", "integer"}, {"minimum", 0}}},
          {"output_dir", {{"type", "string"}}},
          {"compare", {{"type", "array"}, {"items", compare_entry}}},
          {"compare_every", positive_int},
          {"grid",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"domain", positive_int},
              {"feature_width", positive_int},
              {"pitches", {{"type", "array"}, {"items", positive_int}}},
              {"strategies", {{"type", "array"}, {"items", {{"enum", {"gmg", "amg", "hybrid", "hybrid_adaptive"}}}}}},
              {"void_density", {{"type", "number"}}},
              {"penalty", {{"type", "number"}}}}}}}}}};
}

}  // namespace topomg
