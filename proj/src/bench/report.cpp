#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "topomg/bench.hpp"

namespace topomg {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw ConfigError(path.string() + ": not a number: '" + s + "'");
    }
}

struct Totals {
    std::string label;
    std::string strategy;
    double iterations = 0.0;
    double time = 0.0;
};

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto row = split(line);
        if (row.size() != t.header.size()) throw ConfigError(path.string() + ": ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

Report compare_report(const std::vector<std::filesystem::path>& csv_paths) {
    if (csv_paths.empty()) throw ConfigError("report: no input files");
    std::vector<CsvTable> tables;
    for (const auto& p : csv_paths) {
        tables.push_back(read_csv(p));
        if (tables.back().header != tables.front().header) {
            throw ConfigError("report: schema mismatch between " + csv_paths.front().string() + " and " + p.string());
        }
    }
    Report report;
    const auto& header = tables.front().header;
    const bool grid = std::find(header.begin(), header.end(), "pitch_x") != header.end();

    if (grid) {
        report.kind = "grid";
        // (pitch_x, pitch_y) -> strategy -> (iterations, time)
        std::map<std::pair<long, long>, std::map<std::string, std::pair<double, double>>> points;
        for (std::size_t f = 0; f < tables.size(); ++f) {
            const auto& t = tables[f];
            const auto cx = t.column("pitch_x"), cy = t.column("pitch_y"), cs = t.column("strategy"),
                       ci = t.column("iterations"), cu = t.column("setup_s"), cv = t.column("solve_s");
            for (const auto& r : t.rows) {
                const std::pair<long, long> key{std::stol(r[cx]), std::stol(r[cy])};
                points[key][r[cs]] = {to_double(r[ci], csv_paths[f]),
                                      to_double(r[cu], csv_paths[f]) + to_double(r[cv], csv_paths[f])};
            }
        }
        for (const auto& [key, by_strategy] : points) {
            const auto base = by_strategy.find("amg");
            const auto& den = base != by_strategy.end() ? *base : *by_strategy.begin();
            for (const auto& [strategy, v] : by_strategy) {
                if (strategy == den.first && by_strategy.size() > 1) continue;
                report.rows.push_back({"pitch_x=" + std::to_string(key.first) + ",pitch_y=" + std::to_string(key.second),
                                       strategy, den.first, ratio(v.first, den.second.first),
                                       ratio(v.second, den.second.second)});
            }
        }
        return report;
    }

    report.kind = "history";
    std::vector<Totals> totals;
    for (std::size_t f = 0; f < tables.size(); ++f) {
        const auto& t = tables[f];
        const auto cs = t.column("strategy"), ci = t.column("solve_iters"), cu = t.column("setup_s"),
                   cv = t.column("solve_s");
        Totals tot;
        tot.strategy = t.rows.empty() ? "" : t.rows.front()[cs];
        for (const auto& r : t.rows) {
            tot.iterations += to_double(r[ci], csv_paths[f]);
            tot.time += to_double(r[cu], csv_paths[f]) + to_double(r[cv], csv_paths[f]);
        }
        totals.push_back(tot);
    }
    std::map<std::string, int> counts;
    for (const auto& t : totals) ++counts[t.strategy];
    for (std::size_t f = 0; f < totals.size(); ++f) {
        auto& t = totals[f];
        if (counts[t.strategy] == 1) {
            t.label = t.strategy;
        } else {
            const auto& p = csv_paths[f];
            const std::string dir = p.parent_path().filename().string();
            t.label = t.strategy + ":" + (p.stem() == "history" && !dir.empty() ? dir : p.stem().string());
        }
    }
    std::size_t base = 0;
    for (std::size_t f = 0; f < totals.size(); ++f) {
        if (totals[f].strategy == "amg") {
            base = f;
            break;
        }
    }
    for (std::size_t f = 0; f < totals.size(); ++f) {
        if (f == base && totals.size() > 1) continue;
        report.rows.push_back({"total", totals[f].label, totals[base].label,
                               ratio(totals[f].iterations, totals[base].iterations),
                               ratio(totals[f].time, totals[base].time)});
    }
    return report;
}

void print_report(const Report& report, std::ostream& out) {
    out << "kind,key,numerator,denominator,iteration_ratio,time_ratio\n";
    char buf[64];
    for (const auto& r : report.rows) {
        out << report.kind << ",\"" << r.key << "\"," << r.numerator << ',' << r.denominator << ',';
        std::snprintf(buf, sizeof buf, "%.4f,%.4f", r.iteration_ratio, r.time_ratio);
        out << buf << '\n';
    }
}

}  // namespace topomg
