#pragma once

// Parameter sweeps over the three model backends, persisted as CSV.
//
// CSV schema (one header line, comma separated, no quoting):
//   model,method,L,param1,param2,observable,value,std_error,seed
// Reals use 17 significant digits so a file parses back to identical doubles.
// A row that could not be computed carries observable "error:<message>" and
// NaN value / std_error; the rest of the sweep still runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fidmet/eight_vertex.hpp"
#include "fidmet/ising.hpp"
#include "fidmet/smf_toric.hpp"

namespace fidmet {

enum class Model { smf, ising, eight_vertex };
enum class Method { enumerate, mc, exact_formula };

inline std::string to_string(Model m) {
    switch (m) {
        case Model::smf: return "smf";
        case Model::ising: return "ising";
        default: return "eight_vertex";
    }
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::enumerate: return "enumerate";
        case Method::mc: return "mc";
        default: return "exact_formula";
    }
}

inline Model parse_model(const std::string& s) {
    if (s == "smf") return Model::smf;
    if (s == "ising") return Model::ising;
    if (s == "eight_vertex") return Model::eight_vertex;
    throw std::invalid_argument("unknown model '" + s + "'");
}

inline Method parse_method(const std::string& s) {
    if (s == "enumerate") return Method::enumerate;
    if (s == "mc") return Method::mc;
    if (s == "exact_formula") return Method::exact_formula;
    throw std::invalid_argument("unknown method '" + s + "'");
}

struct GridAxis {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;

    double at(std::size_t i) const {
        if (count == 1) return start;
        return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

struct SweepSpec {
    Model model = Model::smf;
    Method method = Method::enumerate;
    GridAxis axis1;           // beta, or u = c^2
    GridAxis axis2;           // v = d^2 (eight_vertex only)
    bool paired_axes = false;  // eight_vertex: zip the axes instead of the Cartesian product
    std::vector<std::size_t> sizes;
    std::size_t n_therm = 1000;
    std::size_t n_sweeps = 10000;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 1;

    void validate() const {
        if (axis1.count < 1 || axis2.count < 1) throw std::invalid_argument("sweep: grid counts must be >= 1");
        if (model == Model::eight_vertex && paired_axes && axis1.count != axis2.count) {
            throw std::invalid_argument("sweep: paired axes need equal counts");
        }
        if (method != Method::exact_formula && sizes.empty()) {
            throw std::invalid_argument("sweep: at least one lattice size is required");
        }
        if (method == Method::mc && seeds.empty()) throw std::invalid_argument("sweep: mc needs at least one seed");
        const std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
        if (unique.size() != seeds.size()) throw std::invalid_argument("sweep: seeds must be unique");
    }

    /// Grid points as (param1, param2); param2 is 0 for one-parameter models.
    std::vector<std::pair<double, double>> grid() const {
        std::vector<std::pair<double, double>> pts;
        if (model != Model::eight_vertex) {
            for (std::size_t i = 0; i < axis1.count; ++i) pts.emplace_back(axis1.at(i), 0.0);
        } else if (paired_axes) {
            for (std::size_t i = 0; i < axis1.count; ++i) pts.emplace_back(axis1.at(i), axis2.at(i));
        } else {
            for (std::size_t i = 0; i < axis1.count; ++i) {
                for (std::size_t j = 0; j < axis2.count; ++j) pts.emplace_back(axis1.at(i), axis2.at(j));
            }
        }
        return pts;
    }
};

struct SweepRow {
    std::string model;
    std::string method;
    std::size_t L = 0;  // 0 for thermodynamic-limit formulas
    double param1 = 0.0;
    double param2 = 0.0;
    std::string observable;
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {"model", "method",     "L",         "param1", "param2",
                                                  "observable", "value", "std_error", "seed"};
    return cols;
}

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string to_csv(const SweepResult& r) {
    std::string out;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) {
        if (i) out += ',';
        out += csv_columns()[i];
    }
    out += '\n';
    for (const auto& row : r.rows) {
        out += row.model + ',' + row.method + ',' + std::to_string(row.L) + ',' + format_real(row.param1) + ',' +
               format_real(row.param2) + ',' + row.observable + ',' + format_real(row.value) + ',' +
               format_real(row.std_error) + ',' + std::to_string(row.seed) + '\n';
    }
    return out;
}

inline void write_csv(const SweepResult& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << to_csv(r);
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_real(const std::string& s) {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
    return x;
}

/// Parses CSV text in the sweep schema. Column order is taken from the header.
inline SweepResult parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const auto& c : csv_columns()) {
        if (!col.count(c)) throw std::invalid_argument("csv: missing column '" + c + "'");
    }
    SweepResult r;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            throw std::invalid_argument("csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                                        " fields, expected " + std::to_string(header.size()));
        }
        SweepRow row;
        row.model = f[col["model"]];
        row.method = f[col["method"]];
        row.L = static_cast<std::size_t>(std::stoull(f[col["L"]]));
        row.param1 = parse_real(f[col["param1"]]);
        row.param2 = parse_real(f[col["param2"]]);
        row.observable = f[col["observable"]];
        row.value = parse_real(f[col["value"]]);
        row.std_error = parse_real(f[col["std_error"]]);
        row.seed = std::stoull(f[col["seed"]]);
        r.rows.push_back(std::move(row));
    }
    return r;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline SweepResult read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

/// Runs fn(i) for i in [0, n) on `threads` workers; results come back in index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

namespace detail {

inline std::string sanitize(std::string msg) {
    for (char& ch : msg) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return msg;
}

struct RowSink {
    const SweepSpec& spec;
    double p1;
    double p2;
    std::size_t L;
    std::vector<SweepRow>& rows;

    void add(const std::string& obs, double value, double err = 0.0, std::uint64_t seed = 0) const {
        rows.push_back({to_string(spec.model), to_string(spec.method), L, p1, p2, obs, value, err, seed});
    }
    void error(const std::string& msg, std::uint64_t seed = 0) const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        add("error:" + sanitize(msg), nan, nan, seed);
    }
};

struct SpectrumCache {
    std::map<std::size_t, SmfSpectrum> smf;
    std::map<std::size_t, EightVertexSpectrum> eight_vertex;
    std::map<std::size_t, std::string> failures;
};

inline void smf_rows(const SweepSpec& spec, const SpectrumCache& cache, const RowSink& out) {
    const double beta = out.p1;
    const double n_bonds = 2.0 * static_cast<double>(out.L * out.L);
    const double n_sites = static_cast<double>(out.L * out.L);
    switch (spec.method) {
        case Method::enumerate: {
            if (auto f = cache.failures.find(out.L); f != cache.failures.end()) return out.error(f->second);
            const auto& s = cache.smf.at(out.L);
            const double g = s.metric(beta);
            out.add("g_bb", g);
            out.add("g_bb_per_site", g / n_sites);
            out.add("m", s.magnetization(beta));
            out.add("Z", s.partition_function(beta));
            return;
        }
        case Method::mc:
            for (auto seed : spec.seeds) {
                try {
                    const auto r = mc_sample_energy(beta, out.L, spec.n_therm, spec.n_sweeps, seed);
                    out.add("g_bb", 0.25 * r.variance.mean, 0.25 * r.variance.std_error, seed);
                    out.add("g_bb_per_site", 0.25 * r.variance.mean / n_sites, 0.25 * r.variance.std_error / n_sites,
                            seed);
                    out.add("m", r.energy.mean / n_bonds, r.energy.std_error / n_bonds, seed);
                } catch (const std::exception& e) {
                    out.error(e.what(), seed);
                }
            }
            return;
        case Method::exact_formula:
            try {
                out.add("g_bb_per_site", onsager_specific_heat(beta) / (4.0 * beta * beta));
            } catch (const std::exception& e) {
                out.error(e.what());
            }
            return;
    }
}

inline void ising_rows(const SweepSpec& spec, const RowSink& out) {
    const double beta = out.p1;
    try {
        switch (spec.method) {
            case Method::enumerate: {
                const auto r = ising_exact(beta, out.L);
                out.add("c_v", beta * beta * r.energy_variance / static_cast<double>(out.L * out.L));
                out.add("E_mean", r.mean_energy);
                out.add("E_var", r.energy_variance);
                return;
            }
            case Method::mc:
                for (auto seed : spec.seeds) {
                    try {
                        const auto r = mc_sample_energy(beta, out.L, spec.n_therm, spec.n_sweeps, seed);
                        out.add("c_v", r.specific_heat.mean, r.specific_heat.std_error, seed);
                        out.add("E_mean", r.energy.mean, r.energy.std_error, seed);
                        out.add("E_var", r.variance.mean, r.variance.std_error, seed);
                    } catch (const std::exception& e) {
                        out.error(e.what(), seed);
                    }
                }
                return;
            case Method::exact_formula:
                out.add("c_v", onsager_specific_heat(beta));
                return;
        }
    } catch (const std::exception& e) {
        out.error(e.what());
    }
}

inline void eight_vertex_rows(const SweepSpec& spec, const SpectrumCache& cache, const RowSink& out) {
    const double u = out.p1;
    const double v = out.p2;
    const double n_sites = static_cast<double>(out.L * out.L);
    try {
        switch (spec.method) {
            case Method::enumerate: {
                if (auto f = cache.failures.find(out.L); f != cache.failures.end()) return out.error(f->second);
                const auto& s = cache.eight_vertex.at(out.L);
                const auto m = s.moments(u, v);
                const auto g = s.metric(u, v);
                out.add("g_cc", g.g_cc);
                out.add("g_dd", g.g_dd);
                out.add("g_cd", g.g_cd);
                out.add("g_cc_per_site", g.g_cc / n_sites);
                out.add("g_dd_per_site", g.g_dd / n_sites);
                out.add("g_cd_per_site", g.g_cd / n_sites);
                out.add("nc_mean", m.mean_c);
                out.add("nd_mean", m.mean_d);
                out.add("Z", s.partition_function(u, v));
                return;
            }
            case Method::mc:
                for (auto seed : spec.seeds) {
                    try {
                        const auto r = mc_sample_vertices(u, v, out.L, spec.n_therm, spec.n_sweeps, seed);
                        const auto g = r.metric(u, v);
                        out.add("g_cc", g.g_cc, r.var_c.std_error / (4.0 * u * u), seed);
                        out.add("g_dd", g.g_dd, r.var_d.std_error / (4.0 * v * v), seed);
                        out.add("g_cd", g.g_cd, r.cov_cd.std_error / (2.0 * u * v), seed);
                        out.add("g_cc_per_site", g.g_cc / n_sites, r.var_c.std_error / (4.0 * u * u * n_sites), seed);
                        out.add("g_dd_per_site", g.g_dd / n_sites, r.var_d.std_error / (4.0 * v * v * n_sites), seed);
                        out.add("g_cd_per_site", g.g_cd / n_sites, r.cov_cd.std_error / (2.0 * u * v * n_sites),
                                seed);
                        out.add("nc_mean", r.mean_c.mean, r.mean_c.std_error, seed);
                        out.add("nd_mean", r.mean_d.mean, r.mean_d.std_error, seed);
                    } catch (const std::exception& e) {
                        out.error(e.what(), seed);
                    }
                }
                return;
            case Method::exact_formula: {
                const auto e = scaling_exponent(u, v);
                out.add("exponent", e.exponent);
                out.add("pi_over_mu", e.pi_over_mu);
                out.add("phase_distance", phase_classifier(u, v).distance);
                return;
            }
        }
    } catch (const std::exception& e) {
        out.error(e.what());
    }
}

}  // namespace detail

/// Evaluates the spec on its grid. Rows are ordered by grid index, then by the
/// order of `sizes`, independent of the thread count.
inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const auto grid = spec.grid();
    std::vector<std::size_t> sizes = spec.sizes;
    if (spec.method == Method::exact_formula) sizes = {0};

    detail::SpectrumCache cache;
    if (spec.method == Method::enumerate && spec.model != Model::ising) {
        for (std::size_t L : sizes) {
            try {
                const TorusLattice lat(L);
                if (spec.model == Model::smf) {
                    cache.smf.emplace(L, SmfSpectrum::enumerate(lat, spec.threads));
                } else {
                    cache.eight_vertex.emplace(L, EightVertexSpectrum::enumerate(lat));
                }
            } catch (const std::exception& e) {
                cache.failures[L] = e.what();
            }
        }
    }

    const std::size_t n_tasks = grid.size() * sizes.size();
    const auto blocks = parallel_map<std::vector<SweepRow>>(n_tasks, spec.threads, [&](std::size_t task) {
        const auto [p1, p2] = grid[task / sizes.size()];
        const std::size_t L = sizes[task % sizes.size()];
        std::vector<SweepRow> rows;
        const detail::RowSink sink{spec, p1, p2, L, rows};
        try {
            switch (spec.model) {
                case Model::smf: detail::smf_rows(spec, cache, sink); break;
                case Model::ising: detail::ising_rows(spec, sink); break;
                case Model::eight_vertex: detail::eight_vertex_rows(spec, cache, sink); break;
            }
        } catch (const std::exception& e) {
            sink.error(e.what());
        }
        return rows;
    });
    SweepResult result;
    for (const auto& b : blocks) result.rows.insert(result.rows.end(), b.begin(), b.end());
    return result;
}

enum class PlotKind { metric_vs_beta, peak_scaling, exponent_map };

inline PlotKind parse_plot_kind(const std::string& s) {
    if (s == "metric_vs_beta") return PlotKind::metric_vs_beta;
    if (s == "peak_scaling") return PlotKind::peak_scaling;
    if (s == "exponent_map") return PlotKind::exponent_map;
    throw std::invalid_argument("unknown plot kind '" + s + "'");
}

/// Standalone matplotlib script that plots `csv_relpath` (resolved next to the
/// script). `header_line` is the CSV's first line, checked for required columns.
inline std::string plot_script(const std::string& header_line, const std::string& csv_relpath, PlotKind kind,
                               const std::string& observable = "") {
    const auto cols = split_csv_line(header_line);
    std::vector<std::string> required;
    switch (kind) {
        case PlotKind::metric_vs_beta: required = {"L", "param1", "observable", "value", "std_error"}; break;
        case PlotKind::peak_scaling: required = {"L", "observable", "value", "std_error"}; break;
        case PlotKind::exponent_map: required = {"param1", "param2", "observable", "value"}; break;
    }
    for (const auto& c : required) {
        if (std::find(cols.begin(), cols.end(), c) == cols.end()) {
            throw std::invalid_argument("plot script: csv is missing required column '" + c + "'");
        }
    }
    std::string obs = observable;
    if (obs.empty()) {
        obs = kind == PlotKind::metric_vs_beta ? "g_bb_per_site"
              : kind == PlotKind::peak_scaling ? "peak_height"
                                               : "exponent";
    }

    std::string s;
    s += "#!/usr/bin/env python3\n";
    s += "import csv\nimport os\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n";
    s += "HERE = os.path.dirname(os.path.abspath(__file__))\n";
    s += "CSV = os.path.join(HERE, \"" + csv_relpath + "\")\n";
    s += "OBSERVABLE = \"" + obs + "\"\n\n";
    s += "with open(CSV, newline=\"\") as f:\n";
    s += "    rows = [r for r in csv.DictReader(f) if r[\"observable\"] == OBSERVABLE]\n\n";
    switch (kind) {
        case PlotKind::metric_vs_beta:
            s += "sizes = sorted({int(r[\"L\"]) for r in rows})\n";
            s += "for L in sizes:\n";
            s += "    sel = [r for r in rows if int(r[\"L\"]) == L]\n";
            s += "    plt.errorbar([float(r[\"param1\"]) for r in sel], [float(r[\"value\"]) for r in sel],\n";
            s += "                 yerr=[float(r[\"std_error\"]) for r in sel], marker=\"o\", label=f\"L={L}\")\n";
            s += "plt.xlabel(\"beta\")\nplt.ylabel(OBSERVABLE)\nplt.legend()\n";
            s += "plt.savefig(os.path.join(HERE, \"metric_vs_beta.png\"), dpi=150)\n";
            break;
        case PlotKind::peak_scaling:
            s += "plt.errorbar([int(r[\"L\"]) for r in rows], [float(r[\"value\"]) for r in rows],\n";
            s += "             yerr=[float(r[\"std_error\"]) for r in rows], marker=\"o\", linestyle=\"none\")\n";
            s += "plt.xscale(\"log\")\nplt.xlabel(\"L\")\nplt.ylabel(\"peak height\")\n";
            s += "plt.savefig(os.path.join(HERE, \"peak_scaling.png\"), dpi=150)\n";
            break;
        case PlotKind::exponent_map:
            s += "sc = plt.scatter([float(r[\"param1\"]) for r in rows], [float(r[\"param2\"]) for r in rows],\n";
            s += "                 c=[float(r[\"value\"]) for r in rows], cmap=\"coolwarm\", marker=\"s\")\n";
            s += "plt.colorbar(sc, label=\"pi/mu - 2\")\nplt.xlabel(\"c^2\")\nplt.ylabel(\"d^2\")\n";
            s += "plt.savefig(os.path.join(HERE, \"exponent_map.png\"), dpi=150)\n";
            break;
    }
    return s;
}

inline void emit_plot_script(const std::string& csv_path, PlotKind kind, const std::string& script_path,
                             const std::string& observable = "") {
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open '" + csv_path + "'");
    std::string header;
    std::getline(f, header);
    namespace fs = std::filesystem;
    const fs::path script_dir = fs::absolute(fs::path(script_path)).parent_path();
    const std::string rel = fs::absolute(fs::path(csv_path)).lexically_relative(script_dir).generic_string();
    const auto text = plot_script(header, rel, kind, observable);
    std::ofstream out(script_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + script_path + "' for writing");
    out << text;
}

}  // namespace fidmet
