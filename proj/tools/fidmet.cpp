// fidmet: command-line driver for fidelity-metric sweeps, fits and self-checks.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fidmet/eight_vertex.hpp"
#include "fidmet/metric_analysis.hpp"
#include "fidmet/selftest.hpp"
#include "fidmet/sweep.hpp"
#include "json.hpp"

namespace {

using fidmet::format_real;

/// `key = value` lines with `#` comments.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

/// Fills options that were not given on the command line from the config file.
void merge_config(CLI::App& sub, const std::string& path) {
    if (path.empty()) return;
    for (const auto& [key, value] : read_config_file(path)) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
            throw std::runtime_error("config file '" + path + "': unknown key '" + key + "'");
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

struct SweepOptions {
    std::string method = "enumerate";
    std::vector<std::size_t> sizes;
    std::size_t n_therm = 1000;
    std::size_t n_sweeps = 10000;
    std::vector<std::uint64_t> seeds;
    unsigned threads = 0;
    std::string out;
    std::string config;
};

void add_sweep_options(CLI::App* sub, SweepOptions& o) {
    sub->add_option("--method", o.method, "enumerate | mc | exact_formula")
        ->check(CLI::IsMember({"enumerate", "mc", "exact_formula"}));
    sub->add_option("--L", o.sizes, "lattice sizes (comma separated)")->delimiter(',');
    sub->add_option("--n-therm", o.n_therm, "thermalization sweeps (mc)");
    sub->add_option("--n-sweeps", o.n_sweeps, "measurement sweeps (mc)");
    sub->add_option("--seed", o.seeds, "seeds (comma separated, mc)")->delimiter(',');
    sub->add_option("--threads", o.threads, "worker threads (falls back to FIDMET_THREADS)");
    sub->add_option("--out", o.out, "CSV output path (default: stdout)");
    sub->add_option("--config", o.config, "key = value config file; command-line flags take precedence");
}

unsigned resolve_threads(unsigned flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("FIDMET_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 1;
}

fidmet::SweepSpec base_spec(const SweepOptions& o) {
    fidmet::SweepSpec spec;
    spec.method = fidmet::parse_method(o.method);
    spec.sizes = o.sizes;
    spec.n_therm = o.n_therm;
    spec.n_sweeps = o.n_sweeps;
    spec.seeds = o.seeds;
    spec.threads = resolve_threads(o.threads);
    return spec;
}

void emit(const fidmet::SweepResult& r, const std::string& out) {
    if (out.empty()) {
        std::cout << fidmet::to_csv(r);
    } else {
        fidmet::write_csv(r, out);
    }
}

struct AxisOptions {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;
    double single = 0.0;
};

void add_axis(CLI::App* sub, const std::string& name, AxisOptions& a, CLI::Option*& single) {
    sub->add_option("--" + name + "-start", a.start);
    sub->add_option("--" + name + "-stop", a.stop);
    sub->add_option("--" + name + "-count", a.count)->check(CLI::PositiveNumber);
    single = sub->add_option("--" + name, a.single, "single value (overrides the grid)");
}

fidmet::GridAxis to_axis(const AxisOptions& a, const CLI::Option* single) {
    if (single->count() > 0) return {a.single, a.single, 1};
    return {a.start, a.stop, a.count};
}

int run_selftest_command(const std::string& out) {
    const auto rep = fidmet::run_selftest();
    for (const auto& c : rep.checks) {
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << "  " << c.detail << "\n";
    }
    if (!out.empty()) fidmet::write_csv(rep.values, out);
    std::cout << (rep.passed() ? "selftest passed" : "selftest FAILED") << "\n";
    return rep.passed() ? 0 : 1;
}

nlohmann::json fit_to_json(const fidmet::ScalingFit& f) {
    nlohmann::json j;
    j["model"] = f.model == fidmet::FitModel::log_divergence ? "log_divergence" : "power_law";
    j["amplitude"] = f.amplitude;
    j["amplitude_error"] = f.amplitude_error;
    j["offset"] = f.offset;
    j["offset_error"] = f.offset_error;
    j["exponent"] = f.exponent;
    j["exponent_error"] = f.exponent_error;
    j["r_squared"] = f.r_squared;
    j["flat"] = f.flat;
    j["weighted"] = f.weighted;
    if (f.weighted) j["chi2_per_dof"] = f.chi2_per_dof;
    j["n_points"] = f.n_points;
    j["window"] = {f.window_lo, f.window_hi};
    return j;
}

struct FitOptions {
    std::string in;
    std::string kind = "log";
    std::string observable;
    std::vector<std::size_t> sizes;
    double beta_c = fidmet::kIsingCriticalBeta;
    std::vector<double> window;
    bool unweighted = false;
    std::string out;
    std::string peaks_out;
    std::string config;
};

int run_fit_command(const FitOptions& o) {
    const auto data = fidmet::read_csv(o.in);
    auto selected = [&](const fidmet::SweepRow& r) {
        if (r.observable != o.observable) return false;
        if (o.sizes.empty()) return true;
        return std::find(o.sizes.begin(), o.sizes.end(), r.L) != o.sizes.end();
    };
    nlohmann::json report;
    report["input"] = o.in;
    report["observable"] = o.observable;
    if (o.kind == "log" || o.kind == "power") {
        if (o.window.size() != 2) throw std::invalid_argument("fit: --window lo hi is required");
        std::vector<fidmet::Sample> samples;
        for (const auto& r : data.rows) {
            if (!selected(r)) continue;
            const double x = o.kind == "log" ? r.param1 : std::abs(std::abs(r.param2 - r.param1) - 2.0);
            samples.push_back({x, r.value, o.unweighted ? 0.0 : r.std_error});
        }
        const auto fit = o.kind == "log" ? fidmet::fit_log_divergence(samples, o.beta_c, o.window[0], o.window[1])
                                         : fidmet::fit_power_law(samples, o.window[0], o.window[1]);
        report["fit"] = fit_to_json(fit);
        if (o.kind == "log") report["beta_c"] = o.beta_c;
    } else {
        // Average duplicate (L, beta) rows, e.g. several seeds, into one curve per L.
        std::map<std::size_t, std::map<double, std::pair<double, int>>> acc;
        for (const auto& r : data.rows) {
            if (!selected(r)) continue;
            auto& cell = acc[r.L][r.param1];
            cell.first += r.value;
            cell.second += 1;
        }
        std::vector<fidmet::PeakCurve> curves;
        for (const auto& [L, pts] : acc) {
            fidmet::PeakCurve c;
            c.L = L;
            for (const auto& [beta, sum] : pts) {
                c.betas.push_back(beta);
                c.values.push_back(sum.first / sum.second);
            }
            curves.push_back(std::move(c));
        }
        const auto scan = fidmet::peak_scan(curves);
        nlohmann::json peaks = nlohmann::json::array();
        fidmet::SweepResult rows;
        for (const auto& p : scan.peaks) {
            peaks.push_back({{"L", p.L}, {"beta", p.beta}, {"height", p.height}});
            rows.rows.push_back({"ising", "peak_scan", p.L, p.beta, 0.0, "peak_height", p.height, 0.0, 0});
        }
        report["peaks"] = peaks;
        report["height_vs_log_L"] = {{"slope", scan.height_vs_log_L.slope},
                                     {"intercept", scan.height_vs_log_L.intercept},
                                     {"slope_error", scan.height_vs_log_L.slope_error},
                                     {"r_squared", scan.height_vs_log_L.r_squared}};
        if (!o.peaks_out.empty()) fidmet::write_csv(rows, o.peaks_out);
    }
    const std::string text = report.dump(2) + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open '" + o.out + "' for writing");
        f << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-state fidelity metrics of the SMF toric code and the quantum eight-vertex model"};
    app.require_subcommand(1);

    // smf-sweep
    SweepOptions smf_opts;
    AxisOptions smf_beta{0.1, 0.7, 13, 0.0};
    CLI::Option* smf_beta_single = nullptr;
    auto* smf = app.add_subcommand("smf-sweep", "toric-code metric g_bb, magnetization and Z over beta");
    add_sweep_options(smf, smf_opts);
    add_axis(smf, "beta", smf_beta, smf_beta_single);

    // ising-cv
    SweepOptions ising_opts;
    AxisOptions ising_beta{0.3, 0.3, 1, 0.0};
    CLI::Option* ising_beta_single = nullptr;
    auto* ising = app.add_subcommand("ising-cv", "Ising specific heat by enumeration, Monte Carlo or Onsager");
    add_sweep_options(ising, ising_opts);
    add_axis(ising, "beta", ising_beta, ising_beta_single);

    // 8v-sweep
    SweepOptions ev_opts;
    AxisOptions ev_u{1.0, 1.0, 1, 0.0}, ev_v{1.0, 1.0, 1, 0.0};
    CLI::Option* ev_u_single = nullptr;
    CLI::Option* ev_v_single = nullptr;
    bool ev_paired = false;
    std::string ev_weights = "squared";
    auto* ev = app.add_subcommand("8v-sweep", "eight-vertex metric tensor over a (u, v) = (c^2, d^2) grid");
    add_sweep_options(ev, ev_opts);
    add_axis(ev, "u", ev_u, ev_u_single);
    add_axis(ev, "v", ev_v, ev_v_single);
    ev->add_flag("--paired", ev_paired, "zip the u and v axes instead of taking their product");
    ev->add_option("--weights", ev_weights, "squared: values are (c^2, d^2); linear: values are (c, d)")
        ->check(CLI::IsMember({"squared", "linear"}));

    // 8v-exponent
    double ex_u = 1.0, ex_v = 1.0;
    std::string ex_weights = "squared";
    std::string ex_config;
    auto* ex = app.add_subcommand("8v-exponent", "scaling exponent pi/mu - 2 and phase at one point");
    ex->add_option("--u", ex_u, "c^2 (or c with --weights linear)");
    ex->add_option("--v", ex_v, "d^2 (or d with --weights linear)");
    ex->add_option("--weights", ex_weights)->check(CLI::IsMember({"squared", "linear"}));
    ex->add_option("--config", ex_config);

    // fit
    FitOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "fit a sweep CSV: log divergence, power law or finite-size peaks");
    fit->add_option("--in", fit_opts.in, "sweep CSV")->required();
    fit->add_option("--kind", fit_opts.kind)->check(CLI::IsMember({"log", "power", "peak"}));
    fit->add_option("--observable", fit_opts.observable)->required();
    fit->add_option("--L", fit_opts.sizes, "restrict to these sizes")->delimiter(',');
    fit->add_option("--beta-c", fit_opts.beta_c, "critical coupling for --kind log");
    fit->add_option("--window", fit_opts.window, "regressor window lo hi")->expected(2);
    fit->add_flag("--unweighted", fit_opts.unweighted, "ignore the std_error column (weights 1/std_error^2 otherwise)");
    fit->add_option("--out", fit_opts.out, "JSON report path (default: stdout)");
    fit->add_option("--peaks-out", fit_opts.peaks_out, "CSV of located peaks (--kind peak)");
    fit->add_option("--config", fit_opts.config);

    // plot
    std::string plot_in, plot_kind = "metric_vs_beta", plot_out, plot_obs;
    auto* plot = app.add_subcommand("plot", "write a matplotlib script for a sweep CSV");
    plot->add_option("--in", plot_in, "sweep CSV")->required();
    plot->add_option("--kind", plot_kind)->check(CLI::IsMember({"metric_vs_beta", "peak_scaling", "exponent_map"}));
    plot->add_option("--out", plot_out, "script path")->required();
    plot->add_option("--observable", plot_obs);

    // selftest
    std::string selftest_out;
    auto* selftest = app.add_subcommand("selftest", "enumeration vs finite-difference oracle suite");
    selftest->add_option("--out", selftest_out, "CSV of checked values");

    CLI11_PARSE(app, argc, argv);

    try {
        if (smf->parsed()) {
            merge_config(*smf, smf_opts.config);
            auto spec = base_spec(smf_opts);
            spec.model = fidmet::Model::smf;
            spec.axis1 = to_axis(smf_beta, smf_beta_single);
            emit(fidmet::run_sweep(spec), smf_opts.out);
        } else if (ising->parsed()) {
            merge_config(*ising, ising_opts.config);
            auto spec = base_spec(ising_opts);
            spec.model = fidmet::Model::ising;
            spec.axis1 = to_axis(ising_beta, ising_beta_single);
            emit(fidmet::run_sweep(spec), ising_opts.out);
        } else if (ev->parsed()) {
            merge_config(*ev, ev_opts.config);
            auto spec = base_spec(ev_opts);
            spec.model = fidmet::Model::eight_vertex;
            spec.axis1 = to_axis(ev_u, ev_u_single);
            spec.axis2 = to_axis(ev_v, ev_v_single);
            if (ev_weights == "linear") {
                for (auto* a : {&spec.axis1, &spec.axis2}) {
                    if (a->count > 1) {
                        throw std::invalid_argument("8v-sweep: --weights linear needs single --u/--v values");
                    }
                    a->start *= a->start;
                    a->stop = a->start;
                }
            }
            spec.paired_axes = ev_paired;
            emit(fidmet::run_sweep(spec), ev_opts.out);
        } else if (ex->parsed()) {
            merge_config(*ex, ex_config);
            double u = ex_u, v = ex_v;
            if (ex_weights == "linear") {
                u *= u;
                v *= v;
            }
            const auto e = fidmet::scaling_exponent(u, v);
            const auto p = fidmet::phase_classifier(u, v);
            std::cout << "u = " << format_real(u) << "\n"
                      << "v = " << format_real(v) << "\n"
                      << "mu = " << format_real(e.mu) << "\n"
                      << "pi_over_mu = " << format_real(e.pi_over_mu) << "\n"
                      << "exponent = " << format_real(e.exponent) << "\n"
                      << "class = " << fidmet::to_string(e.divergence) << "\n"
                      << "integer_pi_over_mu = " << (e.integer_pi_over_mu ? "true" : "false") << "\n"
                      << "phase = " << fidmet::to_string(p.phase) << "\n"
                      << "phase_distance = " << format_real(p.distance) << "\n";
        } else if (fit->parsed()) {
            merge_config(*fit, fit_opts.config);
            return run_fit_command(fit_opts);
        } else if (plot->parsed()) {
            fidmet::emit_plot_script(plot_in, fidmet::parse_plot_kind(plot_kind), plot_out, plot_obs);
        } else if (selftest->parsed()) {
            return run_selftest_command(selftest_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
