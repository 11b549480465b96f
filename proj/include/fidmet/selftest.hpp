#pragma once

// Enumeration-versus-finite-difference consistency checks run by `fidmet selftest`.

#include <cmath>
#include <string>
#include <vector>

#include "fidmet/eight_vertex.hpp"
#include "fidmet/ising.hpp"
#include "fidmet/metric_analysis.hpp"
#include "fidmet/smf_toric.hpp"
#include "fidmet/sweep.hpp"

namespace fidmet {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<SelftestCheck> checks;
    SweepResult values;  // every number a check looked at

    bool passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return !checks.empty();
    }
};

namespace detail {

inline bool fd_ratio_ok(double ratio) { return std::abs(ratio - 4.0) <= 0.8; }

inline double fd_error_ratio(double g_delta, double g_half, double exact) {
    return std::abs(g_delta - exact) / std::abs(g_half - exact);
}

}  // namespace detail

inline SelftestReport run_selftest() {
    SelftestReport rep;
    auto record = [&](const std::string& model, std::size_t L, double p1, double p2, const std::string& obs,
                      double value) {
        rep.values.rows.push_back({model, "selftest", L, p1, p2, obs, value, 0.0, 0});
    };
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        rep.checks.push_back({name, ok, detail});
    };

    // Toric code <-> Ising mapping and the three metric routes.
    for (std::size_t L : {2, 3}) {
        const TorusLattice lat(L);
        const auto spec = SmfSpectrum::enumerate(lat);
        for (double beta : {0.2, 0.44}) {
            const double z_smf = spec.partition_function(beta);
            const double z_ising = ising_partition_enum(beta, L);
            const double rel = std::abs(2.0 * z_smf - z_ising) / z_ising;
            record("smf", L, beta, 0, "Z", z_smf);
            record("ising", L, beta, 0, "Z", z_ising);
            check("smf_ising_mapping L=" + std::to_string(L) + " beta=" + format_real(beta), rel <= 1e-12,
                  "rel=" + format_real(rel));

            const double g_fluct = spec.metric(beta);
            const double g_cv = metric_from_ising_specific_heat(beta, L);
            const double point[1] = {beta};
            const double dir[1] = {1.0};
            const auto fd = finite_difference_metric(
                [&](const std::vector<double>& a, const std::vector<double>& b) { return spec.fidelity(a[0], b[0]); },
                point, dir, 1e-2);
            const double ratio = detail::fd_error_ratio(fd.value, fd.value_half, g_fluct);
            record("smf", L, beta, 0, "g_fluct", g_fluct);
            record("smf", L, beta, 0, "g_cv", g_cv);
            record("smf", L, beta, 0, "g_fd", fd.value);
            record("smf", L, beta, 0, "g_fd_half", fd.value_half);
            const double rel_cv = std::abs(g_fluct - g_cv) / g_fluct;
            check("smf_metric_routes L=" + std::to_string(L) + " beta=" + format_real(beta),
                  rel_cv <= 1e-10 && detail::fd_ratio_ok(ratio),
                  "cv_rel=" + format_real(rel_cv) + " fd_ratio=" + format_real(ratio));
        }
    }
    {
        const auto spec = SmfSpectrum::enumerate(TorusLattice(2));
        const double g = spec.metric(0.0);
        record("smf", 2, 0.0, 0, "g_fluct", g);
        check("smf_known_point L=2 beta=0", g == 4.0, "g=" + format_real(g));
    }

    // Eight-vertex counts, symmetry and metric tensor.
    for (std::size_t L : {2, 3}) {
        const auto spec = EightVertexSpectrum::enumerate(TorusLattice(L));
        const std::uint64_t expected = std::uint64_t{1} << (L * L + 1);
        record("eight_vertex", L, 1, 1, "n_configs", static_cast<double>(spec.num_configs()));
        check("8v_config_count L=" + std::to_string(L), spec.num_configs() == expected,
              "count=" + std::to_string(spec.num_configs()));
        const double z = spec.partition_function(0.5, 1.7);
        const double zs = spec.partition_function(1.7, 0.5);
        check("8v_cd_symmetry L=" + std::to_string(L), std::abs(z - zs) <= 1e-12 * z, "Z=" + format_real(z));
    }
    {
        const auto spec = EightVertexSpectrum::enumerate(TorusLattice(2));
        for (auto [u, v] : {std::pair{1.0, 1.0}, std::pair{1.2, 0.8}, std::pair{0.6, 2.4}}) {
            const auto g = spec.metric(u, v);
            const double point[2] = {u, v};
            const auto fd = finite_difference_tensor2(
                [&](const std::vector<double>& a, const std::vector<double>& b) {
                    return spec.fidelity(a[0], a[1], b[0], b[1]);
                },
                point, 1e-2);
            const double r_cc = detail::fd_error_ratio(fd.xx.value, fd.xx.value_half, g.g_cc);
            const double r_dd = detail::fd_error_ratio(fd.yy.value, fd.yy.value_half, g.g_dd);
            const double r_cd = detail::fd_error_ratio(2.0 * fd.xy(), 2.0 * fd.xy_half(), g.g_cd);
            record("eight_vertex", 2, u, v, "g_cc", g.g_cc);
            record("eight_vertex", 2, u, v, "g_dd", g.g_dd);
            record("eight_vertex", 2, u, v, "g_cd", g.g_cd);
            record("eight_vertex", 2, u, v, "g_cd_fd", 2.0 * fd.xy());
            const bool ok = detail::fd_ratio_ok(r_cc) && detail::fd_ratio_ok(r_dd) && detail::fd_ratio_ok(r_cd) &&
                            g.min_eigenvalue() >= -1e-12;
            check("8v_metric_fd u=" + format_real(u) + " v=" + format_real(v), ok,
                  "ratios=" + format_real(r_cc) + "/" + format_real(r_dd) + "/" + format_real(r_cd));
        }
    }
    {
        const auto e = scaling_exponent(1.0, 1.0);
        record("eight_vertex", 0, 1, 1, "exponent", e.exponent);
        check("8v_exponent_kitaev", e.exponent == 0.0 && e.divergence == DivergenceClass::logarithmic,
              "exponent=" + format_real(e.exponent));
    }
    return rep;
}

}  // namespace fidmet
