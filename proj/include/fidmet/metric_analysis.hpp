#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fidmet/stats.hpp"

namespace fidmet {

/// Bhattacharyya overlap sum_i sqrt(p_i q_i) of two normalized distributions.
inline double fidelity_overlap(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("fidelity_overlap: index sets differ in size");
    auto check = [](std::span<const double> w, const char* name) {
        for (double x : w) {
            if (!(x >= 0.0)) throw std::invalid_argument(std::string("fidelity_overlap: negative entry in ") + name);
        }
        if (std::abs(compensated_sum(w) - 1.0) > 1e-10) {
            throw std::invalid_argument(std::string("fidelity_overlap: ") + name + " is not normalized");
        }
    };
    check(p, "p");
    check(q, "q");
    CompensatedSum f;
    for (std::size_t i = 0; i < p.size(); ++i) f += std::sqrt(p[i] * q[i]);
    return std::min(1.0, f.value());
}

/// 1 - F smaller than this is indistinguishable from rounding.
inline constexpr double kFidelityNoiseFloor = 100.0 * std::numeric_limits<double>::epsilon();

enum class FdStatus { ok, below_noise_floor };

/// Finite-difference metric along one direction.
///
/// The two states are placed symmetrically, point -/+ (h/2) direction, so
/// g(h) = 2 (1 - F) / h^2 is even in h and converges as O(h^2).
struct FdMetric {
    double value = 0.0;          // g(delta)
    double value_half = 0.0;     // g(delta / 2)
    double value_quarter = 0.0;  // g(delta / 4)
    double richardson = 0.0;     // (4 g(delta/2) - g(delta)) / 3
    /// (g(d) - g(d/2)) / (g(d/2) - g(d/4)); about 4 in the O(h^2) regime.
    std::optional<double> convergence_ratio;
    FdStatus status = FdStatus::ok;
};

namespace detail {

template <class Fidelity>
std::pair<double, bool> fd_metric_once(Fidelity& fid, std::span<const double> point,
                                       std::span<const double> direction, double h) {
    std::vector<double> a(point.begin(), point.end()), b(point.begin(), point.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] -= 0.5 * h * direction[i];
        b[i] += 0.5 * h * direction[i];
    }
    const double f = fid(std::as_const(a), std::as_const(b));
    if (!std::isfinite(f) || f < 0.0 || f > 1.0 + 1e-12) {
        throw std::runtime_error("finite_difference_metric: fidelity evaluation returned " + std::to_string(f));
    }
    const double one_minus = 1.0 - f;
    return {2.0 * one_minus / (h * h), one_minus >= kFidelityNoiseFloor};
}

}  // namespace detail

/// `fid(a, b)` must return the fidelity between parameter points a and b
/// (both std::vector<double>). Evaluates at delta, delta/2, delta/4.
template <class Fidelity>
FdMetric finite_difference_metric(Fidelity&& fid, std::span<const double> point, std::span<const double> direction,
                                  double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("finite_difference_metric: delta must be > 0");
    if (point.size() != direction.size()) {
        throw std::invalid_argument("finite_difference_metric: point and direction differ in dimension");
    }
    FdMetric r;
    const auto [g1, ok1] = detail::fd_metric_once(fid, point, direction, delta);
    const auto [g2, ok2] = detail::fd_metric_once(fid, point, direction, 0.5 * delta);
    const auto [g4, ok4] = detail::fd_metric_once(fid, point, direction, 0.25 * delta);
    r.value = g1;
    r.value_half = g2;
    r.value_quarter = g4;
    r.richardson = (4.0 * g2 - g1) / 3.0;
    if (!ok1) {
        r.status = FdStatus::below_noise_floor;
        return r;
    }
    if (ok2 && ok4 && g2 != g4) r.convergence_ratio = (g1 - g2) / (g2 - g4);
    return r;
}

/// 2x2 metric from axis directions plus the (1, 1) diagonal by polarization:
/// g_xy = (g_diag - g_xx - g_yy) / 2.
struct FdTensor2 {
    FdMetric xx;
    FdMetric yy;
    FdMetric diagonal;

    double xy() const { return 0.5 * (diagonal.value - xx.value - yy.value); }
    double xy_half() const { return 0.5 * (diagonal.value_half - xx.value_half - yy.value_half); }
    double xy_quarter() const { return 0.5 * (diagonal.value_quarter - xx.value_quarter - yy.value_quarter); }
};

template <class Fidelity>
FdTensor2 finite_difference_tensor2(Fidelity&& fid, std::span<const double> point, double delta) {
    if (point.size() != 2) throw std::invalid_argument("finite_difference_tensor2: need a 2-parameter point");
    const double ex[2] = {1.0, 0.0};
    const double ey[2] = {0.0, 1.0};
    const double ed[2] = {1.0, 1.0};
    FdTensor2 t;
    t.xx = finite_difference_metric(fid, point, ex, delta);
    t.yy = finite_difference_metric(fid, point, ey, delta);
    t.diagonal = finite_difference_metric(fid, point, ed, delta);
    return t;
}

struct Sample {
    double x = 0.0;      // beta, or distance to criticality
    double y = 0.0;      // metric value
    double sigma = 0.0;  // standard error of y; 0 = unknown
};

enum class FitModel { log_divergence, power_law };

struct ScalingFit {
    FitModel model = FitModel::log_divergence;
    double amplitude = 0.0;
    double amplitude_error = 0.0;
    double offset = 0.0;  // B in A ln|.| + B; unused for power laws
    double offset_error = 0.0;
    double exponent = 0.0;  // power law only
    double exponent_error = 0.0;
    double r_squared = 0.0;
    bool flat = false;      // regressand has no spread; r_squared forced to 0
    bool weighted = false;  // every sample carried a sigma
    double chi2_per_dof = 0.0;  // weighted fits only
    std::size_t n_points = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_error = 0.0;
    double intercept_error = 0.0;
    double r_squared = 0.0;
    bool flat = false;
    bool weighted = false;
    double chi2_per_dof = 0.0;
};

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
    friend bool operator<(const FitPoint& a, const FitPoint& b) {
        return std::tie(a.x, a.y, a.sigma) < std::tie(b.x, b.y, b.sigma);
    }
};

/// Least squares y = slope x + intercept. Input order does not matter.
///
/// With sigma = 0 on every point this is ordinary least squares with errors
/// from the residual scatter. With sigma > 0 on every point the fit is
/// weighted by 1/sigma^2 and the errors follow from the sigmas alone, which
/// stays correct when the noise level varies from point to point.
inline LinearFit least_squares_line(std::vector<FitPoint> pts) {
    const std::size_t n = pts.size();
    if (n < 2) throw std::invalid_argument("least_squares_line: need at least two points");
    const auto n_sigma = std::count_if(pts.begin(), pts.end(), [](const FitPoint& p) { return p.sigma > 0.0; });
    const bool weighted = n_sigma > 0;
    if (weighted && static_cast<std::size_t>(n_sigma) != n) {
        throw std::invalid_argument("least_squares_line: either all points or none must carry a sigma");
    }
    std::sort(pts.begin(), pts.end());
    auto weight = [&](const FitPoint& p) { return weighted ? 1.0 / (p.sigma * p.sigma) : 1.0; };
    CompensatedSum sw, sx, sy;
    for (const auto& p : pts) {
        const double w = weight(p);
        sw += w;
        sx += w * p.x;
        sy += w * p.y;
    }
    const double mx = sx.value() / sw.value();
    const double my = sy.value() / sw.value();
    CompensatedSum sxx, sxy, syy, sx2;
    for (const auto& p : pts) {
        const double w = weight(p);
        sxx += w * (p.x - mx) * (p.x - mx);
        sxy += w * (p.x - mx) * (p.y - my);
        syy += w * (p.y - my) * (p.y - my);
        sx2 += w * p.x * p.x;
    }
    if (!(sxx.value() > 1e-14 * sx2.value())) {
        throw std::invalid_argument("least_squares_line: degenerate design (regressor has no spread)");
    }
    LinearFit f;
    f.weighted = weighted;
    f.slope = sxy.value() / sxx.value();
    f.intercept = my - f.slope * mx;
    CompensatedSum ss_res;
    for (const auto& p : pts) {
        const double r = p.y - (f.slope * p.x + f.intercept);
        ss_res += weight(p) * r * r;
    }
    if (syy.value() > 0.0) {
        f.r_squared = std::clamp(1.0 - ss_res.value() / syy.value(), 0.0, 1.0);
    } else {
        f.flat = true;
    }
    if (weighted) {
        f.slope_error = std::sqrt(1.0 / sxx.value());
        f.intercept_error = std::sqrt(sx2.value() / (sw.value() * sxx.value()));
        if (n > 2) f.chi2_per_dof = ss_res.value() / static_cast<double>(n - 2);
    } else if (n > 2) {
        const double s2 = ss_res.value() / static_cast<double>(n - 2);
        f.slope_error = std::sqrt(s2 / sxx.value());
        f.intercept_error = std::sqrt(s2 * sx2.value() / (static_cast<double>(n) * sxx.value()));
    }
    return f;
}

inline LinearFit least_squares_line(const std::vector<std::pair<double, double>>& xy) {
    std::vector<FitPoint> pts;
    pts.reserve(xy.size());
    for (const auto& [x, y] : xy) pts.push_back({x, y, 0.0});
    return least_squares_line(std::move(pts));
}

namespace detail {

inline void copy_line(const LinearFit& lf, ScalingFit& f) {
    f.r_squared = lf.r_squared;
    f.flat = lf.flat;
    f.weighted = lf.weighted;
    f.chi2_per_dof = lf.chi2_per_dof;
}

}  // namespace detail

/// g = A ln|beta_c / beta - 1| + B over the samples with beta in [lo, hi].
inline ScalingFit fit_log_divergence(std::span<const Sample> samples, double beta_c, double window_lo,
                                     double window_hi) {
    if (!(window_lo < window_hi)) throw std::invalid_argument("fit_log_divergence: empty window");
    if (window_lo <= beta_c && beta_c <= window_hi) {
        throw std::invalid_argument("fit_log_divergence: window must exclude beta_c");
    }
    std::vector<FitPoint> pts;
    for (const auto& s : samples) {
        if (s.x < window_lo || s.x > window_hi) continue;
        if (s.x == beta_c) throw std::invalid_argument("fit_log_divergence: sample at beta_c");
        pts.push_back({std::log(std::abs(beta_c / s.x - 1.0)), s.y, s.sigma});
    }
    if (pts.size() < 3) throw std::invalid_argument("fit_log_divergence: need at least 3 samples in window");
    const std::size_t n = pts.size();
    const auto lf = least_squares_line(std::move(pts));
    ScalingFit f;
    f.model = FitModel::log_divergence;
    f.amplitude = lf.slope;
    f.amplitude_error = lf.slope_error;
    f.offset = lf.intercept;
    f.offset_error = lf.intercept_error;
    detail::copy_line(lf, f);
    f.n_points = n;
    f.window_lo = window_lo;
    f.window_hi = window_hi;
    return f;
}

/// g = A x^alpha by log-log least squares over samples with x in [lo, hi].
/// A sigma on g becomes sigma / g on ln g.
inline ScalingFit fit_power_law(std::span<const Sample> samples, double window_lo, double window_hi) {
    if (!(window_lo > 0.0) || !(window_lo < window_hi)) {
        throw std::invalid_argument("fit_power_law: window must satisfy 0 < lo < hi");
    }
    std::vector<FitPoint> pts;
    for (const auto& s : samples) {
        if (s.x < window_lo || s.x > window_hi) continue;
        if (!(s.x > 0.0) || !(s.y > 0.0)) throw std::invalid_argument("fit_power_law: inputs must be positive");
        pts.push_back({std::log(s.x), std::log(s.y), s.sigma / s.y});
    }
    if (pts.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 samples in window");
    const std::size_t n = pts.size();
    const auto lf = least_squares_line(std::move(pts));
    ScalingFit f;
    f.model = FitModel::power_law;
    f.exponent = lf.slope;
    f.exponent_error = lf.slope_error;
    f.amplitude = std::exp(lf.intercept);
    f.amplitude_error = f.amplitude * lf.intercept_error;
    detail::copy_line(lf, f);
    f.n_points = n;
    f.window_lo = window_lo;
    f.window_hi = window_hi;
    return f;
}

/// Deviation of a fitted exponent from a predicted one, in units of its standard error.
inline double exponent_pull(const ScalingFit& fit, double predicted) {
    if (fit.model != FitModel::power_law) throw std::invalid_argument("exponent_pull: not a power-law fit");
    if (!(fit.exponent_error > 0.0)) return fit.exponent == predicted ? 0.0 : std::numeric_limits<double>::infinity();
    return (fit.exponent - predicted) / fit.exponent_error;
}

struct PeakCurve {
    std::size_t L = 0;
    std::vector<double> betas;
    std::vector<double> values;
};

struct Peak {
    std::size_t L = 0;
    double beta = 0.0;
    double height = 0.0;
};

struct PeakScan {
    std::vector<Peak> peaks;  // sorted by L
    LinearFit height_vs_log_L;
};

/// Vertex of the parabola through the sample maximum and its two neighbours.
inline Peak locate_peak(const PeakCurve& curve) {
    if (curve.betas.size() != curve.values.size()) throw std::invalid_argument("locate_peak: ragged curve");
    if (curve.betas.size() < 5) throw std::invalid_argument("locate_peak: need at least 5 points");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < curve.betas.size(); ++i) pts.emplace_back(curve.betas[i], curve.values[i]);
    std::sort(pts.begin(), pts.end());
    std::size_t imax = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].second > pts[imax].second) imax = i;
    }
    if (imax == 0 || imax + 1 == pts.size()) {
        throw std::invalid_argument("locate_peak: curve for L = " + std::to_string(curve.L) +
                                    " has no interior maximum");
    }
    const auto [x0, y0] = pts[imax - 1];
    const auto [x1, y1] = pts[imax];
    const auto [x2, y2] = pts[imax + 1];
    // y = y1 + b (x - x1) + a (x - x1)(x - x1) through the three points.
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    const double b = d01 + a * (x1 - x0);
    Peak p{curve.L, x1, y1};
    if (a < 0.0) {
        const double shift = -b / (2.0 * a);
        p.beta = x1 + shift;
        p.height = y1 + b * shift + a * shift * shift;
    }
    return p;
}

inline PeakScan peak_scan(std::span<const PeakCurve> curves) {
    if (curves.size() < 2) throw std::invalid_argument("peak_scan: need at least two lattice sizes");
    PeakScan scan;
    for (const auto& c : curves) scan.peaks.push_back(locate_peak(c));
    std::sort(scan.peaks.begin(), scan.peaks.end(), [](const Peak& a, const Peak& b) { return a.L < b.L; });
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : scan.peaks) xy.emplace_back(std::log(static_cast<double>(p.L)), p.height);
    scan.height_vs_log_L = least_squares_line(std::move(xy));
    return scan;
}

}  // namespace fidmet
