#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fidmet/ising.hpp"
#include "fidmet/metric_analysis.hpp"
#include "fidmet/smf_toric.hpp"

using namespace fidmet;

TEST(FidelityOverlap, Examples) {
    const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
    EXPECT_DOUBLE_EQ(fidelity_overlap(p, p), 1.0);
    EXPECT_NEAR(fidelity_overlap(p, q), std::sqrt(1.0 / 8) + std::sqrt(3.0 / 8), 1e-15);
    EXPECT_EQ(fidelity_overlap(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_EQ(fidelity_overlap(p, q), fidelity_overlap(q, p));
}

TEST(FidelityOverlap, Errors) {
    const std::vector<double> p = {0.5, 0.5};
    EXPECT_THROW(fidelity_overlap(p, std::vector<double>{1.0}), std::invalid_argument);
    EXPECT_THROW(fidelity_overlap(p, std::vector<double>{0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(fidelity_overlap(p, std::vector<double>{1.5, -0.5}), std::invalid_argument);
}

TEST(FidelityOverlap, MixingTowardPNeverDecreases) {
    const std::vector<double> p = {0.1, 0.2, 0.3, 0.4}, q = {0.4, 0.4, 0.1, 0.1};
    double prev = fidelity_overlap(p, q);
    for (double t = 0.05; t <= 1.0; t += 0.05) {
        std::vector<double> m(4);
        for (int i = 0; i < 4; ++i) m[i] = (1 - t) * q[i] + t * p[i];
        const double f = fidelity_overlap(p, m);
        EXPECT_GE(f, prev - 1e-15);
        prev = f;
    }
}

TEST(FiniteDifference, ConstantFamilyIsFlagged) {
    const double pt[1] = {0.3}, dir[1] = {1.0};
    const auto fd =
        finite_difference_metric([](const std::vector<double>&, const std::vector<double>&) { return 1.0; }, pt,
                                 dir, 1e-2);
    EXPECT_EQ(fd.value, 0.0);
    EXPECT_EQ(fd.status, FdStatus::below_noise_floor);
}

TEST(FiniteDifference, QuadraticFamilyIsExact) {
    const double g = 2.75;
    auto fid = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double d = b[0] - a[0];
        return 1.0 - 0.5 * g * d * d;
    };
    const double pt[1] = {0.0}, dir[1] = {1.0};
    const auto fd = finite_difference_metric(fid, pt, dir, 1e-2);
    EXPECT_NEAR(fd.value, g, 1e-10);
    EXPECT_NEAR(fd.value_half, g, 1e-9);
}

TEST(FiniteDifference, SmfKnownPoint) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(2));
    const double pt[1] = {0.0}, dir[1] = {1.0};
    const auto fd = finite_difference_metric(
        [&](const std::vector<double>& a, const std::vector<double>& b) { return spec.fidelity(a[0], b[0]); }, pt,
        dir, 1e-2);
    EXPECT_NEAR(fd.value, 4.0, 1e-3);
    const double r = std::abs(fd.value - 4.0) / std::abs(fd.value_half - 4.0);
    EXPECT_NEAR(r, 4.0, 0.8);
}

TEST(FiniteDifference, TooSmallStepReported) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(2));
    const double pt[1] = {0.3}, dir[1] = {1.0};
    const auto fd = finite_difference_metric(
        [&](const std::vector<double>& a, const std::vector<double>& b) { return spec.fidelity(a[0], b[0]); }, pt,
        dir, 1e-9);
    EXPECT_EQ(fd.status, FdStatus::below_noise_floor);
}

TEST(FiniteDifference, BadArguments) {
    auto fid = [](const std::vector<double>&, const std::vector<double>&) { return 1.0; };
    const double pt[1] = {0.0}, dir2[2] = {1.0, 0.0};
    EXPECT_THROW(finite_difference_metric(fid, pt, std::span<const double>(pt), 0.0), std::invalid_argument);
    EXPECT_THROW(finite_difference_metric(fid, pt, dir2, 1e-2), std::invalid_argument);
    auto broken = [](const std::vector<double>&, const std::vector<double>&) { return std::nan(""); };
    EXPECT_THROW(finite_difference_metric(broken, pt, std::span<const double>(pt), 1e-2), std::runtime_error);
}

TEST(FiniteDifference, PolarizationRecoversCrossTerm) {
    // 2(1 - F) = gxx dx^2 + 2 gxy dx dy + gyy dy^2 exactly.
    const double gxx = 1.5, gyy = 0.5, gxy = -0.3;
    auto fid = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double dx = b[0] - a[0], dy = b[1] - a[1];
        return 1.0 - 0.5 * (gxx * dx * dx + 2 * gxy * dx * dy + gyy * dy * dy);
    };
    const double pt[2] = {0.2, 0.4};
    const auto t = finite_difference_tensor2(fid, pt, 1e-2);
    EXPECT_NEAR(t.xx.value, gxx, 1e-10);
    EXPECT_NEAR(t.yy.value, gyy, 1e-10);
    EXPECT_NEAR(t.xy(), gxy, 1e-10);
}

TEST(LeastSquares, DegenerateDesign) {
    const std::vector<std::pair<double, double>> xy = {{1.0, 2.0}, {1.0, 3.0}, {1.0, 4.0}};
    EXPECT_THROW(least_squares_line(xy), std::invalid_argument);
}

TEST(FitLogDivergence, ExactRecovery) {
    const double bc = kIsingCriticalBeta;
    std::vector<Sample> s;
    for (double b = 0.2; b < 0.43; b += 0.02) s.push_back({b, 2.0 * std::log(std::abs(bc / b - 1.0)) + 1.0});
    const auto f = fit_log_divergence(s, bc, 0.1, 0.44);
    EXPECT_NEAR(f.amplitude, 2.0, 1e-10);
    EXPECT_NEAR(f.offset, 1.0, 1e-10);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.n_points, s.size());
}

TEST(FitLogDivergence, OrderInvariant) {
    const double bc = kIsingCriticalBeta;
    std::vector<Sample> s;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (double b = 0.2; b < 0.43; b += 0.01) s.push_back({b, -0.7 * std::log(bc / b - 1.0) + noise(rng)});
    const auto a = fit_log_divergence(s, bc, 0.1, 0.44);
    std::shuffle(s.begin(), s.end(), rng);
    const auto b = fit_log_divergence(s, bc, 0.1, 0.44);
    EXPECT_EQ(a.amplitude, b.amplitude);
    EXPECT_EQ(a.offset, b.offset);
    EXPECT_EQ(a.r_squared, b.r_squared);
}

TEST(FitLogDivergence, OnsagerMetricIsLogarithmic) {
    const double bc = kIsingCriticalBeta;
    std::vector<Sample> s;
    for (double t : {1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4}) {
        const double b = bc * (1 - t);
        s.push_back({b, onsager_specific_heat(b) / (4 * b * b)});
    }
    const auto f = fit_log_divergence(s, bc, 0.4, bc * (1 - 5e-5));
    EXPECT_GT(f.r_squared, 0.99);
    EXPECT_LT(f.amplitude, 0.0);
}

TEST(FitLogDivergence, Errors) {
    const double bc = kIsingCriticalBeta;
    std::vector<Sample> two = {{0.3, 1.0}, {0.35, 2.0}};
    EXPECT_THROW(fit_log_divergence(two, bc, 0.1, 0.4), std::invalid_argument);
    std::vector<Sample> three = {{0.3, 1.0}, {0.35, 2.0}, {0.4, 3.0}};
    EXPECT_THROW(fit_log_divergence(three, bc, 0.1, 0.5), std::invalid_argument);
}

TEST(FitPowerLaw, ExactRecovery) {
    std::vector<Sample> s;
    for (double x = 0.01; x < 1.0; x *= 1.5) s.push_back({x, 3.0 * std::pow(x, -0.5)});
    const auto f = fit_power_law(s, 1e-3, 1.0);
    EXPECT_NEAR(f.exponent, -0.5, 1e-10);
    EXPECT_NEAR(f.amplitude, 3.0, 1e-10);
    EXPECT_NEAR(exponent_pull(f, -0.5), 0.0, 1e-3);
}

TEST(FitPowerLaw, NoisyRecovery) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<Sample> s;
    for (double x = 0.01; x < 1.0; x *= 1.2) s.push_back({x, 3.0 * std::pow(x, -0.5) * (1 + noise(rng))});
    const auto f = fit_power_law(s, 1e-3, 1.0);
    EXPECT_NEAR(f.exponent, -0.5, 0.05);
    EXPECT_NEAR(f.exponent, -0.5, 3 * f.exponent_error);
}

TEST(FitPowerLaw, ConstantDataIsFlat) {
    std::vector<Sample> s;
    for (double x = 0.1; x < 1.0; x += 0.1) s.push_back({x, 2.0});
    const auto f = fit_power_law(s, 0.05, 1.0);
    EXPECT_NEAR(f.exponent, 0.0, 1e-12);
    EXPECT_TRUE(f.flat);
    EXPECT_EQ(f.r_squared, 0.0);
}

TEST(FitPowerLaw, NonPositiveInputs) {
    std::vector<Sample> s = {{0.1, 1.0}, {0.2, -1.0}, {0.3, 1.0}};
    EXPECT_THROW(fit_power_law(s, 0.01, 1.0), std::invalid_argument);
    EXPECT_THROW(fit_power_law(s, 0.0, 1.0), std::invalid_argument);
}

TEST(PeakScan, SyntheticLogHeights) {
    const double bc = kIsingCriticalBeta;
    std::vector<PeakCurve> curves;
    for (std::size_t L : {8, 16, 32, 64}) {
        PeakCurve c;
        c.L = L;
        for (int i = -10; i <= 10; ++i) {
            const double b = bc + 0.01 * i;
            c.betas.push_back(b);
            c.values.push_back(std::log(double(L)) * std::exp(-(b - bc) * (b - bc)));
        }
        curves.push_back(c);
    }
    const auto scan = peak_scan(curves);
    EXPECT_NEAR(scan.height_vs_log_L.slope, 1.0, 1e-10);
    EXPECT_NEAR(scan.height_vs_log_L.intercept, 0.0, 1e-10);
    for (const auto& p : scan.peaks) EXPECT_NEAR(p.beta, bc, 1e-10);
}

TEST(PeakScan, QuadraticInterpolationOffGrid) {
    PeakCurve c;
    c.L = 4;
    for (int i = 0; i < 7; ++i) {
        const double x = 0.1 * i;
        c.betas.push_back(x);
        c.values.push_back(5.0 - (x - 0.33) * (x - 0.33));
    }
    const auto p = locate_peak(c);
    EXPECT_NEAR(p.beta, 0.33, 1e-12);
    EXPECT_NEAR(p.height, 5.0, 1e-12);
}

TEST(PeakScan, Errors) {
    PeakCurve mono;
    mono.L = 8;
    for (int i = 0; i < 6; ++i) {
        mono.betas.push_back(i);
        mono.values.push_back(i);
    }
    EXPECT_THROW(locate_peak(mono), std::invalid_argument);
    std::vector<PeakCurve> single = {mono};
    EXPECT_THROW(peak_scan(single), std::invalid_argument);
}

TEST(WeightedFit, HeteroscedasticNoiseGivesCalibratedErrors) {
    // 1% multiplicative noise on a log divergence: the noise level varies
    // tenfold across the window, so only the weighted errors are trustworthy.
    const double bc = kIsingCriticalBeta;
    int outside = 0;
    const int trials = 400;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int t = 0; t < trials; ++t) {
        std::vector<Sample> s;
        for (int i = 0; i < 40; ++i) {
            const double b = 0.30 + 0.0035 * i;
            const double y = (2.0 * std::log(bc / b - 1.0) + 1.0) * (1.0 + noise(rng));
            s.push_back({b, y, 0.01 * std::abs(y)});
        }
        const auto f = fit_log_divergence(s, bc, 0.2, 0.44);
        ASSERT_TRUE(f.weighted);
        if (std::abs(f.amplitude - 2.0) > 3.0 * f.amplitude_error) ++outside;
    }
    EXPECT_LE(outside, 5);
}

TEST(WeightedFit, ExactDataAndChiSquare) {
    std::vector<Sample> s;
    for (double x = 0.01; x < 1.0; x *= 1.5) s.push_back({x, 3.0 * std::pow(x, -0.5), 0.1});
    const auto f = fit_power_law(s, 1e-3, 1.0);
    EXPECT_TRUE(f.weighted);
    EXPECT_NEAR(f.exponent, -0.5, 1e-10);
    EXPECT_NEAR(f.chi2_per_dof, 0.0, 1e-12);
    EXPECT_GT(f.exponent_error, 0.0);
}

TEST(WeightedFit, MixedSigmasRejected) {
    std::vector<Sample> s = {{0.1, 1.0, 0.1}, {0.2, 2.0, 0.0}, {0.3, 3.0, 0.1}};
    EXPECT_THROW(fit_power_law(s, 0.01, 1.0), std::invalid_argument);
}
