#include <gtest/gtest.h>

#include <cmath>

#include "fidmet/ising.hpp"
#include "fidmet/metric_analysis.hpp"
#include "fidmet/smf_toric.hpp"

using namespace fidmet;

TEST(StarSubset, CanonicalFormExcludesStarZero) {
    const TorusLattice lat(2);
    const auto g = StarSubset::from_mask(lat, 0b0011);
    EXPECT_FALSE(g.contains(0));
    EXPECT_EQ(g, StarSubset::from_mask(lat, 0b1100));
    EXPECT_EQ(g.complement(), g);
}

TEST(StarSubset, FullSetIsIdentity) {
    const TorusLattice lat(3);
    EXPECT_EQ(StarSubset::from_mask(lat, 0x1FF), StarSubset(lat));
}

TEST(BondSpins, EmptyAndFullSubsetsAreAllUp) {
    const TorusLattice lat(3);
    for (auto mask : {std::uint64_t{0}, std::uint64_t{0x1FF}}) {
        for (int s : bond_spins(StarSubset::from_mask(lat, mask))) EXPECT_EQ(s, 1);
    }
}

TEST(BondSpins, SingleStarFlipsFourBonds) {
    const TorusLattice lat(3);
    const auto sp = bond_spins(StarSubset::from_mask(lat, 1u << 4));
    EXPECT_EQ(std::count(sp.begin(), sp.end(), -1), 4);
    for (auto b : lat.star(4)) EXPECT_EQ(sp[b], -1);
}

TEST(SmfEnergy, KnownValues) {
    const TorusLattice l3(3), l2(2);
    EXPECT_EQ(smf_energy(StarSubset(l3)), 18);
    EXPECT_EQ(smf_energy(StarSubset::from_mask(l3, 1u << 5)), 10);
    EXPECT_EQ(smf_energy(StarSubset::from_mask(l2, 1u << 1)), 0);
}

TEST(SmfSpectrum, L2EnergyTable) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(2));
    EXPECT_EQ(spec.group_order(), 8u);
    // {8, 0 x 6, -8}
    std::map<int, std::uint64_t> table;
    for (std::size_t k = 0; k < spec.counts().size(); ++k) {
        if (spec.counts()[k]) table[spec.energy_of_index(k)] = spec.counts()[k];
    }
    const std::map<int, std::uint64_t> expected = {{-8, 1}, {0, 6}, {8, 1}};
    EXPECT_EQ(table, expected);
}

TEST(SmfSpectrum, MatchesBruteForceOverCanonicalSubsets) {
    const TorusLattice lat(3);
    const auto spec = SmfSpectrum::enumerate(lat);
    std::vector<std::uint64_t> counts(lat.num_bonds() + 1, 0);
    for (std::uint64_t m = 0; m < (1u << 8); ++m) {
        const int e = smf_energy(StarSubset::from_mask(lat, m << 1));
        ++counts[static_cast<std::size_t>((18 - e) / 2)];
    }
    EXPECT_EQ(spec.counts(), counts);
}

TEST(SmfSpectrum, ThreadedEnumerationIsIdentical) {
    const TorusLattice lat(4);
    EXPECT_EQ(SmfSpectrum::enumerate(lat, 1).counts(), SmfSpectrum::enumerate(lat, 3).counts());
}

TEST(SmfSpectrum, BudgetExceeded) {
    EXPECT_THROW(SmfSpectrum::enumerate(TorusLattice(6)), BudgetExceeded);
}

TEST(PartitionFunction, BetaZeroCountsGroup) {
    EXPECT_DOUBLE_EQ(partition_function(0.0, 2), 8.0);
    EXPECT_DOUBLE_EQ(partition_function(0.0, 3), 256.0);
}

TEST(PartitionFunction, HalfOfIsing) {
    for (std::size_t L : {2, 3, 4}) {
        for (double beta : {0.1, 0.3, 0.44, 0.7}) {
            EXPECT_NEAR(2.0 * partition_function(beta, L) / ising_partition_enum(beta, L), 1.0, 1e-12);
        }
    }
}

TEST(PartitionFunction, LowTemperatureLimit) {
    const double beta = 8.0;
    EXPECT_NEAR(partition_function(beta, 2) / std::exp(8.0 * beta), 1.0, 1e-12);
}

TEST(GroundState, NormalizedAndMatchesClosedFormFidelity) {
    const TorusLattice lat(2);
    const SmfGroundState a(lat, 0.2), b(lat, 0.5);
    double norm = 0.0, overlap = 0.0;
    for (std::uint64_t m = 0; m < 8; ++m) {
        const auto g = StarSubset::from_mask(lat, m << 1);
        norm += a.amplitude(g) * a.amplitude(g);
        overlap += a.amplitude(g) * b.amplitude(g);
    }
    EXPECT_NEAR(norm, 1.0, 1e-14);
    EXPECT_NEAR(overlap, fidelity(0.2, 0.5, 2), 1e-14);
}

TEST(Fidelity, Properties) {
    EXPECT_DOUBLE_EQ(fidelity(0.3, 0.3, 3), 1.0);
    EXPECT_LT(fidelity(0.0, 0.2, 2), 1.0);
    EXPECT_NEAR(fidelity(0.1, 0.6, 3), fidelity(0.6, 0.1, 3), 1e-15);
    EXPECT_GT(fidelity(0.1, 0.6, 3), 0.0);
}

TEST(Metric, KnownPointAndLimits) {
    EXPECT_EQ(metric_fluctuation(0.0, 2), 4.0);
    EXPECT_LT(metric_fluctuation(10.0, 2), 1e-20);
}

TEST(Metric, SpecificHeatRoute) {
    for (std::size_t L : {2, 3, 4}) {
        for (double beta : {0.2, 0.44}) {
            const double g = metric_fluctuation(beta, L);
            const double cv = beta * beta * SmfSpectrum::enumerate(TorusLattice(L)).energy_variance(beta);
            EXPECT_NEAR(metric_from_specific_heat(beta, cv), g, 1e-12 * g);
            EXPECT_NEAR(metric_from_ising_specific_heat(beta, L), g, 1e-10 * g);
        }
    }
    EXPECT_THROW(metric_from_specific_heat(0.0, 1.0), std::domain_error);
}

TEST(Metric, EqualsFisherInformationOverFour) {
    // Fisher information of p(g) ~ exp(-beta E(g)) in beta is Var(E).
    const auto spec = SmfSpectrum::enumerate(TorusLattice(3));
    const double beta = 0.37, h = 1e-4;
    const double d2 = (spec.log_partition_function(beta + h) - 2 * spec.log_partition_function(beta) +
                       spec.log_partition_function(beta - h)) /
                      (h * h);
    EXPECT_NEAR(spec.metric(beta), 0.25 * d2, 1e-5 * spec.metric(beta));
}

TEST(Metric, FiniteDifferenceConverges) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(3));
    const double point[1] = {0.3};
    const double dir[1] = {1.0};
    const auto fd = finite_difference_metric(
        [&](const std::vector<double>& a, const std::vector<double>& b) { return spec.fidelity(a[0], b[0]); }, point,
        dir, 1e-2);
    ASSERT_EQ(fd.status, FdStatus::ok);
    EXPECT_NEAR(fd.richardson, spec.metric(0.3), 1e-6 * spec.metric(0.3));
    ASSERT_TRUE(fd.convergence_ratio.has_value());
    EXPECT_NEAR(*fd.convergence_ratio, 4.0, 0.2);
}

TEST(Magnetization, Limits) {
    EXPECT_NEAR(magnetization(0.0, 3), 0.0, 1e-15);
    EXPECT_NEAR(magnetization(20.0, 2), -1.0, 1e-12);
}

TEST(Magnetization, DerivativeIsVarianceOverBonds) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(3));
    const double beta = 0.5, h = 1e-5;
    const double dm = (spec.magnetization(beta + h) - spec.magnetization(beta - h)) / (2 * h);
    EXPECT_NEAR(dm, -spec.energy_variance(beta) / 18.0, 1e-6);
}

TEST(Metric, VarianceShrinksAtLargeBeta) {
    const auto spec = SmfSpectrum::enumerate(TorusLattice(3));
    double prev = spec.energy_variance(1.0);
    for (double beta : {2.0, 4.0, 8.0}) {
        const double v = spec.energy_variance(beta);
        EXPECT_LT(v, prev);
        prev = v;
    }
}
