#pragma once

// Classical square-lattice Ising backend for the toric-code mapping.
//
// Energies follow the mapped convention E = sum_<s,s'> theta_s theta_s' with
// weight exp(-beta E). For beta > 0 this is the antiferromagnet; on even L the
// sublattice flip phi_s = eta_s theta_s maps it onto the ferromagnet, which is
// what the samplers simulate. Reported energies are always in the mapped
// convention so they can be compared with the toric-code spectrum directly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fidmet/lattice.hpp"
#include "fidmet/stats.hpp"

namespace fidmet {

inline constexpr std::size_t kIsingMaxEnumerationL = 4;

/// beta_c = ln(1 + sqrt 2) / 2.
inline const double kIsingCriticalBeta = 0.5 * std::log(1.0 + std::numbers::sqrt2);

struct IsingExact {
    double log_z = 0.0;
    double mean_energy = 0.0;
    double energy_variance = 0.0;
};

/// Brute force over all 2^(L^2) configurations with weight exp(-beta J E).
inline IsingExact ising_exact(double beta, std::size_t L, double coupling = 1.0) {
    if (L > kIsingMaxEnumerationL) {
        throw BudgetExceeded("ising enumeration: L = " + std::to_string(L) + " exceeds budget L <= " +
                             std::to_string(kIsingMaxEnumerationL));
    }
    const TorusLattice lat(L);
    const std::size_t n = lat.num_sites();
    std::vector<std::pair<std::size_t, std::size_t>> bonds;
    for (std::size_t b = 0; b < lat.num_bonds(); ++b) bonds.push_back(lat.endpoints(b));

    const std::uint64_t total = std::uint64_t{1} << n;
    std::vector<int> energy(total);
    for (std::uint64_t cfg = 0; cfg < total; ++cfg) {
        int e = 0;
        for (const auto& [s, t] : bonds) {
            const int ts = ((cfg >> s) & 1U) ? -1 : 1;
            const int tt = ((cfg >> t) & 1U) ? -1 : 1;
            e += ts * tt;
        }
        energy[cfg] = e;
    }
    double shift = -std::numeric_limits<double>::infinity();
    for (int e : energy) shift = std::max(shift, -beta * coupling * e);

    CompensatedSum z, m1;
    for (int e : energy) {
        const double w = std::exp(-beta * coupling * e - shift);
        z += w;
        m1 += w * e;
    }
    IsingExact out;
    out.log_z = shift + std::log(z.value());
    out.mean_energy = m1.value() / z.value();
    CompensatedSum m2;
    for (int e : energy) {
        const double d = e - out.mean_energy;
        m2 += std::exp(-beta * coupling * e - shift) * d * d;
    }
    out.energy_variance = m2.value() / z.value();
    return out;
}

inline double ising_partition_enum(double beta, std::size_t L, double coupling = 1.0) {
    return std::exp(ising_exact(beta, L, coupling).log_z);
}

/// Per-site specific heat beta^2 Var(E) / L^2 by enumeration.
inline double specific_heat_exact(double beta, std::size_t L) {
    return beta * beta * ising_exact(beta, L).energy_variance / static_cast<double>(L * L);
}

/// Toric-code metric through the Ising specific heat: C_v / (4 beta^2) with
/// C_v = beta^2 Var(E) extensive, evaluated by Ising enumeration.
inline double metric_from_ising_specific_heat(double beta, std::size_t L) {
    if (!(beta > 0.0)) throw std::domain_error("metric_from_ising_specific_heat: requires beta > 0");
    const double cv_extensive = beta * beta * ising_exact(beta, L).energy_variance;
    return cv_extensive / (4.0 * beta * beta);
}

struct CompleteElliptic {
    double K = 0.0;
    double E = 0.0;
};

/// K(k) and E(k) from the complementary modulus k' = sqrt(1 - k^2) via the
/// arithmetic-geometric mean. Passing k' directly keeps precision near k = 1.
inline CompleteElliptic complete_elliptic_from_complement(double k_prime) {
    if (!(k_prime > 0.0) || k_prime > 1.0) {
        throw std::domain_error("complete elliptic integrals: need 0 < k' <= 1");
    }
    double a = 1.0;
    double b = k_prime;
    const double k2 = (1.0 - k_prime) * (1.0 + k_prime);
    double sum = 0.5 * k2;  // 2^-1 c_0^2
    double pow2 = 0.5;
    for (int it = 0; it < 64 && std::abs(a - b) > 1e-15 * a; ++it) {
        const double c = 0.5 * (a - b);
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    CompleteElliptic r;
    r.K = std::numbers::pi / (2.0 * a);
    r.E = r.K * (1.0 - sum);
    return r;
}

inline CompleteElliptic complete_elliptic(double k) {
    if (!(k >= 0.0) || k >= 1.0) throw std::domain_error("complete elliptic integrals: need 0 <= k < 1");
    return complete_elliptic_from_complement(std::sqrt((1.0 - k) * (1.0 + k)));
}

/// Thermodynamic-limit per-site specific heat of the square-lattice Ising model (J = 1).
///
/// c = (2/pi) (beta coth 2beta)^2 [2K - 2E - (1 - k'')(pi/2 + k'' K)] with
/// modulus k = 2 sinh 2beta / cosh^2 2beta and the signed complement
/// k'' = 2 tanh^2 2beta - 1 (|k''| = sqrt(1 - k^2)). Diverges at beta_c.
inline double onsager_specific_heat(double beta) {
    if (!(beta > 0.0)) throw std::domain_error("onsager_specific_heat: requires beta > 0");
    const double t = std::tanh(2.0 * beta);
    const double k_signed = 2.0 * t * t - 1.0;
    if (k_signed == 0.0) return std::numeric_limits<double>::infinity();
    const auto [K, E] = complete_elliptic_from_complement(std::abs(k_signed));
    const double pref = beta / t;
    return (2.0 / std::numbers::pi) * pref * pref *
           (2.0 * K - 2.0 * E - (1.0 - k_signed) * (0.5 * std::numbers::pi + k_signed * K));
}

enum class IsingAlgorithm { wolff, metropolis };

/// Ferromagnetic sampler on even L; energies are reported in the mapped convention.
class IsingSampler {
   public:
    IsingSampler(std::size_t L, double beta, std::uint64_t seed, IsingAlgorithm algo)
        : lat_(L), beta_(beta), algo_(algo), rng_(seed), spins_(lat_.num_sites(), 1) {
        if (L % 2 != 0) {
            throw std::invalid_argument("IsingSampler: odd L breaks the sublattice mapping");
        }
        if (beta < 0.0) throw std::invalid_argument("IsingSampler: beta must be >= 0");
        neighbours_.resize(lat_.num_sites());
        for (std::size_t s = 0; s < lat_.num_sites(); ++s) {
            neighbours_[s] = {lat_.right(s), lat_.up(s), lat_.left(s), lat_.down(s)};
        }
        std::bernoulli_distribution coin(0.5);
        for (auto& s : spins_) s = coin(rng_) ? 1 : -1;
        p_add_ = 1.0 - std::exp(-2.0 * beta_);
        for (int k = 0; k < 5; ++k) accept_[k] = std::exp(-2.0 * beta_ * (2 * k - 4));
        stack_.reserve(lat_.num_sites());
        in_cluster_.assign(lat_.num_sites(), 0);
    }

    /// One sweep: a Metropolis pass, or a fixed number of Wolff
    /// clusters. Until freeze_sweep_length() is called a Wolff sweep grows
    /// clusters until L^2 spins were flipped; that stopping rule depends on the
    /// trajectory and biases measurements, so it is only for thermalization.
    void sweep() {
        if (algo_ == IsingAlgorithm::metropolis) {
            metropolis_pass();
        } else if (clusters_per_sweep_ > 0) {
            for (std::size_t i = 0; i < clusters_per_sweep_; ++i) wolff_cluster();
        } else {
            std::size_t flipped = 0;
            while (flipped < lat_.num_sites()) flipped += wolff_cluster();
        }
    }

    /// Fixes the Wolff sweep to round(L^2 / mean cluster size so far) clusters.
    void freeze_sweep_length() {
        if (algo_ != IsingAlgorithm::wolff) return;
        while (n_clusters_ < 10) wolff_cluster();
        const double mean_size = static_cast<double>(cluster_volume_) / static_cast<double>(n_clusters_);
        clusters_per_sweep_ = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(lat_.num_sites()) / mean_size)));
    }

    std::size_t clusters_per_sweep() const { return clusters_per_sweep_; }

    /// E = sum_<s,s'> theta_s theta_s' of the mapped (toric-code) model.
    double mapped_energy() const {
        int e = 0;
        for (std::size_t s = 0; s < spins_.size(); ++s) {
            e += spins_[s] * (spins_[neighbours_[s][0]] + spins_[neighbours_[s][1]]);
        }
        return -static_cast<double>(e);
    }

   private:
    std::size_t wolff_cluster() {
        std::uniform_int_distribution<std::size_t> pick(0, spins_.size() - 1);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        const std::size_t seed_site = pick(rng_);
        const int orientation = spins_[seed_site];
        stack_.clear();
        members_.clear();
        stack_.push_back(seed_site);
        in_cluster_[seed_site] = 1;
        while (!stack_.empty()) {
            const std::size_t s = stack_.back();
            stack_.pop_back();
            spins_[s] = -orientation;
            members_.push_back(s);
            for (std::size_t nb : neighbours_[s]) {
                if (!in_cluster_[nb] && spins_[nb] == orientation && uni(rng_) < p_add_) {
                    in_cluster_[nb] = 1;
                    stack_.push_back(nb);
                }
            }
        }
        for (std::size_t s : members_) in_cluster_[s] = 0;
        ++n_clusters_;
        cluster_volume_ += members_.size();
        return members_.size();
    }

    /// L^2 single-spin proposals at random sites. A sequential pass would be
    /// non-ergodic at beta = 0, where every proposal is accepted.
    void metropolis_pass() {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, spins_.size() - 1);
        for (std::size_t i = 0; i < spins_.size(); ++i) {
            const std::size_t s = pick(rng_);
            int aligned = 0;
            for (std::size_t nb : neighbours_[s]) aligned += spins_[nb] == spins_[s] ? 1 : 0;
            // Delta E_ferro = 2 * (aligned - anti-aligned) = 2 * (2 aligned - 4).
            const double a = accept_[aligned];
            if (a >= 1.0 || uni(rng_) < a) spins_[s] = -spins_[s];
        }
    }

    TorusLattice lat_;
    double beta_;
    IsingAlgorithm algo_;
    std::mt19937_64 rng_;
    std::vector<int> spins_;
    std::vector<std::array<std::size_t, 4>> neighbours_;
    std::vector<std::size_t> stack_;
    std::vector<std::size_t> members_;
    std::vector<char> in_cluster_;
    double p_add_ = 0.0;
    std::size_t clusters_per_sweep_ = 0;
    std::uint64_t n_clusters_ = 0;
    std::uint64_t cluster_volume_ = 0;
    double accept_[5] = {};
};

struct IsingMcResult {
    McEstimate energy;         // <E>
    McEstimate variance;       // Var(E)
    McEstimate specific_heat;  // beta^2 Var(E) / L^2
    std::vector<double> energies;
};

/// Energy statistics from one seeded chain. Deterministic given all arguments.
inline IsingMcResult mc_sample_energy(double beta, std::size_t L, std::size_t n_therm, std::size_t n_sweeps,
                                      std::uint64_t seed, IsingAlgorithm algo = IsingAlgorithm::wolff) {
    if (L < 4 || L % 2 != 0) {
        throw std::invalid_argument("mc_sample_energy: L must be even and >= 4, got " + std::to_string(L));
    }
    if (n_sweeps < 100) throw std::invalid_argument("mc_sample_energy: need n_sweeps >= 100");
    IsingSampler sampler(L, beta, seed, algo);
    for (std::size_t i = 0; i < n_therm; ++i) sampler.sweep();
    sampler.freeze_sweep_length();
    IsingMcResult r;
    r.energies.resize(n_sweeps);
    for (std::size_t i = 0; i < n_sweeps; ++i) {
        sampler.sweep();
        r.energies[i] = sampler.mapped_energy();
    }
    const auto mv = jackknife_mean_variance(r.energies, seed);
    r.energy = mv.mean;
    r.variance = mv.variance;
    const double scale = beta * beta / static_cast<double>(L * L);
    r.specific_heat = mv.variance;
    r.specific_heat.mean *= scale;
    r.specific_heat.std_error *= scale;
    return r;
}

struct ReweightedCurve {
    std::vector<double> betas;
    std::vector<double> specific_heat;  // per site
    std::vector<double> std_error;
};

/// Single-histogram reweighting of a mapped-convention energy series sampled at
/// beta0 onto nearby couplings. Reliable while |beta - beta0| * sd(E) stays O(1).
inline ReweightedCurve reweight_specific_heat(std::span<const double> energies, double beta0, std::size_t L,
                                              std::span<const double> betas) {
    const std::size_t m = betas.size();
    const double tau = integrated_autocorrelation_time(energies);
    const double shift = sample_mean(energies);
    BlockJackknife jk(energies.size(), 3 * m, jackknife_block_length(tau));
    jk.accumulate([&](std::size_t i, std::vector<double>& f) {
        const double d = energies[i] - shift;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = std::exp(-(betas[j] - beta0) * d);
            f[3 * j] = w;
            f[3 * j + 1] = w * d;
            f[3 * j + 2] = w * d * d;
        }
    });
    const double n_sites = static_cast<double>(L * L);
    const auto r = jk.evaluate(m, [&](const std::vector<double>& mean, std::vector<double>& out) {
        for (std::size_t j = 0; j < m; ++j) {
            const double e1 = mean[3 * j + 1] / mean[3 * j];
            const double e2 = mean[3 * j + 2] / mean[3 * j];
            out[j] = betas[j] * betas[j] * (e2 - e1 * e1) / n_sites;
        }
    });
    ReweightedCurve c;
    c.betas.assign(betas.begin(), betas.end());
    for (const auto& x : r) {
        c.specific_heat.push_back(x.value);
        c.std_error.push_back(x.std_error);
    }
    return c;
}

}  // namespace fidmet
