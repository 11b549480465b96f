#pragma once

// Ground state of the stochastic-matrix-form toric code. The state is a
// Boltzmann-weighted superposition over the star group G; every quantity here
// depends only on the energy E(g) = sum_i sigma_i^z(g), so exact results are
// built from the energy histogram of G.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "fidmet/lattice.hpp"
#include "fidmet/stats.hpp"

namespace fidmet {

/// Largest L for which G (2^(L^2 - 1) elements) is enumerated exactly.
inline constexpr std::size_t kSmfMaxEnumerationL = 5;

/// A group element g in G, stored as the set of stars whose product is g.
/// Always canonical: site 0 never belongs to the set, since multiplying by
/// the product of all stars (the identity on the torus) complements it.
class StarSubset {
   public:
    explicit StarSubset(const TorusLattice& lattice)
        : lattice_(&lattice), members_(lattice.num_sites(), false) {}

    StarSubset(const TorusLattice& lattice, std::vector<bool> members)
        : lattice_(&lattice), members_(std::move(members)) {
        if (members_.size() != lattice.num_sites()) {
            throw std::invalid_argument("StarSubset: membership size does not match lattice");
        }
        canonicalize();
    }

    /// Bit s of `mask` selects star s. Requires L^2 <= 64.
    static StarSubset from_mask(const TorusLattice& lattice, std::uint64_t mask) {
        const std::size_t n = lattice.num_sites();
        if (n > 64) throw std::invalid_argument("StarSubset::from_mask: lattice too large");
        std::vector<bool> m(n);
        for (std::size_t s = 0; s < n; ++s) m[s] = ((mask >> s) & 1U) != 0;
        return StarSubset(lattice, std::move(m));
    }

    const TorusLattice& lattice() const { return *lattice_; }
    bool contains(std::size_t s) const { return members_.at(s); }
    const std::vector<bool>& members() const { return members_; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(members_.begin(), members_.end(), true)); }

    /// theta_s = -1 if star s acts, +1 otherwise.
    int theta(std::size_t s) const { return members_.at(s) ? -1 : 1; }

    StarSubset complement() const {
        std::vector<bool> m(members_.size());
        for (std::size_t s = 0; s < m.size(); ++s) m[s] = !members_[s];
        return StarSubset(*lattice_, std::move(m));
    }

    friend bool operator==(const StarSubset& a, const StarSubset& b) {
        return a.lattice_->size() == b.lattice_->size() && a.members_ == b.members_;
    }

   private:
    void canonicalize() {
        if (!members_.empty() && members_[0]) members_.flip();
    }

    const TorusLattice* lattice_;
    std::vector<bool> members_;
};

/// sigma^z on every bond of g|0>: sigma_i = theta_s * theta_s' over the bond endpoints.
inline std::vector<int> bond_spins(const StarSubset& g) {
    const auto& lat = g.lattice();
    std::vector<int> sigma(lat.num_bonds());
    for (std::size_t b = 0; b < lat.num_bonds(); ++b) {
        const auto [s, t] = lat.endpoints(b);
        sigma[b] = g.theta(s) * g.theta(t);
    }
    return sigma;
}

inline int smf_energy(const StarSubset& g) {
    int e = 0;
    for (int s : bond_spins(g)) e += s;
    return e;
}

/// Exact histogram of E(g) over G.
///
/// Index k counts elements with k unsatisfied bonds (sigma = -1), i.e.
/// E = n_bonds - 2k.
class SmfSpectrum {
   public:
    static SmfSpectrum enumerate(const TorusLattice& lattice, unsigned threads = 1) {
        const std::size_t L = lattice.size();
        if (L > kSmfMaxEnumerationL) {
            throw BudgetExceeded("smf enumeration: L = " + std::to_string(L) +
                                 " exceeds budget L <= " + std::to_string(kSmfMaxEnumerationL));
        }
        const std::size_t n_free = lattice.num_sites() - 1;
        const std::uint64_t total = std::uint64_t{1} << n_free;
        threads = std::max(1U, threads);
        const std::uint64_t n_chunks = std::min<std::uint64_t>(threads, total);

        std::vector<std::vector<std::uint64_t>> partial(
            n_chunks, std::vector<std::uint64_t>(lattice.num_bonds() + 1, 0));
        auto work = [&](std::uint64_t c) {
            const std::uint64_t begin = total * c / n_chunks;
            const std::uint64_t end = total * (c + 1) / n_chunks;
            count_range(lattice, begin, end, partial[c]);
        };
        if (n_chunks == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::uint64_t c = 0; c < n_chunks; ++c) pool.emplace_back(work, c);
            for (auto& t : pool) t.join();
        }

        SmfSpectrum spec;
        spec.L_ = L;
        spec.n_bonds_ = static_cast<int>(lattice.num_bonds());
        spec.counts_.assign(lattice.num_bonds() + 1, 0);
        for (const auto& p : partial) {
            for (std::size_t k = 0; k < p.size(); ++k) spec.counts_[k] += p[k];
        }
        return spec;
    }

    std::size_t lattice_size() const { return L_; }
    int num_bonds() const { return n_bonds_; }
    int energy_of_index(std::size_t k) const { return n_bonds_ - 2 * static_cast<int>(k); }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    std::uint64_t group_order() const {
        std::uint64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

    double log_partition_function(double beta) const {
        const double shift = log_weight_shift(beta);
        CompensatedSum acc;
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            if (counts_[k] == 0) continue;
            acc += static_cast<double>(counts_[k]) * std::exp(-beta * energy_of_index(k) - shift);
        }
        return shift + std::log(acc.value());
    }

    double partition_function(double beta) const { return std::exp(log_partition_function(beta)); }

    double mean_energy(double beta) const { return moments(beta).first; }
    double energy_variance(double beta) const { return moments(beta).second; }

    /// <gs(beta1)|gs(beta2)>.
    double fidelity(double beta1, double beta2) const {
        const double log_f = log_partition_function(0.5 * (beta1 + beta2)) -
                             0.5 * (log_partition_function(beta1) + log_partition_function(beta2));
        return std::min(1.0, std::exp(log_f));
    }

    /// g_bb = Var(E) / 4 (extensive).
    double metric(double beta) const { return 0.25 * energy_variance(beta); }

    double magnetization(double beta) const { return mean_energy(beta) / static_cast<double>(n_bonds_); }

   private:
    static void count_range(const TorusLattice& lat, std::uint64_t begin, std::uint64_t end,
                            std::vector<std::uint64_t>& counts) {
        if (begin >= end) return;
        const std::size_t n_sites = lat.num_sites();
        std::vector<std::array<std::size_t, 4>> stars(n_sites);
        for (std::size_t s = 0; s < n_sites; ++s) stars[s] = lat.star(s);

        // Start from the Gray-code element of index `begin`; star s <-> bit s-1.
        const std::uint64_t gray = begin ^ (begin >> 1);
        std::vector<int> theta(n_sites, 1);
        for (std::size_t s = 1; s < n_sites; ++s) {
            if ((gray >> (s - 1)) & 1U) theta[s] = -1;
        }
        std::vector<int> sigma(lat.num_bonds());
        std::size_t flipped = 0;
        for (std::size_t b = 0; b < lat.num_bonds(); ++b) {
            const auto [s, t] = lat.endpoints(b);
            sigma[b] = theta[s] * theta[t];
            if (sigma[b] < 0) ++flipped;
        }
        ++counts[flipped];

        for (std::uint64_t i = begin + 1; i < end; ++i) {
            const std::size_t star = static_cast<std::size_t>(std::countr_zero(i)) + 1;
            for (std::size_t b : stars[star]) {
                sigma[b] = -sigma[b];
                if (sigma[b] < 0) {
                    ++flipped;
                } else {
                    --flipped;
                }
            }
            ++counts[flipped];
        }
    }

    double log_weight_shift(double beta) const {
        double shift = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            if (counts_[k] != 0) shift = std::max(shift, -beta * energy_of_index(k));
        }
        return shift;
    }

    std::pair<double, double> moments(double beta) const {
        const double shift = log_weight_shift(beta);
        std::vector<double> w(counts_.size(), 0.0);
        CompensatedSum norm;
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            if (counts_[k] == 0) continue;
            w[k] = static_cast<double>(counts_[k]) * std::exp(-beta * energy_of_index(k) - shift);
            norm += w[k];
        }
        CompensatedSum m1;
        for (std::size_t k = 0; k < w.size(); ++k) m1 += w[k] * energy_of_index(k);
        const double mean = m1.value() / norm.value();
        CompensatedSum m2;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double d = energy_of_index(k) - mean;
            m2 += w[k] * d * d;
        }
        return {mean, m2.value() / norm.value()};
    }

    std::size_t L_ = 0;
    int n_bonds_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Normalized ground-state amplitudes psi(g) = exp(-beta E(g) / 2) / sqrt(Z(beta)).
class SmfGroundState {
   public:
    SmfGroundState(const TorusLattice& lattice, double beta)
        : lattice_(lattice), beta_(beta),
          log_z_(SmfSpectrum::enumerate(lattice).log_partition_function(beta)) {}

    double beta() const { return beta_; }
    const TorusLattice& lattice() const { return lattice_; }
    double log_partition_function() const { return log_z_; }

    double amplitude(const StarSubset& g) const {
        return std::exp(-0.5 * beta_ * smf_energy(g) - 0.5 * log_z_);
    }

   private:
    TorusLattice lattice_;
    double beta_;
    double log_z_;
};

inline double partition_function(double beta, std::size_t L) {
    return SmfSpectrum::enumerate(TorusLattice(L)).partition_function(beta);
}

inline double fidelity(double beta1, double beta2, std::size_t L) {
    return SmfSpectrum::enumerate(TorusLattice(L)).fidelity(beta1, beta2);
}

/// g_bb = (<E^2> - <E>^2) / 4.
inline double metric_fluctuation(double beta, std::size_t L) {
    return SmfSpectrum::enumerate(TorusLattice(L)).metric(beta);
}

/// g_bb = C_v / (4 beta^2), with C_v the extensive specific heat beta^2 Var(E).
inline double metric_from_specific_heat(double beta, double extensive_cv) {
    if (!(beta > 0.0)) {
        throw std::domain_error("metric_from_specific_heat: requires beta > 0");
    }
    return extensive_cv / (4.0 * beta * beta);
}

/// m = <E> / (number of bonds).
inline double magnetization(double beta, std::size_t L) {
    return SmfSpectrum::enumerate(TorusLattice(L)).magnetization(beta);
}

}  // namespace fidmet
