#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fidmet {

/// Neumaier-compensated running sum.
class CompensatedSum {
   public:
    CompensatedSum& operator+=(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }
    double value() const { return sum_ + comp_; }

   private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc += x;
    return acc.value();
}

/// Summary of one Monte Carlo observable.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double tau_int = 0.5;  // in units of measurements (sweeps)
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

inline double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("sample_mean: empty series");
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

/// Integrated autocorrelation time with Sokal's automatic window (W >= c * tau).
/// Returns 0.5 for uncorrelated or constant series.
inline double integrated_autocorrelation_time(std::span<const double> xs, double window_c = 6.0) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.5;
    const double mean = sample_mean(xs);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - mean;
    double c0 = 0.0;
    for (double v : d) c0 += v * v;
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) return 0.5;

    double tau = 0.5;
    const std::size_t max_lag = n / 2;
    for (std::size_t t = 1; t < max_lag; ++t) {
        double ct = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) ct += d[i] * d[i + t];
        ct /= static_cast<double>(n - t);
        tau += ct / c0;
        if (static_cast<double>(t) >= window_c * tau) break;
    }
    return std::max(tau, 0.5);
}

/// Block length used for jackknife error bars: 2 * ceil(tau_int), at least 1.
inline std::size_t jackknife_block_length(double tau_int) {
    return std::max<std::size_t>(1, 2 * static_cast<std::size_t>(std::ceil(tau_int)));
}

struct JackknifeResult {
    double value = 0.0;      // estimator on the full sample
    double std_error = 0.0;  // blocked jackknife error
    std::size_t n_blocks = 0;
};

/// Blocked jackknife for estimators that are functions of feature means.
///
/// `features(i, out)` fills the k features of sample i. `estimator` maps a
/// vector of k feature means to one or more derived values. Trailing samples
/// that do not fill a whole block are dropped.
class BlockJackknife {
   public:
    BlockJackknife(std::size_t n_samples, std::size_t n_features, std::size_t block_length)
        : n_features_(n_features), block_length_(std::max<std::size_t>(1, block_length)) {
        n_blocks_ = n_samples / block_length_;
        if (n_blocks_ < 2) {
            throw std::invalid_argument("BlockJackknife: need at least two blocks");
        }
        block_sums_.assign(n_blocks_ * n_features_, 0.0);
    }

    template <class FeatureFn>
    void accumulate(FeatureFn&& features) {
        std::vector<double> f(n_features_);
        for (std::size_t b = 0; b < n_blocks_; ++b) {
            for (std::size_t j = 0; j < block_length_; ++j) {
                features(b * block_length_ + j, f);
                for (std::size_t k = 0; k < n_features_; ++k) block_sums_[b * n_features_ + k] += f[k];
            }
        }
    }

    /// Applies `estimator` (means -> outputs of size n_out) and returns one result per output.
    std::vector<JackknifeResult> evaluate(
        std::size_t n_out,
        const std::function<void(const std::vector<double>&, std::vector<double>&)>& estimator) const {
        std::vector<double> total(n_features_, 0.0);
        for (std::size_t k = 0; k < n_features_; ++k) {
            CompensatedSum acc;
            for (std::size_t b = 0; b < n_blocks_; ++b) acc += block_sums_[b * n_features_ + k];
            total[k] = acc.value();
        }
        const double n_all = static_cast<double>(n_blocks_ * block_length_);
        const double n_loo = n_all - static_cast<double>(block_length_);

        std::vector<double> means(n_features_), out(n_out);
        for (std::size_t k = 0; k < n_features_; ++k) means[k] = total[k] / n_all;
        estimator(means, out);
        std::vector<JackknifeResult> results(n_out);
        for (std::size_t o = 0; o < n_out; ++o) {
            results[o].value = out[o];
            results[o].n_blocks = n_blocks_;
        }

        std::vector<std::vector<double>> loo(n_out, std::vector<double>(n_blocks_));
        for (std::size_t b = 0; b < n_blocks_; ++b) {
            for (std::size_t k = 0; k < n_features_; ++k) {
                means[k] = (total[k] - block_sums_[b * n_features_ + k]) / n_loo;
            }
            estimator(means, out);
            for (std::size_t o = 0; o < n_out; ++o) loo[o][b] = out[o];
        }
        const double nb = static_cast<double>(n_blocks_);
        for (std::size_t o = 0; o < n_out; ++o) {
            const double m = sample_mean(loo[o]);
            double ss = 0.0;
            for (double v : loo[o]) ss += (v - m) * (v - m);
            results[o].std_error = std::sqrt((nb - 1.0) / nb * ss);
        }
        return results;
    }

   private:
    std::size_t n_features_;
    std::size_t block_length_;
    std::size_t n_blocks_ = 0;
    std::vector<double> block_sums_;
};

/// Mean and variance of one series with blocked-jackknife errors.
struct MeanVariance {
    McEstimate mean;
    McEstimate variance;
};

inline MeanVariance jackknife_mean_variance(std::span<const double> xs, std::uint64_t seed) {
    const double tau = integrated_autocorrelation_time(xs);
    const double shift = sample_mean(xs);
    BlockJackknife jk(xs.size(), 2, jackknife_block_length(tau));
    jk.accumulate([&](std::size_t i, std::vector<double>& f) {
        const double d = xs[i] - shift;
        f[0] = d;
        f[1] = d * d;
    });
    const auto r = jk.evaluate(2, [&](const std::vector<double>& m, std::vector<double>& out) {
        out[0] = m[0] + shift;
        out[1] = m[1] - m[0] * m[0];
    });
    MeanVariance mv;
    mv.mean = {r[0].value, r[0].std_error, tau, xs.size(), seed};
    mv.variance = {r[1].value, r[1].std_error, tau, xs.size(), seed};
    return mv;
}

}  // namespace fidmet
