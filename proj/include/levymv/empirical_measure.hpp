#pragma once

// Uniform-weight empirical measures on the real line and the distances between
// them. In one dimension the optimal coupling for the quadratic cost is the
// monotone (sorted) one, so d is computed exactly by pairing order statistics.

#include "levymv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace levymv {

class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(std::vector<double> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw std::invalid_argument("EmpiricalMeasure: no samples");
        for (double x : samples_)
            if (!std::isfinite(x)) throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
        std::sort(samples_.begin(), samples_.end());
    }

    std::size_t size() const noexcept { return samples_.size(); }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }
    double min() const noexcept { return samples_.front(); }
    double max() const noexcept { return samples_.back(); }

    double mean() const { return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(size()); }

    /// Left-continuous quantile function at u in (0, 1].
    double quantile(double u) const {
        const auto n = static_cast<double>(size());
        auto k = static_cast<std::size_t>(std::ceil(u * n));
        k = std::clamp<std::size_t>(k, 1, size());
        return samples_[k - 1];
    }

private:
    std::vector<double> samples_;
};

struct MetricReport {
    double d2 = 0.0;
    double d1_upper = 0.0;
};

namespace detail {
inline void require_same_size(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const char* what) {
    if (mu.size() != nu.size()) throw std::invalid_argument(std::string(what) + ": sample counts differ");
}
} // namespace detail

inline double wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    detail::require_same_size(mu, nu, "wasserstein2");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double d = mu[i] - nu[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(mu.size()));
}

/// d between empirical measures of different sizes via their quantile
/// functions; exact, O(n + m).
inline double wasserstein2_quantile(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const double n = static_cast<double>(mu.size());
    const double m = static_cast<double>(nu.size());
    std::size_t i = 0, j = 0;
    double u = 0.0, acc = 0.0;
    while (i < mu.size() && j < nu.size()) {
        // Compare breakpoints (i+1)/n and (j+1)/m without rounding.
        const double a = static_cast<double>(i + 1) * m;
        const double b = static_cast<double>(j + 1) * n;
        const double next = std::min(a, b) / (n * m);
        const double d = mu[i] - nu[j];
        acc += (next - u) * d * d;
        u = next;
        if (a <= b) ++i;
        if (b <= a) ++j;
    }
    return std::sqrt(std::max(acc, 0.0));
}

/// Monotone-coupling value of the truncated-cost metric d1. The truncated
/// cost is not convex, so this is an upper bound on d1, exact whenever all
/// sorted gaps are at most 1.
inline double modified_d1_upper(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    detail::require_same_size(mu, nu, "modified_d1_upper");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double d = mu[i] - nu[i];
        acc += std::min(d * d, 1.0);
    }
    return std::sqrt(acc / static_cast<double>(mu.size()));
}

inline MetricReport metric_report(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    return {wasserstein2(mu, nu), modified_d1_upper(mu, nu)};
}

/// d(emp(xs), emp(ys)) <= |xs - ys| / sqrt(n), with the index pairing of
/// the two position vectors.
inline bool check_vasdis(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("check_vasdis: lengths differ or are zero");
    const EmpiricalMeasure mu({xs.begin(), xs.end()});
    const EmpiricalMeasure nu({ys.begin(), ys.end()});
    double euclid = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) euclid += (xs[i] - ys[i]) * (xs[i] - ys[i]);
    return wasserstein2(mu, nu) <= std::sqrt(euclid) / std::sqrt(static_cast<double>(xs.size())) + 1e-12;
}

inline double gaussian_kernel(double x, double eps) {
    return std::exp(-x * x / (2.0 * eps)) / std::sqrt(2.0 * std::numbers::pi * eps);
}

/// g_eps * mu at x, by direct summation.
inline double smoothed_density(const EmpiricalMeasure& mu, double eps, double x) {
    if (!(eps > 0.0)) throw std::invalid_argument("smoothed_density: eps must be positive");
    double acc = 0.0;
    for (double y : mu.samples()) acc += gaussian_kernel(x - y, eps);
    return acc / static_cast<double>(mu.size());
}

inline double second_moment(const EmpiricalMeasure& mu) {
    double acc = 0.0;
    for (double x : mu.samples()) acc += x * x;
    return acc / static_cast<double>(mu.size());
}

struct GapEstimate {
    std::size_t n = 0;
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Monte-Carlo estimate of E d^2(nu^n, nu) where nu is represented by a large
/// reference sample. `sampler` draws one value of nu from the given generator.
inline GapEstimate empirical_gap_experiment(const std::function<double(Rng&)>& sampler, std::size_t n, std::size_t reps,
                                            std::uint64_t seed, std::size_t n_ref = 1'000'000) {
    if (n == 0 || reps == 0) throw std::invalid_argument("empirical_gap_experiment: n and reps must be positive");
    std::vector<double> ref(n_ref);
    {
        Rng g = substream(seed, 0, 0, StreamTag::reference);
        for (auto& x : ref) x = sampler(g);
    }
    const EmpiricalMeasure reference(std::move(ref));
    std::vector<double> values(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        Rng g = substream(seed, n, r, StreamTag::experiment);
        std::vector<double> xs(n);
        for (auto& x : xs) x = sampler(g);
        const double d = wasserstein2_quantile(EmpiricalMeasure(std::move(xs)), reference);
        values[r] = d * d;
    }
    GapEstimate out;
    out.n = n;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(reps);
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.standard_error = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
    return out;
}

} // namespace levymv
