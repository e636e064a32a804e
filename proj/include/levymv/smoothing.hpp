#pragma once

// Evaluation of g_eps * mu for many query points.
//
// exact: log-sum-exp over the samples within the window where the kernel is
//        above e^-40 times the nearest sample's contribution. Always positive.
// binned: linear binning on a grid of spacing sqrt(eps)/32, FFT convolution
//         with the sampled kernel and cubic interpolation. Samples far from the
//         bulk are summed directly. Queries whose binned value falls below a
//         floor are recomputed exactly, which keeps the result positive.

#include "levymv/empirical_measure.hpp"
#include "levymv/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace levymv {

enum class SmoothingMode { automatic, exact, binned };

namespace detail {

/// log of (1/n) sum_j g_eps(x - y_j) over sorted ys, restricted to the
/// window where terms are within e^-40 of the largest.
inline double log_smoothed_exact(std::span<const double> ys, double n_total, double eps, double x) {
    auto it = std::lower_bound(ys.begin(), ys.end(), x);
    double dmin2 = std::numeric_limits<double>::infinity();
    if (it != ys.end()) dmin2 = std::min(dmin2, (*it - x) * (*it - x));
    if (it != ys.begin()) dmin2 = std::min(dmin2, (*(it - 1) - x) * (*(it - 1) - x));
    const double r = std::sqrt(dmin2 + 80.0 * eps);
    const auto lo = std::lower_bound(ys.begin(), ys.end(), x - r);
    const auto hi = std::upper_bound(ys.begin(), ys.end(), x + r);
    double sum = 0.0;
    for (auto p = lo; p != hi; ++p) {
        const double d = *p - x;
        sum += std::exp(-(d * d - dmin2) / (2.0 * eps));
    }
    return -dmin2 / (2.0 * eps) + std::log(sum) - std::log(n_total) - 0.5 * std::log(2.0 * std::numbers::pi * eps);
}

/// (1/n_total) sum of g_eps(x - y) over sorted ys with |x - y| <= radius.
inline double windowed_sum(std::span<const double> ys, double n_total, double eps, double radius, double x) {
    const auto lo = std::lower_bound(ys.begin(), ys.end(), x - radius);
    const auto hi = std::upper_bound(ys.begin(), ys.end(), x + radius);
    double sum = 0.0;
    for (auto p = lo; p != hi; ++p) sum += gaussian_kernel(x - *p, eps);
    return sum / n_total;
}

} // namespace detail

class GaussianSmoother {
public:
    static constexpr std::size_t auto_binned_threshold = 20000;
    static constexpr std::size_t max_grid_points = std::size_t{1} << 22;

    GaussianSmoother(std::span<const double> sorted_samples, double eps, SmoothingMode mode = SmoothingMode::automatic)
        : samples_(sorted_samples.begin(), sorted_samples.end()), eps_(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("GaussianSmoother: eps must be positive");
        if (samples_.empty()) throw std::invalid_argument("GaussianSmoother: no samples");
        if (!std::is_sorted(samples_.begin(), samples_.end())) std::sort(samples_.begin(), samples_.end());
        if (mode == SmoothingMode::automatic)
            mode = samples_.size() > auto_binned_threshold ? SmoothingMode::binned : SmoothingMode::exact;
        binned_ = mode == SmoothingMode::binned;
        if (binned_) build_grid();
    }

    bool binned() const noexcept { return binned_; }
    double eps() const noexcept { return eps_; }

    double log_density(double x) const {
        const double n = static_cast<double>(samples_.size());
        if (!binned_) return detail::log_smoothed_exact(samples_, n, eps_, x);
        double v = 0.0;
        if (x >= grid_lo_ + h_ && x <= grid_lo_ + h_ * static_cast<double>(grid_.size() - 3))
            v += interpolate(x);
        else
            v += detail::windowed_sum(std::span(samples_).subspan(band_begin_, band_end_ - band_begin_), n, eps_, radius_, x);
        v += detail::windowed_sum(std::span(samples_).first(band_begin_), n, eps_, radius_, x);
        v += detail::windowed_sum(std::span(samples_).subspan(band_end_), n, eps_, radius_, x);
        if (v < floor_) return detail::log_smoothed_exact(samples_, n, eps_, x);
        return std::log(v);
    }

    double density(double x) const { return std::exp(log_density(x)); }

private:
    void build_grid() {
        h_ = std::sqrt(eps_) / 32.0;
        radius_ = std::sqrt(80.0 * eps_);
        floor_ = 1e-9 / std::sqrt(2.0 * std::numbers::pi * eps_);
        const double n = static_cast<double>(samples_.size());
        const double max_width = h_ * static_cast<double>(max_grid_points) - 2.0 * radius_ - 4.0 * h_;
        double band_lo = samples_.front(), band_hi = samples_.back();
        if (band_hi - band_lo > max_width) {
            const double median = samples_[samples_.size() / 2];
            band_lo = median - 0.5 * max_width;
            band_hi = median + 0.5 * max_width;
        }
        band_begin_ = static_cast<std::size_t>(std::lower_bound(samples_.begin(), samples_.end(), band_lo) - samples_.begin());
        band_end_ = static_cast<std::size_t>(std::upper_bound(samples_.begin(), samples_.end(), band_hi) - samples_.begin());

        grid_lo_ = band_lo - radius_ - 2.0 * h_;
        const auto points = static_cast<std::size_t>(std::ceil((band_hi - band_lo + 2.0 * radius_ + 4.0 * h_) / h_)) + 1;
        const auto half = static_cast<std::size_t>(std::ceil(radius_ / h_));
        std::size_t fft_size = 1;
        while (fft_size < points + 2 * half) fft_size <<= 1;

        std::vector<double> weights(fft_size, 0.0);
        for (std::size_t j = band_begin_; j < band_end_; ++j) {
            const double pos = (samples_[j] - grid_lo_) / h_;
            const auto g = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(g);
            weights[g] += (1.0 - frac) / n;
            weights[g + 1] += frac / n;
        }
        std::vector<double> kernel(fft_size, 0.0);
        for (std::size_t k = 0; k <= half; ++k) {
            const double v = gaussian_kernel(static_cast<double>(k) * h_, eps_);
            kernel[k] = v;
            if (k) kernel[fft_size - k] = v;
        }
        RealFft fft(fft_size);
        std::vector<std::complex<double>> wh(fft.spectrum_size()), kh(fft.spectrum_size());
        fft.forward(weights, wh);
        fft.forward(kernel, kh);
        for (std::size_t k = 0; k < wh.size(); ++k) wh[k] *= kh[k];
        std::vector<double> conv(fft_size);
        fft.backward(wh, conv);
        grid_.assign(conv.begin(), conv.begin() + static_cast<std::ptrdiff_t>(points));
    }

    double interpolate(double x) const {
        const double pos = (x - grid_lo_) / h_;
        const auto i = static_cast<std::size_t>(pos);
        const double t = pos - static_cast<double>(i);
        const double p0 = grid_[i - 1], p1 = grid_[i], p2 = grid_[i + 1], p3 = grid_[i + 2];
        // Cubic Lagrange through the four surrounding nodes.
        return p0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + p1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0) +
               p2 * (-(t + 1.0) * t * (t - 2.0) / 2.0) + p3 * ((t + 1.0) * t * (t - 1.0) / 6.0);
    }

    std::vector<double> samples_;
    double eps_;
    bool binned_ = false;
    double h_ = 0.0, radius_ = 0.0, floor_ = 0.0, grid_lo_ = 0.0;
    std::size_t band_begin_ = 0, band_end_ = 0;
    std::vector<double> grid_;
};

/// 0.9 min(sd, IQR / 1.34) n^(-1/5).
inline double rule_of_thumb_bandwidth(const EmpiricalMeasure& mu) {
    const double n = static_cast<double>(mu.size());
    const double mean = mu.mean();
    double ss = 0.0;
    for (double x : mu.samples()) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / std::max(1.0, n - 1.0));
    const double iqr = mu.quantile(0.75) - mu.quantile(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
    return 0.9 * spread * std::pow(n, -0.2);
}

} // namespace levymv
