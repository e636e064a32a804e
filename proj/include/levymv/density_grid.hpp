#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace levymv {

/// Angular wavenumber of discrete Fourier mode k on a period of length 2L.
inline double wavenumber(std::size_t k, double half_width) {
    return std::numbers::pi * static_cast<double>(k) / half_width;
}

/// Density on the periodic grid x_j = -L + j*dx, j < m, dx = 2L/m.
class DensityGrid {
public:
    /// Normalizes the values to unit mass.
    DensityGrid(double half_width, std::vector<double> values) : half_width_(half_width), values_(std::move(values)) {
        check_shape();
        const double m = mass();
        if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("DensityGrid: values must have positive finite mass");
        for (auto& v : values_) v /= m;
    }

    /// Keeps the values as given; used for solver states whose mass is
    /// monitored rather than enforced.
    static DensityGrid unnormalized(double half_width, std::vector<double> values) {
        DensityGrid g;
        g.half_width_ = half_width;
        g.values_ = std::move(values);
        g.check_shape();
        return g;
    }

    template <class F>
    static DensityGrid from_function(double half_width, std::size_t points, F&& f) {
        std::vector<double> v(points);
        const double dx = 2.0 * half_width / static_cast<double>(points);
        for (std::size_t j = 0; j < points; ++j) v[j] = f(-half_width + dx * static_cast<double>(j));
        return DensityGrid(half_width, std::move(v));
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t size() const noexcept { return values_.size(); }
    double dx() const noexcept { return 2.0 * half_width_ / static_cast<double>(values_.size()); }
    double x(std::size_t j) const noexcept { return -half_width_ + dx() * static_cast<double>(j); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }

    double mass() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s * dx();
    }

    double min_value() const {
        double m = values_.front();
        for (double v : values_) m = std::min(m, v);
        return m;
    }
    double max_value() const {
        double m = values_.front();
        for (double v : values_) m = std::max(m, v);
        return m;
    }

    /// Largest density among the outer 1/64 of the nodes at each end.
    double boundary_density() const {
        const std::size_t band = std::max<std::size_t>(1, values_.size() / 64);
        double m = 0.0;
        for (std::size_t j = 0; j < band; ++j) {
            m = std::max(m, std::abs(values_[j]));
            m = std::max(m, std::abs(values_[values_.size() - 1 - j]));
        }
        return m;
    }

    /// Periodic-wrapped Gaussian N(mean, variance) sampled on the grid.
    static DensityGrid gaussian(double half_width, std::size_t points, double mean, double variance) {
        const double period = 2.0 * half_width;
        return from_function(half_width, points, [&](double x) {
            double s = 0.0;
            for (int k = -3; k <= 3; ++k) {
                const double d = x - mean + k * period;
                s += std::exp(-d * d / (2.0 * variance));
            }
            return s / std::sqrt(2.0 * std::numbers::pi * variance);
        });
    }

private:
    DensityGrid() = default;

    void check_shape() const {
        if (!(half_width_ > 0.0) || !std::isfinite(half_width_)) throw std::invalid_argument("DensityGrid: half width must be positive");
        const std::size_t m = values_.size();
        if (m < 4 || (m & (m - 1)) != 0) throw std::invalid_argument("DensityGrid: point count must be a power of two >= 4");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("DensityGrid: non-finite value");
    }

    double half_width_ = 1.0;
    std::vector<double> values_;
};

} // namespace levymv
