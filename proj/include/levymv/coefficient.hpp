#pragma once

// The coefficient sigma(x, nu) multiplying the driver increments.
//
//   Constant              sigma = value
//   LinearInteraction     sigma = integral of k(x, y) nu(dy)
//   SmoothedDensityPower  sigma = (g_eps * nu)(x)^s

#include "levymv/density_grid.hpp"
#include "levymv/empirical_measure.hpp"
#include "levymv/fft.hpp"
#include "levymv/rng.hpp"
#include "levymv/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace levymv {

/// c0 + c1 sin(x - y)
struct SineKernel {
    double c0 = 1.0;
    double c1 = 0.5;
};
/// c0 + c1 / (1 + (x - y)^2)
struct LorentzianKernel {
    double c0 = 1.0;
    double c1 = 0.5;
};
struct CustomKernel {
    std::string name;
    std::function<double(double, double)> fn;
};
using InteractionKernel = std::variant<SineKernel, LorentzianKernel, CustomKernel>;

inline double evaluate(const InteractionKernel& kernel, double x, double y) {
    return std::visit(
        [x, y](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SineKernel>) return k.c0 + k.c1 * std::sin(x - y);
            else if constexpr (std::is_same_v<T, LorentzianKernel>) return k.c0 + k.c1 / (1.0 + (x - y) * (x - y));
            else return k.fn(x, y);
        },
        kernel);
}

struct ConstantCoefficient {
    double value = 1.0;
};
struct LinearInteraction {
    InteractionKernel kernel = SineKernel{};
};
struct SmoothedDensityPower {
    double eps = 0.5;
    double s = 0.5;
};
using CoefficientSpec = std::variant<ConstantCoefficient, LinearInteraction, SmoothedDensityPower>;

struct KernelBounds {
    double sup_value = 0.0;
    double sup_dx = 0.0;  ///< K1-type bound
    double sup_dxx = 0.0; ///< K2-type bound
};

/// Grid probe of |k|, |d_x k|, |d_xx k| over [-20, 20]^2 by central differences.
inline KernelBounds probe_kernel(const InteractionKernel& kernel) {
    KernelBounds b;
    constexpr int points = 81;
    constexpr double h = 1e-3;
    for (int i = 0; i < points; ++i) {
        const double x = -20.0 + 40.0 * i / (points - 1);
        for (int j = 0; j < points; ++j) {
            const double y = -20.0 + 40.0 * j / (points - 1);
            const double f0 = evaluate(kernel, x, y);
            const double fp = evaluate(kernel, x + h, y);
            const double fm = evaluate(kernel, x - h, y);
            b.sup_value = std::max(b.sup_value, std::abs(f0));
            b.sup_dx = std::max(b.sup_dx, std::abs(fp - fm) / (2.0 * h));
            b.sup_dxx = std::max(b.sup_dxx, std::abs(fp - 2.0 * f0 + fm) / (h * h));
        }
    }
    return b;
}

/// Structural checks. A zero Constant is accepted (it is the trivial control
/// case); nondegeneracy is reported separately by is_nondegenerate().
inline void validate(const CoefficientSpec& spec) {
    std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ConstantCoefficient>) {
                if (!std::isfinite(c.value)) throw std::invalid_argument("coefficient: constant must be finite");
            } else if constexpr (std::is_same_v<T, LinearInteraction>) {
                if (const auto* ck = std::get_if<CustomKernel>(&c.kernel); ck && !ck->fn)
                    throw std::invalid_argument("coefficient: custom kernel has no function");
                const auto b = probe_kernel(c.kernel);
                for (double v : {b.sup_value, b.sup_dx, b.sup_dxx})
                    if (!std::isfinite(v) || v > 1e8)
                        throw std::invalid_argument("coefficient: interaction kernel is not bounded with bounded x-derivatives");
            } else {
                if (!(c.eps > 0.0) || !std::isfinite(c.eps)) throw std::invalid_argument("coefficient: eps must be positive");
                if (!(c.s > 0.0) || !std::isfinite(c.s)) throw std::invalid_argument("coefficient: s must be positive");
            }
        },
        spec);
}

/// sigma never vanishes: a nonzero constant, a kernel bounded away from zero
/// on the probe grid, or the smoothed-density power (always positive).
inline bool is_nondegenerate(const CoefficientSpec& spec) {
    if (const auto* c = std::get_if<ConstantCoefficient>(&spec)) return c->value != 0.0;
    if (const auto* l = std::get_if<LinearInteraction>(&spec)) {
        if (const auto* s = std::get_if<SineKernel>(&l->kernel)) return std::abs(s->c0) > std::abs(s->c1);
        if (const auto* r = std::get_if<LorentzianKernel>(&l->kernel))
            return r->c0 + std::min(r->c1, 0.0) > 0.0 || r->c0 + std::max(r->c1, 0.0) < 0.0;
        return false;
    }
    return true;
}

inline bool depends_on_measure(const CoefficientSpec& spec) {
    return !std::holds_alternative<ConstantCoefficient>(spec);
}

/// sigma(., mu) with the per-measure work done once: the sine kernel reduces
/// to two empirical moments, the smoothed density to a GaussianSmoother.
class PreparedCoefficient {
public:
    PreparedCoefficient(const CoefficientSpec& spec, const EmpiricalMeasure& mu, SmoothingMode mode = SmoothingMode::automatic)
        : spec_(spec) {
        if (const auto* l = std::get_if<LinearInteraction>(&spec_)) {
            if (std::holds_alternative<SineKernel>(l->kernel)) {
                double cs = 0.0, sn = 0.0;
                for (double y : mu.samples()) {
                    cs += std::cos(y);
                    sn += std::sin(y);
                }
                mean_cos_ = cs / static_cast<double>(mu.size());
                mean_sin_ = sn / static_cast<double>(mu.size());
            } else {
                samples_.assign(mu.samples().begin(), mu.samples().end());
            }
        } else if (const auto* p = std::get_if<SmoothedDensityPower>(&spec_)) {
            smoother_.emplace(mu.samples(), p->eps, mode);
        }
    }

    double operator()(double x) const {
        return std::visit(
            [&](const auto& c) -> double {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, ConstantCoefficient>) {
                    return c.value;
                } else if constexpr (std::is_same_v<T, LinearInteraction>) {
                    if (const auto* s = std::get_if<SineKernel>(&c.kernel))
                        return s->c0 + s->c1 * (std::sin(x) * mean_cos_ - std::cos(x) * mean_sin_);
                    double acc = 0.0;
                    for (double y : samples_) acc += evaluate(c.kernel, x, y);
                    return acc / static_cast<double>(samples_.size());
                } else {
                    return std::exp(c.s * smoother_->log_density(x));
                }
            },
            spec_);
    }

private:
    CoefficientSpec spec_;
    double mean_cos_ = 0.0, mean_sin_ = 0.0;
    std::vector<double> samples_;
    std::optional<GaussianSmoother> smoother_;
};

inline double evaluate(const CoefficientSpec& spec, double x, const EmpiricalMeasure& mu) {
    return PreparedCoefficient(spec, mu, SmoothingMode::exact)(x);
}

/// sigma(x_j, p dx) at every node of a periodic density grid. The smoothed
/// density is a periodic spectral convolution; kernels are summed directly
/// (the sine kernel through its two trigonometric moments).
class GridCoefficient {
public:
    GridCoefficient(CoefficientSpec spec, double half_width, std::size_t points)
        : spec_(std::move(spec)), half_width_(half_width), points_(points) {
        validate(spec_);
        const double dx = 2.0 * half_width / static_cast<double>(points);
        if (const auto* p = std::get_if<SmoothedDensityPower>(&spec_)) {
            if (p->eps < 4.0 * dx * dx)
                throw std::invalid_argument("coefficient: eps below the grid floor 4*dx^2; refine the grid");
            fft_.emplace(points);
            smoothing_.resize(fft_->spectrum_size());
            for (std::size_t k = 0; k < smoothing_.size(); ++k) {
                const double xi = wavenumber(k, half_width);
                smoothing_[k] = std::exp(-0.5 * p->eps * xi * xi);
            }
            spectrum_.resize(fft_->spectrum_size());
        }
    }

    const CoefficientSpec& spec() const { return spec_; }

    void evaluate(std::span<const double> p, std::span<double> out) {
        if (p.size() != points_ || out.size() != points_) throw std::invalid_argument("evaluate_on_density: size mismatch");
        const double dx = 2.0 * half_width_ / static_cast<double>(points_);
        auto node = [&](std::size_t j) { return -half_width_ + dx * static_cast<double>(j); };
        if (const auto* c = std::get_if<ConstantCoefficient>(&spec_)) {
            std::fill(out.begin(), out.end(), c->value);
        } else if (const auto* l = std::get_if<LinearInteraction>(&spec_)) {
            if (const auto* s = std::get_if<SineKernel>(&l->kernel)) {
                double mass = 0.0, cs = 0.0, sn = 0.0;
                for (std::size_t j = 0; j < points_; ++j) {
                    mass += p[j] * dx;
                    cs += std::cos(node(j)) * p[j] * dx;
                    sn += std::sin(node(j)) * p[j] * dx;
                }
                for (std::size_t j = 0; j < points_; ++j)
                    out[j] = s->c0 * mass + s->c1 * (std::sin(node(j)) * cs - std::cos(node(j)) * sn);
            } else {
                for (std::size_t j = 0; j < points_; ++j) {
                    double acc = 0.0;
                    for (std::size_t l2 = 0; l2 < points_; ++l2) acc += levymv::evaluate(l->kernel, node(j), node(l2)) * p[l2];
                    out[j] = acc * dx;
                }
            }
        } else {
            const auto& sp = std::get<SmoothedDensityPower>(spec_);
            fft_->forward(p, spectrum_);
            for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] *= smoothing_[k];
            fft_->backward(spectrum_, out);
            constexpr double tiny = std::numeric_limits<double>::min();
            for (auto& v : out) v = std::pow(std::max(v, tiny), sp.s);
        }
    }

private:
    CoefficientSpec spec_;
    double half_width_;
    std::size_t points_;
    std::optional<RealFft> fft_;
    std::vector<double> smoothing_;
    std::vector<std::complex<double>> spectrum_;
};

inline std::vector<double> evaluate_on_density(const CoefficientSpec& spec, const DensityGrid& grid) {
    GridCoefficient gc(spec, grid.half_width(), grid.size());
    std::vector<double> out(grid.size());
    gc.evaluate(grid.values(), out);
    return out;
}

struct LipschitzEstimate {
    double in_x = 0.0;
    double in_measure_d = 0.0;  ///< w.r.t. the Vaserstein metric d
    double in_measure_d1 = 0.0; ///< w.r.t. the monotone-coupling value of d1
};

/// Largest difference quotients seen over random pairs. The true constants
/// are suprema over all inputs, so these are lower-bound estimates.
inline LipschitzEstimate lipschitz_probe(const CoefficientSpec& spec, std::size_t trials, std::uint64_t seed,
                                         std::size_t measure_size = 8) {
    LipschitzEstimate est;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng g = substream(seed, t, 0, StreamTag::probe);
        const double spread = 0.2 + 3.0 * uniform_open01(g);
        std::vector<double> a(measure_size), b(measure_size);
        for (std::size_t i = 0; i < measure_size; ++i) {
            a[i] = spread * standard_normal(g);
            b[i] = a[i] + 0.5 * uniform_open01(g) * standard_normal(g);
        }
        const EmpiricalMeasure mu(a), nu(b);
        const PreparedCoefficient smu(spec, mu, SmoothingMode::exact), snu(spec, nu, SmoothingMode::exact);
        const double x = 3.0 * standard_normal(g);
        const double x2 = x + (0.01 + uniform_open01(g)) * (uniform_open01(g) < 0.5 ? -1.0 : 1.0);
        est.in_x = std::max(est.in_x, std::abs(smu(x) - smu(x2)) / std::abs(x - x2));
        const auto report = metric_report(mu, nu);
        const double diff = std::abs(smu(x) - snu(x));
        if (report.d2 > 0.0) est.in_measure_d = std::max(est.in_measure_d, diff / report.d2);
        if (report.d1_upper > 0.0) est.in_measure_d1 = std::max(est.in_measure_d1, diff / report.d1_upper);
    }
    return est;
}

} // namespace levymv
