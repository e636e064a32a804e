#pragma once

// Fourier-spectral method of lines for
//
//     d/dt p = D^alpha ( |sigma(., p)|^alpha p )
//
// on the periodic domain [-L, L). D^alpha is the multiplier -K' |xi|^alpha,
// xi_k = pi k / L, with the zero mode annihilated so mass is conserved to
// rounding. The singular-integral form K * integral of (f(x+y) - f(x) -
// 1{|y|<=1} f'(x) y) |y|^(-1-alpha) dy is the same operator when
// K' = K * kappa(alpha) (see stable_kappa()).

#include "levymv/coefficient.hpp"
#include "levymv/density_grid.hpp"
#include "levymv/fft.hpp"
#include "levymv/levy_driver.hpp"
#include "levymv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace levymv {

struct FractionalParams {
    double alpha = 1.5;
    double k_prime = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("fractional params: alpha must lie in (0, 2]");
        if (!(k_prime > 0.0) || !std::isfinite(k_prime)) throw std::invalid_argument("fractional params: k_prime must be positive");
    }
    /// K of the singular-integral form.
    double jump_constant() const { return k_prime / stable_kappa(alpha); }
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fourier multipliers of one grid geometry.
class FractionalOperator {
public:
    FractionalOperator(double half_width, std::size_t points, FractionalParams params)
        : half_width_(half_width), points_(points), params_(params), fft_(points) {
        params_.validate();
        symbol_.resize(fft_.spectrum_size());
        for (std::size_t k = 0; k < symbol_.size(); ++k)
            symbol_[k] = k == 0 ? 0.0 : -params_.k_prime * std::pow(wavenumber(k, half_width), params_.alpha);
        spectrum_.resize(fft_.spectrum_size());
    }

    std::size_t size() const noexcept { return points_; }
    double half_width() const noexcept { return half_width_; }
    const FractionalParams& params() const noexcept { return params_; }
    /// Largest |multiplier| on the grid (at the Nyquist mode).
    double spectral_radius() const noexcept { return -symbol_.back(); }

    void apply(std::span<const double> in, std::span<double> out) {
        fft_.forward(in, spectrum_);
        for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] *= symbol_[k];
        fft_.backward(spectrum_, out);
    }

    /// Multiplies every mode by exp(scale * symbol).
    void exponentiate(std::span<const double> in, double scale, std::span<double> out) {
        fft_.forward(in, spectrum_);
        for (std::size_t k = 0; k < spectrum_.size(); ++k) spectrum_[k] *= std::exp(scale * symbol_[k]);
        fft_.backward(spectrum_, out);
    }

private:
    double half_width_;
    std::size_t points_;
    FractionalParams params_;
    RealFft fft_;
    std::vector<double> symbol_;
    std::vector<std::complex<double>> spectrum_;
};

inline std::vector<double> frac_laplacian(std::span<const double> values, double half_width, const FractionalParams& params) {
    FractionalOperator op(half_width, values.size(), params);
    std::vector<double> out(values.size());
    op.apply(values, out);
    return out;
}

inline DensityGrid solve_linear_exact(const DensityGrid& p0, double t, const FractionalParams& params) {
    if (!(t >= 0.0)) throw std::invalid_argument("solve_linear_exact: t must be >= 0");
    FractionalOperator op(p0.half_width(), p0.size(), params);
    std::vector<double> out(p0.size());
    op.exponentiate(p0.values(), t, out);
    return DensityGrid::unnormalized(p0.half_width(), std::move(out));
}

enum class TimeScheme { rk4, integrating_factor };

struct FpOptions {
    double c_stab = 0.8; ///< fraction of the RK4 real-axis stability limit
    TimeScheme scheme = TimeScheme::rk4;
    double positivity_rel_tol = 1e-8;
    double mass_step_tol = 1e-9;
    double boundary_tol = 1e-8;
    bool abort_on_boundary = true;
};

/// |R(z)| <= 1 for real z in [-2.785, 0] for classical RK4.
inline constexpr double rk4_real_stability = 2.785293563405282;

/// One method-of-lines integrator bound to a grid, coefficient and scheme.
class FpStepper {
public:
    FpStepper(double half_width, std::size_t points, CoefficientSpec sigma, FractionalParams params, FpOptions options = {})
        : op_(half_width, points, params), coef_(std::move(sigma), half_width, points), options_(options),
          sig_(points), a_(points), w_(points), k1_(points), k2_(points), k3_(points), k4_(points), tmp_(points) {}

    const FpOptions& options() const { return options_; }

    /// max |sigma(., p)|^alpha.
    double max_rate(std::span<const double> p) {
        rates(p);
        return *std::max_element(a_.begin(), a_.end());
    }

    /// Largest stable step for the current state under options().c_stab.
    double stable_dt(std::span<const double> p) {
        const double amax = max_rate(p);
        if (options_.scheme == TimeScheme::integrating_factor) {
            const double amin = *std::min_element(a_.begin(), a_.end());
            const double spread = amax - amin;
            if (spread <= 0.0) return std::numeric_limits<double>::infinity();
            return options_.c_stab * rk4_real_stability / (op_.spectral_radius() * spread);
        }
        if (amax <= 0.0) return std::numeric_limits<double>::infinity();
        return options_.c_stab * rk4_real_stability / (op_.spectral_radius() * amax);
    }

    /// Advances p by dt in place.
    void step(std::span<double> p, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("step_fp: dt must be positive");
        const double limit = stable_dt(p) / options_.c_stab;
        if (dt > limit) throw SolverError("step_fp: dt " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(limit));
        const double mass_before = sum(p);
        const double dx = 2.0 * op_.half_width() / static_cast<double>(p.size());
        if (options_.scheme == TimeScheme::rk4)
            rk4(p, dt);
        else
            lawson(p, dt);
        const double mass_after = sum(p);
        if (std::abs(mass_after - mass_before) * dx > options_.mass_step_tol)
            throw SolverError("step_fp: mass drift " + std::to_string((mass_after - mass_before) * dx) + " in one step");
        const double pmax = *std::max_element(p.begin(), p.end());
        const double pmin = *std::min_element(p.begin(), p.end());
        if (pmin < -options_.positivity_rel_tol * pmax)
            throw SolverError("step_fp: positivity lost (min " + std::to_string(pmin) + "); reduce dt");
    }

private:
    static double sum(std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }

    void rates(std::span<const double> p) {
        coef_.evaluate(p, sig_);
        const double alpha = op_.params().alpha;
        for (std::size_t j = 0; j < p.size(); ++j) a_[j] = std::pow(std::abs(sig_[j]), alpha);
    }

    // out = D^alpha((a(p) - shift) p)
    void rhs(std::span<const double> p, double shift, std::span<double> out) {
        rates(p);
        for (std::size_t j = 0; j < p.size(); ++j) tmp_[j] = (a_[j] - shift) * p[j];
        op_.apply(tmp_, out);
    }

    void rk4(std::span<double> p, double dt) {
        const std::size_t m = p.size();
        rhs(p, 0.0, k1_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = p[j] + 0.5 * dt * k1_[j];
        rhs(w_, 0.0, k2_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = p[j] + 0.5 * dt * k2_[j];
        rhs(w_, 0.0, k3_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = p[j] + dt * k3_[j];
        rhs(w_, 0.0, k4_);
        for (std::size_t j = 0; j < m; ++j) p[j] += dt / 6.0 * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
    }

    // Lawson RK4 with the stiff part D^alpha(a_max p) integrated exactly.
    void lawson(std::span<double> p, double dt) {
        const std::size_t m = p.size();
        const double shift = max_rate(p);
        const double half = 0.5 * dt * shift, full = dt * shift;
        std::vector<double> e_p(m), eh_p(m), buf(m);
        op_.exponentiate(p, full, e_p);
        op_.exponentiate(p, half, eh_p);

        rhs(p, shift, k1_);
        for (std::size_t j = 0; j < m; ++j) buf[j] = p[j] + 0.5 * dt * k1_[j];
        op_.exponentiate(buf, half, w_);
        rhs(w_, shift, k2_);
        for (std::size_t j = 0; j < m; ++j) w_[j] = eh_p[j] + 0.5 * dt * k2_[j];
        rhs(w_, shift, k3_);
        op_.exponentiate(k3_, half, buf);
        for (std::size_t j = 0; j < m; ++j) w_[j] = e_p[j] + dt * buf[j];
        rhs(w_, shift, k4_);

        std::vector<double> ek1(m), ehk23(m);
        op_.exponentiate(k1_, full, ek1);
        for (std::size_t j = 0; j < m; ++j) buf[j] = k2_[j] + k3_[j];
        op_.exponentiate(buf, half, ehk23);
        for (std::size_t j = 0; j < m; ++j) p[j] = e_p[j] + dt / 6.0 * (ek1[j] + 2.0 * ehk23[j] + k4_[j]);
    }

    FractionalOperator op_;
    GridCoefficient coef_;
    FpOptions options_;
    std::vector<double> sig_, a_, w_, k1_, k2_, k3_, k4_, tmp_;
};

inline DensityGrid step_fp(const DensityGrid& p, double dt, const CoefficientSpec& sigma, const FractionalParams& params,
                           const FpOptions& options = {}) {
    FpStepper stepper(p.half_width(), p.size(), sigma, params, options);
    std::vector<double> v(p.values().begin(), p.values().end());
    stepper.step(v, dt);
    return DensityGrid::unnormalized(p.half_width(), std::move(v));
}

struct FpSnapshot {
    double time = 0.0;
    DensityGrid density;
};

struct FpResult {
    std::vector<FpSnapshot> snapshots;
    std::vector<double> step_times;     ///< time after each step
    std::vector<double> mass_log;       ///< sum p dx after each step
    std::vector<double> boundary_log;   ///< boundary density after each step
    std::size_t steps = 0;
    double dt = 0.0;
    double max_boundary_density = 0.0;
    bool boundary_exceeded = false;
};

/// Integrates to time T with steps no larger than dt (dt <= 0 picks the
/// stability-limited step of the initial state). Each interval between
/// requested snapshot times is split uniformly, so snapshots land exactly on
/// the requested times; T is always included.
inline FpResult solve_fp(const DensityGrid& p0, double horizon, double dt, const CoefficientSpec& sigma,
                         const FractionalParams& params, std::vector<double> snapshot_times = {}, const FpOptions& options = {}) {
    if (!(horizon > 0.0)) throw std::invalid_argument("solve_fp: horizon must be positive");
    FpStepper stepper(p0.half_width(), p0.size(), sigma, params, options);
    std::vector<double> p(p0.values().begin(), p0.values().end());
    if (!(dt > 0.0)) {
        dt = stepper.stable_dt(p);
        if (!std::isfinite(dt)) dt = horizon;
    }
    for (double t : snapshot_times)
        if (t < 0.0 || t > horizon * (1.0 + 1e-12)) throw std::invalid_argument("solve_fp: snapshot time outside [0, T]");
    snapshot_times.push_back(horizon);
    for (auto& t : snapshot_times) t = std::min(t, horizon);
    std::sort(snapshot_times.begin(), snapshot_times.end());
    snapshot_times.erase(std::unique(snapshot_times.begin(), snapshot_times.end()), snapshot_times.end());

    FpResult res;
    const double dx = p0.dx();
    auto take = [&](double t) { res.snapshots.push_back({t, DensityGrid::unnormalized(p0.half_width(), p)}); };
    double now = 0.0;
    for (double target : snapshot_times) {
        if (target <= 0.0) {
            take(0.0);
            continue;
        }
        const double span = target - now;
        const auto n = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
        const double h = span / static_cast<double>(n);
        res.dt = std::max(res.dt, h);
        for (std::size_t k = 1; k <= n; ++k) {
            stepper.step(p, h);
            ++res.steps;
            const double t = k == n ? target : now + static_cast<double>(k) * h;
            double mass = 0.0;
            for (double v : p) mass += v;
            res.step_times.push_back(t);
            res.mass_log.push_back(mass * dx);
            const auto grid = DensityGrid::unnormalized(p0.half_width(), p);
            const double b = grid.boundary_density();
            res.boundary_log.push_back(b);
            res.max_boundary_density = std::max(res.max_boundary_density, b);
            if (b > options.boundary_tol) {
                res.boundary_exceeded = true;
                if (options.abort_on_boundary)
                    throw SolverError("solve_fp: density " + std::to_string(b) + " reached the periodic boundary at t = " +
                                      std::to_string(t) + "; enlarge the domain");
            }
        }
        now = target;
        take(target);
    }
    return res;
}

// --- adjoint identity ---------------------------------------------------------

struct GaussianBump {
    double amplitude = 1.0;
    double center = 0.0;
    double width = 1.0;
};

/// Smooth, effectively compactly supported test function: a sum of Gaussian
/// bumps, with the derivatives needed by the small-jump Taylor correction.
struct TestFunction {
    std::vector<GaussianBump> bumps;

    double value(double x) const {
        double s = 0.0;
        for (const auto& b : bumps) {
            const double u = (x - b.center) / b.width;
            s += b.amplitude * std::exp(-0.5 * u * u);
        }
        return s;
    }
    double second_derivative(double x) const {
        double s = 0.0;
        for (const auto& b : bumps) {
            const double u = (x - b.center) / b.width;
            s += b.amplitude * std::exp(-0.5 * u * u) * (u * u - 1.0) / (b.width * b.width);
        }
        return s;
    }
    double fourth_derivative(double x) const {
        double s = 0.0;
        for (const auto& b : bumps) {
            const double u = (x - b.center) / b.width;
            const double w2 = b.width * b.width;
            s += b.amplitude * std::exp(-0.5 * u * u) * (u * u * u * u - 6.0 * u * u + 3.0) / (w2 * w2);
        }
        return s;
    }
    /// Distance from 0 beyond which |value| < 1e-17 * amplitude.
    double reach() const {
        double r = 0.0;
        for (const auto& b : bumps) r = std::max(r, std::abs(b.center) + 9.0 * b.width);
        return r;
    }
    double min_width() const {
        double w = std::numeric_limits<double>::infinity();
        for (const auto& b : bumps) w = std::min(w, b.width);
        return w;
    }
};

struct AdjointReport {
    double lhs = 0.0; ///< integral of L[nu]phi * psi, jump-integral quadrature
    double rhs = 0.0; ///< integral of phi * D^alpha(|sigma|^alpha psi), spectral
    double relative_error = 0.0;
};

/// Jump part of the generator, L[nu]phi(x) = K * integral over y > 0 of
/// (phi(x + s y) + phi(x - s y) - 2 phi(x)) y^(-1-alpha) dy with s = sigma(x, nu).
/// The compensator is odd in y and cancels in the symmetrized form. With
/// z = |s| y this is K |s|^alpha J(x), J the same integral with s = 1.
inline double generator_jump_integral(const TestFunction& phi, double x, double s, double alpha, double K) {
    if (s == 0.0) return 0.0;
    const double w = phi.min_width();
    const double z_small = 1e-3 * w;
    const double panel = 0.25 * w;
    const double z_max = phi.reach() + std::abs(x) + 9.0 * w;
    auto integrand = [&](double z) { return (phi.value(x + z) + phi.value(x - z) - 2.0 * phi.value(x)) * std::pow(z, -1.0 - alpha); };
    // Taylor part on (0, z_small]: phi'' z^2 + phi'''' z^4 / 12.
    double total = phi.second_derivative(x) * std::pow(z_small, 2.0 - alpha) / (2.0 - alpha) +
                   phi.fourth_derivative(x) * std::pow(z_small, 4.0 - alpha) / (12.0 * (4.0 - alpha));
    double lo = z_small;
    while (lo < panel) {
        const double hi = std::min(2.0 * lo, panel);
        total += gauss_panel(integrand, lo, hi);
        lo = hi;
    }
    for (; lo < z_max; lo += panel) total += gauss_panel(integrand, lo, std::min(lo + panel, z_max));
    total += -2.0 * phi.value(x) * std::pow(z_max, -alpha) / alpha;
    return K * std::pow(std::abs(s), alpha) * total;
}

inline AdjointReport adjoint_identity_check(const CoefficientSpec& sigma, const DensityGrid& nu_grid, const TestFunction& phi,
                                            const TestFunction& psi, const FractionalParams& params) {
    params.validate();
    if (params.alpha >= 2.0) throw std::invalid_argument("adjoint_identity_check: needs alpha < 2 (jump-integral form)");
    const double L = nu_grid.half_width();
    if (phi.reach() > 0.8 * L || psi.reach() > 0.8 * L)
        throw std::invalid_argument("adjoint_identity_check: test functions reach the periodic boundary");
    if (phi.min_width() < 8.0 * nu_grid.dx() || psi.min_width() < 8.0 * nu_grid.dx())
        throw std::invalid_argument("adjoint_identity_check: test functions are under-resolved by the grid");

    const std::size_t m = nu_grid.size();
    const double dx = nu_grid.dx();
    const auto s = evaluate_on_density(sigma, nu_grid);
    std::vector<double> weighted(m);
    for (std::size_t j = 0; j < m; ++j) weighted[j] = std::pow(std::abs(s[j]), params.alpha) * psi.value(nu_grid.x(j));
    const auto frac = frac_laplacian(weighted, L, params);

    AdjointReport rep;
    const double K = params.jump_constant();
    const double psi_reach = psi.reach();
    for (std::size_t j = 0; j < m; ++j) {
        const double x = nu_grid.x(j);
        rep.rhs += phi.value(x) * frac[j] * dx;
        if (std::abs(x) <= psi_reach) rep.lhs += generator_jump_integral(phi, x, s[j], params.alpha, K) * psi.value(x) * dx;
    }
    rep.relative_error = std::abs(rep.lhs - rep.rhs) / (std::abs(rep.lhs) + std::abs(rep.rhs) + 1e-300);
    return rep;
}

} // namespace levymv
