#include <catch2/catch_amalgamated.hpp>

#include "levymv/fractional_fp.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace levymv;
using Catch::Approx;

namespace {

// Heavy stable tails reach any moderate periodic box; tests that compare
// periodic solutions with each other only need the boundary reported.
FpOptions warn_only() {
    FpOptions o;
    o.abort_on_boundary = false;
    return o;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

} // namespace

TEST_CASE("Fourier modes are eigenfunctions of the fractional operator") {
    const double L = 8.0;
    const std::size_t m = 256;
    const FractionalParams params{1.3, 0.7};
    for (int k : {1, 5, 40}) {
        const double xi = std::numbers::pi * k / L;
        std::vector<double> v(m);
        for (std::size_t j = 0; j < m; ++j) v[j] = std::cos(xi * (-L + 2.0 * L * j / m));
        const auto out = frac_laplacian(v, L, params);
        for (std::size_t j = 0; j < m; ++j) REQUIRE(out[j] == Approx(-0.7 * std::pow(xi, 1.3) * v[j]).margin(1e-10));
    }
    std::vector<double> ones(m, 1.0);
    for (double v : frac_laplacian(ones, L, params)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("alpha = 2 exact solution is the heat kernel") {
    // Multiplier -K' xi^2: N(0, v) spreads to N(0, v + 2 K' t).
    const double L = 40.0, v = 0.5, kp = 0.8, t = 0.7;
    const auto p0 = DensityGrid::gaussian(L, 1024, 0.0, v);
    const auto pt = solve_linear_exact(p0, t, FractionalParams{2.0, kp});
    const auto expect = DensityGrid::gaussian(L, 1024, 0.0, v + 2.0 * kp * t);
    CHECK(sup_diff(pt.values(), expect.values()) < 1e-12);
    CHECK_THROWS(solve_linear_exact(p0, -1.0, FractionalParams{}));
}

TEST_CASE("a zero coefficient leaves the density unchanged") {
    const auto p0 = DensityGrid::gaussian(16.0, 512, 0.3, 1.0);
    const auto res = solve_fp(p0, 1.0, 0.1, ConstantCoefficient{0.0}, FractionalParams{}, {0.5});
    REQUIRE(res.snapshots.size() == 2);
    CHECK(sup_diff(res.snapshots.back().density.values(), p0.values()) < 1e-15);
}

TEST_CASE("constant coefficient converges to the exact solution at fourth order") {
    const double L = 64.0;
    const std::size_t m = 256;
    const FractionalParams params{1.5, 1.0};
    const auto p0 = DensityGrid::gaussian(L, m, 0.0, 1.0);
    // sigma = 2 scales the operator by 2^alpha.
    const FractionalParams scaled{1.5, std::pow(2.0, 1.5)};
    const auto exact = solve_linear_exact(p0, 0.5, scaled);
    const auto coarse = solve_fp(p0, 0.5, 0.05, ConstantCoefficient{2.0}, params, {}, warn_only());
    const auto fine = solve_fp(p0, 0.5, 0.025, ConstantCoefficient{2.0}, params, {}, warn_only());
    const double e1 = sup_diff(coarse.snapshots.back().density.values(), exact.values());
    const double e2 = sup_diff(fine.snapshots.back().density.values(), exact.values());
    CHECK(e1 < 1e-5);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
}

TEST_CASE("the integrating-factor scheme is exact for constant coefficients") {
    const auto p0 = DensityGrid::gaussian(32.0, 512, 0.0, 1.0);
    FpOptions opt = warn_only();
    opt.scheme = TimeScheme::integrating_factor;
    const auto res = solve_fp(p0, 1.0, 0.25, ConstantCoefficient{1.0}, FractionalParams{}, {}, opt);
    const auto exact = solve_linear_exact(p0, 1.0, FractionalParams{});
    CHECK(sup_diff(res.snapshots.back().density.values(), exact.values()) < 1e-13);
}

TEST_CASE("nonlinear runs conserve mass and positivity") {
    const auto p0 = DensityGrid::gaussian(128.0, 2048, 0.0, 1.0);
    for (const CoefficientSpec& sigma : {CoefficientSpec{SmoothedDensityPower{0.5, 0.5}}, CoefficientSpec{LinearInteraction{SineKernel{1.0, 0.5}}}}) {
        const auto res = solve_fp(p0, 0.5, 0.0, sigma, FractionalParams{}, {0.1, 0.25}, warn_only());
        for (double mass : res.mass_log) REQUIRE(std::abs(mass - 1.0) <= 1e-9);
        REQUIRE(res.snapshots.size() == 3);
        CHECK(res.snapshots[0].time == 0.1);
        CHECK(res.snapshots[1].time == 0.25);
        CHECK(res.snapshots[2].time == 0.5);
        for (const auto& s : res.snapshots) CHECK(s.density.min_value() >= -1e-8 * s.density.max_value());
    }
}

TEST_CASE("steps above the stability bound are refused") {
    const auto p0 = DensityGrid::gaussian(16.0, 1024, 0.0, 1.0);
    FpStepper stepper(16.0, 1024, ConstantCoefficient{1.0}, FractionalParams{});
    std::vector<double> p(p0.values().begin(), p0.values().end());
    const double dt = stepper.stable_dt(p);
    // 0.8 of the real-axis RK4 limit 2.785 / (K' (pi/dx)^alpha).
    CHECK(dt == Approx(0.8 * rk4_real_stability / std::pow(std::numbers::pi / p0.dx(), 1.5)));
    CHECK_THROWS_AS(stepper.step(p, 1.5 * dt / 0.8), SolverError);
    CHECK_NOTHROW(stepper.step(p, dt));
}

TEST_CASE("mass reaching the periodic boundary aborts or is reported") {
    const auto p0 = DensityGrid::gaussian(4.0, 256, 0.0, 1.0);
    CHECK_THROWS_AS(solve_fp(p0, 0.5, 0.0, ConstantCoefficient{1.0}, FractionalParams{}), SolverError);
    FpOptions warn;
    warn.abort_on_boundary = false;
    const auto res = solve_fp(p0, 0.5, 0.0, ConstantCoefficient{1.0}, FractionalParams{}, {}, warn);
    CHECK(res.boundary_exceeded);
    CHECK(res.max_boundary_density > warn.boundary_tol);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS(FractionalParams{0.0, 1.0}.validate());
    CHECK_THROWS(FractionalParams{1.5, 0.0}.validate());
    CHECK(FractionalParams{1.5, 2.0}.jump_constant() == Approx(2.0 / stable_kappa(1.5)));
    const auto p0 = DensityGrid::gaussian(16.0, 256, 0.0, 1.0);
    CHECK_THROWS(solve_fp(p0, 0.0, 0.1, ConstantCoefficient{1.0}, FractionalParams{}));
    CHECK_THROWS(solve_fp(p0, 1.0, 0.1, ConstantCoefficient{1.0}, FractionalParams{}, {2.0}));
}

TEST_CASE("jump integral of a Gaussian at its centre against the closed form") {
    // For phi = exp(-x^2 / (2 w^2)): D phi(0) = -K' (w / sqrt(2 pi)) (2 / w^2)^((alpha+1)/2) Gamma((alpha+1)/2).
    const double w = 0.7;
    TestFunction phi{{{1.0, 0.0, w}}};
    for (double alpha : {0.6, 1.0, 1.5, 1.9}) {
        const double kp = 1.3;
        const double expect =
            -kp * w / std::sqrt(2.0 * std::numbers::pi) * std::pow(2.0 / (w * w), (alpha + 1.0) / 2.0) * boost::math::tgamma((alpha + 1.0) / 2.0);
        const double K = kp / stable_kappa(alpha);
        CHECK(generator_jump_integral(phi, 0.0, 1.0, alpha, K) == Approx(expect).epsilon(1e-7));
        // sigma scales the operator by |sigma|^alpha, whatever its sign.
        CHECK(generator_jump_integral(phi, 0.0, -0.5, alpha, K) == Approx(std::pow(0.5, alpha) * expect).epsilon(1e-7));
    }
    CHECK(generator_jump_integral(phi, 0.0, 0.0, 1.5, 1.0) == 0.0);
    CHECK(std::isfinite(generator_jump_integral(phi, 3.0, 1e-150, 1.5, 1.0)));
}

TEST_CASE("adjoint identity for a measure-dependent coefficient") {
    const auto nu = DensityGrid::gaussian(64.0, 2048, 0.2, 1.5);
    const TestFunction phi{{{1.0, 0.3, 0.8}}};
    const TestFunction psi{{{1.0, -0.5, 0.6}, {0.5, 1.0, 0.9}}};
    const auto rep = adjoint_identity_check(LinearInteraction{SineKernel{1.0, 0.5}}, nu, phi, psi, FractionalParams{1.5, 1.0});
    CHECK(rep.relative_error < 1e-4);
    // Preconditions: alpha < 2, room to the boundary, resolved widths.
    CHECK_THROWS(adjoint_identity_check(ConstantCoefficient{1.0}, nu, phi, psi, FractionalParams{2.0, 1.0}));
    const TestFunction wide{{{1.0, 60.0, 1.0}}};
    CHECK_THROWS(adjoint_identity_check(ConstantCoefficient{1.0}, nu, wide, psi, FractionalParams{}));
    const TestFunction thin{{{1.0, 0.0, 0.05}}};
    CHECK_THROWS(adjoint_identity_check(ConstantCoefficient{1.0}, nu, thin, psi, FractionalParams{}));
}
