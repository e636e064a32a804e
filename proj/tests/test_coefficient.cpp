#include <catch2/catch_amalgamated.hpp>

#include "levymv/coefficient.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace levymv;
using Catch::Approx;

namespace {
double gauss_pdf(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}
} // namespace

TEST_CASE("constant coefficient ignores the measure") {
    const EmpiricalMeasure mu({0.0, 5.0});
    CHECK(evaluate(CoefficientSpec{ConstantCoefficient{2.5}}, -3.0, mu) == 2.5);
    CHECK_NOTHROW(validate(CoefficientSpec{ConstantCoefficient{0.0}}));
    CHECK_FALSE(is_nondegenerate(CoefficientSpec{ConstantCoefficient{0.0}}));
    CHECK_FALSE(depends_on_measure(CoefficientSpec{ConstantCoefficient{1.0}}));
    CHECK_THROWS(validate(CoefficientSpec{ConstantCoefficient{INFINITY}}));
}

TEST_CASE("sine interaction for two particles by hand") {
    const CoefficientSpec spec = LinearInteraction{SineKernel{1.0, 0.5}};
    const EmpiricalMeasure mu({0.0, std::numbers::pi / 2.0});
    CHECK(evaluate(spec, 0.0, mu) == Approx(1.0 + 0.5 * (std::sin(0.0) + std::sin(-std::numbers::pi / 2.0)) / 2.0));
    CHECK(evaluate(spec, std::numbers::pi / 2.0, mu) == Approx(1.0 + 0.5 * (1.0 + 0.0) / 2.0));
}

TEST_CASE("kernel shortcuts agree with the plain average") {
    std::mt19937_64 g(1);
    std::normal_distribution<double> nd;
    std::vector<double> ys(50);
    for (auto& y : ys) y = 2.0 * nd(g);
    const EmpiricalMeasure mu(ys);
    for (const InteractionKernel& k : {InteractionKernel{SineKernel{0.3, -0.8}}, InteractionKernel{LorentzianKernel{1.0, 2.0}}}) {
        const PreparedCoefficient prep(LinearInteraction{k}, mu);
        for (double x : {-1.0, 0.2, 4.0}) {
            double direct = 0.0;
            for (double y : ys) direct += evaluate(k, x, y);
            REQUIRE(prep(x) == Approx(direct / ys.size()).epsilon(1e-12));
        }
    }
}

TEST_CASE("smoothed density power is the power of the smoothed density") {
    const CoefficientSpec spec = SmoothedDensityPower{0.5, 0.5};
    const EmpiricalMeasure mu({-1.0, 0.0, 2.0});
    for (double x : {-2.0, 0.5, 1.0}) CHECK(evaluate(spec, x, mu) == Approx(std::sqrt(smoothed_density(mu, 0.5, x))).epsilon(1e-12));
    CHECK(is_nondegenerate(spec));
    CHECK_THROWS(validate(CoefficientSpec{SmoothedDensityPower{0.0, 0.5}}));
    CHECK_THROWS(validate(CoefficientSpec{SmoothedDensityPower{0.5, -1.0}}));
}

TEST_CASE("nondegeneracy of the built-in kernels") {
    CHECK(is_nondegenerate(CoefficientSpec{LinearInteraction{SineKernel{1.0, 0.5}}}));
    CHECK_FALSE(is_nondegenerate(CoefficientSpec{LinearInteraction{SineKernel{0.5, 1.0}}}));
    CHECK(is_nondegenerate(CoefficientSpec{LinearInteraction{LorentzianKernel{1.0, -0.5}}}));
    CHECK_FALSE(is_nondegenerate(CoefficientSpec{LinearInteraction{LorentzianKernel{1.0, -1.0}}}));
}

TEST_CASE("unbounded kernels are rejected") {
    const CoefficientSpec quad = LinearInteraction{CustomKernel{"exp", [](double x, double y) { return std::exp(x - y); }}};
    CHECK_THROWS(validate(quad));
    const CoefficientSpec empty = LinearInteraction{CustomKernel{"none", {}}};
    CHECK_THROWS(validate(empty));
    const CoefficientSpec ok = LinearInteraction{CustomKernel{"cos", [](double x, double y) { return 1.0 + 0.2 * std::cos(x - y); }}};
    CHECK_NOTHROW(validate(ok));
}

TEST_CASE("grid evaluation of the smoothed density power against the Gaussian closed form") {
    // g_eps * N(m, v) = N(m, v + eps).
    const double L = 32.0, m = 0.4, v = 0.8, eps = 0.5, s = 0.5;
    const auto grid = DensityGrid::gaussian(L, 2048, m, v);
    const auto sig = evaluate_on_density(SmoothedDensityPower{eps, s}, grid);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.x(j);
        if (std::abs(x) > 6.0) continue;
        worst = std::max(worst, std::abs(sig[j] - std::pow(gauss_pdf(x, m, v + eps), s)));
    }
    CHECK(worst < 1e-10);
    CHECK_THROWS(evaluate_on_density(SmoothedDensityPower{1e-4, 0.5}, grid));
}

TEST_CASE("grid evaluation of the sine kernel against quadrature") {
    // For N(m, v): E sin(x - Y) = sin(x - m) exp(-v / 2).
    const double L = 32.0, m = -0.3, v = 1.2;
    const auto grid = DensityGrid::gaussian(L, 1024, m, v);
    const auto sig = evaluate_on_density(LinearInteraction{SineKernel{1.0, 0.5}}, grid);
    for (std::size_t j = 0; j < grid.size(); j += 37) {
        const double x = grid.x(j);
        REQUIRE(sig[j] == Approx(1.0 + 0.5 * std::sin(x - m) * std::exp(-v / 2.0)).margin(1e-10));
    }
    const auto lor = evaluate_on_density(LinearInteraction{LorentzianKernel{1.0, 0.5}}, DensityGrid::gaussian(16.0, 256, 0.0, 1.0));
    CHECK(lor[128] > 1.0);
    CHECK(lor[128] < 1.5);
}

TEST_CASE("Lipschitz probes stay below the known constants") {
    CHECK(lipschitz_probe(ConstantCoefficient{1.0}, 200, 3).in_measure_d == 0.0);
    const auto est = lipschitz_probe(LinearInteraction{SineKernel{1.0, 0.5}}, 500, 4);
    CHECK(est.in_x <= 0.5 + 1e-9);
    CHECK(est.in_measure_d <= 0.5 + 1e-9);
    CHECK(est.in_x > 0.0);
}
