#include <catch2/catch_amalgamated.hpp>

#include "levymv/empirical_measure.hpp"
#include "levymv/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace levymv;
using Catch::Approx;

TEST_CASE("construction sorts and rejects bad input") {
    const EmpiricalMeasure mu({3.0, -1.0, 2.0});
    CHECK(mu.min() == -1.0);
    CHECK(mu.max() == 3.0);
    CHECK(mu.mean() == Approx(4.0 / 3.0));
    CHECK(mu.quantile(0.5) == 2.0);
    CHECK(mu.quantile(1.0) == 3.0);
    CHECK(mu.quantile(0.1) == -1.0);
    CHECK_THROWS(EmpiricalMeasure({}));
    CHECK_THROWS(EmpiricalMeasure({1.0, std::nan("")}));
}

TEST_CASE("d between two-point measures by hand") {
    const EmpiricalMeasure a({1.0, 0.0}), b({3.0, 1.0});
    // Sorted pairing (0, 1), (1, 3).
    CHECK(wasserstein2(a, b) == Approx(std::sqrt((1.0 + 4.0) / 2.0)));
    CHECK(wasserstein2(a, a) == 0.0);
    CHECK_THROWS(wasserstein2(a, EmpiricalMeasure({1.0})));
}

TEST_CASE("quantile distance handles unequal sizes") {
    const EmpiricalMeasure one({0.0}), two({0.0, 1.0});
    CHECK(wasserstein2_quantile(one, two) == Approx(std::sqrt(0.5)));
    // Duplicating every atom leaves the measure unchanged.
    const EmpiricalMeasure ab({-0.3, 2.0}), aabb({-0.3, -0.3, 2.0, 2.0});
    CHECK(wasserstein2_quantile(ab, aabb) == 0.0);

    std::mt19937_64 g(4);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(37), y(37);
        for (auto& v : x) v = nd(g);
        for (auto& v : y) v = 2.0 * nd(g) + 1.0;
        const EmpiricalMeasure mx(x), my(y);
        REQUIRE(wasserstein2_quantile(mx, my) == Approx(wasserstein2(mx, my)).epsilon(1e-12));
    }
}

TEST_CASE("the monotone d1 value is at most d and equal for small gaps") {
    const EmpiricalMeasure a({0.0, 0.5}), b({0.2, 0.6});
    const auto r = metric_report(a, b);
    CHECK(r.d1_upper == Approx(r.d2));
    const EmpiricalMeasure c({0.0, 10.0});
    const auto s = metric_report(a, c);
    CHECK(s.d1_upper < s.d2);
    CHECK(s.d1_upper == Approx(std::sqrt((0.0 + 1.0) / 2.0)));
}

TEST_CASE("d of empirical measures is bounded by the euclidean gap") {
    std::mt19937_64 g(8);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> size(2, 64);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto n = static_cast<std::size_t>(size(g));
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = nd(g);
            y[i] = x[i] + (trial % 2 ? 5.0 : 0.1) * nd(g);
        }
        REQUIRE(check_vasdis(x, y));
        // Equality when the pairing is already monotone.
        std::sort(x.begin(), x.end());
        std::vector<double> z = x;
        for (auto& v : z) v += 0.5;
        double euclid = 0.0;
        for (std::size_t i = 0; i < n; ++i) euclid += (x[i] - z[i]) * (x[i] - z[i]);
        REQUIRE(wasserstein2(EmpiricalMeasure(x), EmpiricalMeasure(z)) == Approx(std::sqrt(euclid / n)));
    }
    CHECK_THROWS(check_vasdis(std::vector<double>{1.0}, std::vector<double>{}));
}

TEST_CASE("smoothed density against the Gaussian formula") {
    const EmpiricalMeasure mu({0.0, 1.0});
    const double eps = 0.25;
    auto g = [&](double z) { return std::exp(-z * z / (2.0 * eps)) / std::sqrt(2.0 * std::numbers::pi * eps); };
    CHECK(smoothed_density(mu, eps, 0.3) == Approx(0.5 * (g(0.3) + g(-0.7))));
    double mass = 0.0;
    for (double x = -6.0; x < 7.0; x += 1e-3) mass += smoothed_density(mu, eps, x) * 1e-3;
    CHECK(mass == Approx(1.0).epsilon(1e-6));
    CHECK_THROWS(smoothed_density(mu, 0.0, 0.0));
}

TEST_CASE("the exact smoother matches direct summation and stays finite far out") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    std::vector<double> xs(500);
    for (auto& v : xs) v = nd(gen);
    const EmpiricalMeasure mu(xs);
    const GaussianSmoother sm(mu.samples(), 0.3, SmoothingMode::exact);
    CHECK_FALSE(sm.binned());
    for (double x : {-2.0, 0.0, 0.7, 3.0}) CHECK(sm.density(x) == Approx(smoothed_density(mu, 0.3, x)).epsilon(1e-12));
    const double far = sm.log_density(200.0);
    CHECK(std::isfinite(far));
    CHECK(far < -1000.0);
}

TEST_CASE("the binned smoother agrees with the exact one in the bulk") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    std::vector<double> xs(30000);
    for (auto& v : xs) v = nd(gen);
    std::sort(xs.begin(), xs.end());
    const GaussianSmoother exact(xs, 0.5, SmoothingMode::exact);
    const GaussianSmoother binned(xs, 0.5, SmoothingMode::binned);
    const GaussianSmoother autom(xs, 0.5);
    CHECK(binned.binned());
    CHECK(autom.binned());
    // Linear binning on a step of sqrt(eps)/32: error ~ 1e-3 of the peak.
    const double peak = exact.density(0.0);
    for (double x = -3.0; x <= 3.0; x += 0.37) REQUIRE(std::abs(binned.density(x) - exact.density(x)) <= 1e-3 * peak);
}

TEST_CASE("rule-of-thumb bandwidth") {
    std::vector<double> xs(1000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
    const EmpiricalMeasure mu(xs);
    const double h = rule_of_thumb_bandwidth(mu);
    CHECK(h > 0.0);
    // Scaling the sample scales the bandwidth.
    for (auto& v : xs) v *= 3.0;
    CHECK(rule_of_thumb_bandwidth(EmpiricalMeasure(xs)) == Approx(3.0 * h));
}

TEST_CASE("gap experiment: zero for a point law, decreasing for a Gaussian") {
    const auto point = empirical_gap_experiment([](Rng&) { return 1.5; }, 10, 5, 1, 1000);
    CHECK(point.mean == 0.0);
    auto normal = [](Rng& g) { return standard_normal(g); };
    const auto small = empirical_gap_experiment(normal, 10, 50, 2, 100000);
    const auto large = empirical_gap_experiment(normal, 1000, 50, 2, 100000);
    CHECK(small.mean > large.mean);
    CHECK(small.mean <= 4.0);
    CHECK(small.standard_error > 0.0);
    CHECK_THROWS(empirical_gap_experiment(normal, 0, 5, 1, 100));
}
