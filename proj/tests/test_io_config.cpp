#include <catch2/catch_amalgamated.hpp>

#include "levymv/config.hpp"
#include "levymv/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

using namespace levymv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "levymv_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double parse(const std::string& s) {
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

void dump(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("format_double reads back exactly") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 5000; ++i) {
        const double v = u(g) * std::pow(10.0, static_cast<int>(g() % 40) - 20);
        REQUIRE(parse(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(parse(format_double(std::numeric_limits<double>::denorm_min())) == std::numeric_limits<double>::denorm_min());
}

TEST_CASE("particle flow binary round trip") {
    MarginalFlow flow;
    flow.times = {0.0, 0.5, 1.25};
    flow.marginals = {EmpiricalMeasure({0.0, 1.0, -2.0}), EmpiricalMeasure({0.1, 1.0 / 3.0, 7.5}), EmpiricalMeasure({-1e-300, 2.0, 1e300})};
    const auto path = scratch("flow.bin");
    write_flow_binary(path, flow);
    // 48-byte header plus M (n + 1) doubles.
    CHECK(fs::file_size(path) == 48 + 3 * 4 * 8);
    const auto back = read_flow_binary(path);
    REQUIRE(back.times == flow.times);
    for (std::size_t k = 0; k < flow.size(); ++k) {
        const auto a = flow.marginals[k].samples();
        const auto b = back.marginals[k].samples();
        REQUIRE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
    const auto raw = slurp(path);
    CHECK(raw.substr(0, 4) == "LMVF");
}

TEST_CASE("density binary carries the grid geometry") {
    const auto g0 = DensityGrid::gaussian(8.0, 64, 0.0, 1.0);
    const auto g1 = DensityGrid::gaussian(8.0, 64, 0.5, 2.0);
    const std::vector<double> times{0.0, 1.0};
    const std::vector<DensityGrid> grids{g0, g1};
    const auto path = scratch("density.bin");
    write_density_binary(path, times, grids);
    const auto t = read_binary_table(path);
    CHECK(t.kind == BinaryKind::density);
    CHECK(t.n == 64);
    CHECK(t.x0 == g0.x(0));
    CHECK(t.dx == g0.dx());
    REQUIRE(t.rows.size() == 2);
    for (std::size_t j = 0; j < 64; ++j) REQUIRE(t.rows[1][j] == g1.values()[j]);
    CHECK_THROWS(read_flow_binary(path));
}

TEST_CASE("damaged binary files are rejected") {
    MarginalFlow flow;
    flow.times = {0.0, 1.0};
    flow.marginals = {EmpiricalMeasure({1.0, 2.0}), EmpiricalMeasure({3.0, 4.0})};
    const auto good = scratch("good.bin");
    write_flow_binary(good, flow);
    auto bytes = slurp(good);

    const auto bad_magic = scratch("bad_magic.bin");
    auto copy = bytes;
    copy[0] = 'X';
    dump(bad_magic, copy);
    CHECK_THROWS_WITH(read_binary_table(bad_magic), Catch::Matchers::ContainsSubstring("magic"));

    const auto truncated = scratch("truncated.bin");
    dump(truncated, bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_WITH(read_binary_table(truncated), Catch::Matchers::ContainsSubstring("truncated"));

    const auto version = scratch("version.bin");
    copy = bytes;
    copy[4] = 9;
    dump(version, copy);
    CHECK_THROWS_WITH(read_binary_table(version), Catch::Matchers::ContainsSubstring("version"));

    CHECK_THROWS(read_binary_table(scratch("does_not_exist.bin")));
}

TEST_CASE("flow CSV layout") {
    MarginalFlow flow;
    flow.times = {0.0, 0.25};
    flow.marginals = {EmpiricalMeasure({2.0, 1.0}), EmpiricalMeasure({0.5, 0.1})};
    const auto path = scratch("flow.csv");
    write_flow_csv(path, flow);
    CHECK(slurp(path) == "time,x0,x1\n0,1,2\n0.25,0.1,0.5\n");
    CHECK_THROWS(write_two_column(scratch("x.csv"), "a", "b", std::vector<double>{1.0}, std::vector<double>{}));
}

TEST_CASE("sample files: header, comments, blanks") {
    const auto path = scratch("samples.txt");
    dump(path, "x\n# comment\n1.5\n\n  -2e-3 \n3,\n");
    CHECK(read_samples(path) == std::vector<double>{1.5, -2e-3, 3.0});
    dump(path, "1\nfoo\n");
    CHECK_THROWS_WITH(read_samples(path), Catch::Matchers::ContainsSubstring("line 2"));
    dump(path, "# nothing\n");
    CHECK_THROWS(read_samples(path));
}

TEST_CASE("driver specs survive a JSON round trip") {
    const json stable = {{"type", "stable"}, {"alpha", 1.3}, {"scale", 0.7}};
    const auto d = driver_from_json(Section(stable, "driver"));
    CHECK(to_json(d) == stable);

    const json triplet = {{"type", "triplet"},
                          {"gaussian_a", 0.2},
                          {"drift_b", -0.1},
                          {"small_jumps", {{"type", "power_law"}, {"K", 0.5}, {"alpha", 1.2}}},
                          {"big_jumps", {{"atoms", {{{"amplitude", 2.0}, {"rate", 0.3}}}}, {"tail", {{"K", 0.1}, {"alpha", 1.5}}}}},
                          {"delta", 0.05},
                          {"scheme", "drop"}};
    const auto t = driver_from_json(Section(triplet, "driver"));
    const auto again = to_json(t);
    CHECK(again == triplet);
    CHECK(to_json(driver_from_json(Section(again, "driver"))) == again);
}

TEST_CASE("coefficient and initial law round trips") {
    for (const json& j : {json{{"type", "constant"}, {"value", 2.0}},
                          json{{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 1.0}, {"c1", 0.25}}}},
                          json{{"type", "linear"}, {"kernel", {{"type", "lorentzian"}, {"c0", 1.0}, {"c1", -0.5}}}},
                          json{{"type", "smoothed_density_power"}, {"eps", 0.3}, {"s", 0.5}}})
        CHECK(to_json(sigma_from_json(Section(j, "sigma"))) == j);
    for (const json& j : {json{{"type", "point"}, {"x", 0.5}}, json{{"type", "gaussian"}, {"mean", -1.0}, {"sd", 2.0}},
                          json{{"type", "uniform"}, {"lo", -1.0}, {"hi", 3.0}}})
        CHECK(to_json(initial_from_json(Section(j, "initial"))) == j);
}

TEST_CASE("config errors name the offending path") {
    using Catch::Matchers::ContainsSubstring;
    CHECK_THROWS_WITH(driver_from_json(Section(json{{"type", "stable"}, {"alfa", 1.0}}, "driver")), ContainsSubstring("driver.alfa: unknown key"));
    CHECK_THROWS_WITH(driver_from_json(Section(json{{"type", "stable"}, {"alpha", "1.5"}}, "driver")), ContainsSubstring("driver.alpha: expected a number"));
    CHECK_THROWS_AS(driver_from_json(Section(json{{"type", "stable"}, {"alpha", 2.5}}, "driver")), ConfigError);
    CHECK_THROWS_WITH(driver_from_json(Section(json{{"type", "gamma"}}, "driver")), ContainsSubstring("driver.type"));
    CHECK_THROWS_WITH(sigma_from_json(Section(json{{"type", "linear"}, {"kernel", {{"type", "cosine"}}}}, "sigma")), ContainsSubstring("sigma.kernel.type"));
    // Degenerate but bounded kernels load; the commands report nondegeneracy.
    CHECK_FALSE(is_nondegenerate(sigma_from_json(Section(json{{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 0.5}, {"c1", 1.0}}}}, "sigma"))));
    CHECK_THROWS_AS(sigma_from_json(Section(json{{"type", "smoothed_density_power"}, {"eps", -1.0}}, "sigma")), ConfigError);
    CHECK_THROWS_WITH(initial_from_json(Section(json{{"type", "uniform"}, {"lo", 0.0}}, "initial")), ContainsSubstring("initial.hi: missing"));
    CHECK_THROWS_WITH(Section(json::array(), "x"), ContainsSubstring("expected an object"));
    CHECK_THROWS_WITH(simulation_from_json(json{{"simulation", {{"n", -3}}}}), ContainsSubstring("simulation.n"));
    CHECK_THROWS_WITH(simulation_from_json(json{{"simulation", {{"smoothing", "fast"}}}}), ContainsSubstring("simulation.smoothing"));
    CHECK_THROWS_AS(simulation_from_json(json{{"simulation", {{"dt", 0.0}}}}), ConfigError);
    CHECK_THROWS_AS(fp_options_from_json(Section(json{{"c_stab", 1.5}}, "pde")), ConfigError);
    CHECK_THROWS_AS(fp_options_from_json(Section(json{{"boundary_policy", "ignore"}}, "pde")), ConfigError);
}

TEST_CASE("sample-file initial laws resolve against the config directory") {
    const auto dir = scratch("cfgdir");
    fs::create_directories(dir);
    dump(dir / "x0.txt", "0.5\n1.5\n");
    const json j = {{"type", "file"}, {"path", "x0.txt"}};
    const auto law = initial_from_json(Section(j, "initial"), dir);
    const auto& s = std::get<SampleLaw>(law);
    CHECK(s.values == std::vector<double>{0.5, 1.5});
    CHECK(to_json(law) == j);
    CHECK_THROWS_AS(initial_from_json(Section(json{{"type", "file"}, {"path", "missing.txt"}}, "initial"), dir), ConfigError);
}

TEST_CASE("simulation settings and defaults") {
    const json root = {{"seed", 42},
                       {"driver", {{"type", "stable"}, {"alpha", 1.7}, {"scale", 1.0}}},
                       {"truncation", 5.0},
                       {"sigma", {{"type", "constant"}, {"value", 0.5}}},
                       {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}},
                       {"simulation", {{"n", 300}, {"dt", 0.03}, {"T", 1.0}, {"smoothing", "exact"}}}};
    const auto cfg = simulation_from_json(root);
    CHECK(cfg.seed == 42);
    CHECK(cfg.n_particles == 300);
    CHECK(cfg.truncation == 5.0);
    CHECK(cfg.smoothing == SmoothingMode::exact);
    // 1 / 0.03 rounds to 33 steps.
    CHECK(cfg.steps() == 33);
    CHECK(cfg.resolved_dt() == 1.0 / 33.0);
    const auto out = to_json(cfg);
    CHECK(out["simulation"]["steps"] == 33);
    CHECK(out["driver"] == root["driver"]);

    const auto defaults = simulation_from_json(json::object());
    CHECK(defaults.n_particles == 1000);
    CHECK(defaults.seed == 1);
    CHECK_FALSE(defaults.truncation.has_value());
    CHECK(to_json(defaults)["truncation"].is_null());
}
