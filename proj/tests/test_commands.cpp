#include <catch2/catch_amalgamated.hpp>

#include "commands.hpp"
#include "presets.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace levymv;
using namespace levymv::cli;
namespace fs = std::filesystem;

namespace {

RunContext context(const std::string& name, std::size_t threads = 1) {
    RunContext ctx;
    ctx.out_dir = fs::temp_directory_path() / "levymv_command_tests" / name;
    fs::remove_all(ctx.out_dir);
    ctx.threads = threads;
    return ctx;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json preset(const std::string& name) { return presets().at(name).config; }

json small_simulation() {
    return {{"seed", 9},
            {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
            {"sigma", {{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 1.0}, {"c1", 0.5}}}}},
            {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}},
            {"simulation", {{"n", 300}, {"dt", 0.05}, {"T", 0.5}, {"export", "both"}}}};
}

} // namespace

TEST_CASE("simulate writes its artifacts") {
    const auto ctx = context("simulate");
    const auto r = run_command("simulate", small_simulation(), ctx);
    CHECK(r.pass);
    CHECK(r.summary["cf_test"] == "not applicable");
    for (const char* f : {"flow.bin", "flow.csv", "moments.csv", "kde_final.csv", "summary.json", "config.resolved.json"})
        CHECK(fs::exists(ctx.out_dir / f));
    const auto flow = read_flow_binary(ctx.out_dir / "flow.bin");
    CHECK(flow.size() == 11);
    CHECK(flow.sample_count() == 300);
    const auto summary = json::parse(slurp(ctx.out_dir / "summary.json"));
    CHECK(summary["pass"] == true);
    CHECK(summary["steps"] == 10);
}

TEST_CASE("simulate output does not depend on the thread count") {
    const auto a = context("threads_a", 1), b = context("threads_b", 3);
    run_command("simulate", small_simulation(), a);
    run_command("simulate", small_simulation(), b);
    CHECK(slurp(a.out_dir / "flow.bin") == slurp(b.out_dir / "flow.bin"));
    CHECK(slurp(a.out_dir / "flow.csv") == slurp(b.out_dir / "flow.csv"));
}

TEST_CASE("a resolved config replays the same run") {
    const auto a = context("replay_a");
    run_command("simulate", small_simulation(), a);
    auto resolved = json::parse(slurp(a.out_dir / "config.resolved.json"));
    CHECK(resolved["command"] == "simulate");
    resolved.erase("command");
    const auto b = context("replay_b");
    run_command("simulate", resolved, b);
    CHECK(slurp(a.out_dir / "flow.bin") == slurp(b.out_dir / "flow.bin"));
}

TEST_CASE("constant-coefficient simulation matches the stable law") {
    auto cfg = preset("simulate-constant");
    cfg["simulation"]["n"] = 20000;
    const auto r = run_command("simulate", cfg, context("constant"));
    CHECK(r.pass);
    CHECK(r.summary["cf_test"]["pass"] == true);
}

TEST_CASE("pde solve against the exact solution") {
    const auto ctx = context("pde");
    auto cfg = preset("pde-linear");
    cfg["pde"]["T"] = 0.1;
    cfg["pde"]["snapshots"] = {0.0, 0.05, 0.1};
    const auto r = run_command("pde", cfg, ctx);
    INFO(r.summary.dump(2));
    CHECK(r.pass);
    for (const char* f : {"density.bin", "mass.csv", "boundary.csv", "snapshot_0.csv", "snapshot_2.csv"}) CHECK(fs::exists(ctx.out_dir / f));
    const auto t = read_binary_table(ctx.out_dir / "density.bin");
    CHECK(t.times == std::vector<double>{0.0, 0.05, 0.1});
    CHECK(r.summary["max_error_vs_exact"].get<double>() <= 1e-6);

    auto resolved = json::parse(slurp(ctx.out_dir / "config.resolved.json"));
    resolved.erase("command");
    const auto again = context("pde_again");
    run_command("pde", resolved, again);
    CHECK(slurp(ctx.out_dir / "density.bin") == slurp(again.out_dir / "density.bin"));
}

TEST_CASE("a box too small for the tails fails the run with a diagnostic") {
    auto cfg = preset("pde-linear");
    cfg["pde"]["L"] = 8.0;
    cfg["pde"]["m"] = 256;
    const auto r = run_command("pde", cfg, context("pde_small_box"));
    CHECK_FALSE(r.pass);
    CHECK(r.summary["status"] == "error");
}

TEST_CASE("chaos-rate: degenerate constant case and a small interacting case") {
    const auto r = run_command("chaos-rate", preset("chaos-constant"), context("chaos_constant"));
    CHECK(r.pass);
    CHECK(r.summary["status"] == "degenerate: all-zero");
    CHECK(r.summary["slope"].is_null());

    const auto a = context("chaos_small_1", 1), b = context("chaos_small_4", 4);
    const auto s = run_command("chaos-rate", preset("chaos-small"), a);
    run_command("chaos-rate", preset("chaos-small"), b);
    CHECK(s.pass);
    CHECK(s.summary["status"] == "ok");
    CHECK(slurp(a.out_dir / "chaos_rate.csv") == slurp(b.out_dir / "chaos_rate.csv"));
}

TEST_CASE("sampler and H1 presets pass") {
    CHECK(run_command("validate-sampler", preset("sampler-gaussian"), context("sampler")).pass);
    const auto ctx = context("h1");
    CHECK(run_command("check-h1", preset("AC10"), ctx).pass);
    CHECK(fs::exists(ctx.out_dir / "k_eps.csv"));
}

TEST_CASE("configuration errors") {
    const auto ctx = context("errors");
    CHECK_THROWS_AS(run_command("simulate", json::object(), ctx), ConfigError);
    CHECK_THROWS_AS(run_command("simulate", json::array(), ctx), ConfigError);
    CHECK_THROWS_AS(run_command("simulate", json{{"simulaton", {{"n", 10}}}}, ctx), ConfigError);
    CHECK_THROWS_AS(run_command("simulate", json{{"simulation", {{"export", "xml"}}}}, ctx), ConfigError);
    CHECK_THROWS_AS(run_command("pde", json{{"pde", {{"task", "explode"}}}}, ctx), ConfigError);
    CHECK_THROWS_AS(run_command("launch", json{{"seed", 1}}, ctx), ConfigError);
    // Untruncated stable jumps have no second moment.
    auto chaos = preset("chaos-small");
    chaos.erase("truncation");
    CHECK_THROWS_WITH(run_command("chaos-rate", chaos, ctx), Catch::Matchers::ContainsSubstring("square integrable"));
    // compare needs the particle and PDE operators to agree.
    auto cmp = preset("AC8");
    cmp["pde"]["alpha"] = 1.4;
    CHECK_THROWS_AS(run_command("compare", cmp, ctx), ConfigError);
}

TEST_CASE("configs directory mirrors the built-in presets") {
    const fs::path dir = fs::path(LEVYMV_SOURCE_DIR) / "configs";
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        ++files;
        const auto name = entry.path().stem().string();
        INFO(name);
        REQUIRE(presets().count(name) == 1);
        auto doc = json::parse(slurp(entry.path()));
        CHECK(doc["command"] == presets().at(name).command);
        doc.erase("command");
        CHECK(doc == presets().at(name).config);
    }
    CHECK(files == presets().size());
}
