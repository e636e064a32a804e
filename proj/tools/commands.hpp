#pragma once

// The batch commands behind the levymv executable. Each command reads a JSON
// config, writes its artifacts plus config.resolved.json and summary.json into
// the output directory, and reports whether every internal check passed.

#include "levymv/config.hpp"
#include "levymv/levymv.hpp"

#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <string>

namespace levymv::cli {

struct RunContext {
    std::filesystem::path out_dir = "out";
    std::filesystem::path base_dir; ///< for relative paths inside the config
    std::size_t threads = 0;
};

struct CommandResult {
    json summary;
    bool pass = false;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"simulate", "pde", "chaos-rate", "compare", "validate-sampler", "check-h1"};
    return names;
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline void check_top_level(const json& root) {
    if (!root.is_object()) throw ConfigError("config: expected a JSON object");
    if (root.empty()) throw ConfigError("config: empty configuration");
    Section(root, "").allow({"description", "seed", "driver", "truncation", "sigma", "initial", "simulation", "pde", "chaos", "compare",
                             "sampler", "h1"});
}

inline json stats_row(std::size_t n, double mean, double se) { return {{"n", n}, {"mean", mean}, {"standard_error", se}}; }

struct PdeSetup {
    double half_width = 64.0;
    std::size_t points = 4096;
    FractionalParams params;
    double horizon = 1.0;
    double dt = 0.0; ///< 0: stability-limited
    double initial_mean = 0.0;
    double initial_var = 1.0;
    std::vector<double> snapshots;
    FpOptions options;
};

/// alpha and k_prime default to the stable driver's index and scale; explicit
/// values must agree with a stable driver when `must_match` is set.
inline PdeSetup pde_from_json(const json& root, bool must_match) {
    Section r(root, "");
    PdeSetup p;
    std::optional<StableDriverSpec> stable;
    if (r.has("driver")) {
        const auto d = driver_from_json(r.child("driver"));
        if (const auto* s = std::get_if<StableDriverSpec>(&d)) stable = *s;
    }
    if (stable) p.params = {stable->alpha, stable->scale};
    if (!r.has("pde")) {
        if (!stable) throw ConfigError("pde: missing (and no stable driver to infer alpha from)");
        return p;
    }
    const auto s = r.child("pde");
    s.allow({"task", "L", "m", "alpha", "k_prime", "T", "dt", "initial", "snapshots", "c_stab", "scheme", "boundary_policy", "boundary_tol",
             "cases", "tolerance", "ratio_range", "exact_tolerance", "positivity_rel_tol", "mass_step_tol"});
    p.half_width = s.number("L", p.half_width);
    p.points = s.count("m", p.points);
    if (s.has("alpha")) p.params.alpha = s.number("alpha");
    if (s.has("k_prime")) p.params.k_prime = s.number("k_prime");
    if (must_match) {
        if (!stable || r.has("truncation")) throw ConfigError("pde: the particle driver must be an untruncated stable driver to match the PDE");
        if (p.params.alpha != stable->alpha) throw ConfigError(s.at("alpha") + ": differs from the driver's alpha");
        if (p.params.k_prime != stable->scale) throw ConfigError(s.at("k_prime") + ": differs from the driver's scale");
    }
    p.horizon = s.number("T", p.horizon);
    p.dt = s.number("dt", 0.0);
    if (s.has("initial")) {
        const auto i = s.child("initial");
        i.allow({"type", "mean", "var"});
        if (i.text("type", "gaussian") != "gaussian") throw ConfigError(i.at("type") + ": only gaussian initial densities are supported");
        p.initial_mean = i.number("mean", 0.0);
        p.initial_var = i.number("var", 1.0);
    }
    p.snapshots = s.numbers("snapshots", {});
    p.options = fp_options_from_json(s);
    levymv::detail::rethrow_as_config("pde", [&] {
        p.params.validate();
        DensityGrid::gaussian(p.half_width, p.points, 0.0, 1.0);
        return 0;
    });
    return p;
}

inline json to_json(const PdeSetup& p) {
    json j{{"L", p.half_width}, {"m", p.points}, {"alpha", p.params.alpha}, {"k_prime", p.params.k_prime}, {"T", p.horizon}, {"dt", p.dt},
           {"initial", {{"type", "gaussian"}, {"mean", p.initial_mean}, {"var", p.initial_var}}}, {"snapshots", p.snapshots}};
    j.update(levymv::to_json(p.options));
    return j;
}

inline std::vector<double> sup_abs_diff(std::span<const double> a, std::span<const double> b, double* out_max) {
    std::vector<double> d(a.size());
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        d[j] = std::abs(a[j] - b[j]);
        m = std::max(m, d[j]);
    }
    *out_max = m;
    return d;
}

inline TestFunction test_function_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(where + ": expected a non-empty array of bumps");
    TestFunction f;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Section b(arr[i], where + "[" + std::to_string(i) + "]");
        b.allow({"amplitude", "center", "width"});
        f.bumps.push_back({b.number("amplitude", 1.0), b.number("center", 0.0), b.number("width")});
        if (!(f.bumps.back().width > 0.0)) throw ConfigError(b.at("width") + ": must be positive");
    }
    return f;
}

inline json to_json(const TestFunction& f) {
    json arr = json::array();
    for (const auto& b : f.bumps) arr.push_back({{"amplitude", b.amplitude}, {"center", b.center}, {"width", b.width}});
    return arr;
}

/// Runs `body` and turns library exceptions (other than config errors) into
/// a failed summary with the diagnostic.
template <class F>
CommandResult guarded(json resolved, F&& body) {
    try {
        return body(resolved);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        CommandResult r;
        r.summary = {{"status", "error"}, {"error", e.what()}, {"config", resolved}};
        r.pass = false;
        return r;
    }
}

inline void finish(const RunContext& ctx, const std::string& command, const json& resolved, CommandResult& r) {
    json cfg{{"command", command}};
    cfg.update(resolved);
    write_json(ctx.out_dir / "config.resolved.json", cfg);
    r.summary["pass"] = r.pass;
    if (!r.summary.contains("config")) r.summary["config"] = cfg;
    write_json(ctx.out_dir / "summary.json", r.summary);
}

} // namespace detail

// --- simulate -----------------------------------------------------------------

inline CommandResult cmd_simulate(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    auto cfg = simulation_from_json(root, ctx.base_dir);
    cfg.threads = ctx.threads;
    std::string export_format = "binary";
    if (root.contains("simulation")) export_format = Section(root.at("simulation"), "simulation").text("export", "binary");
    if (export_format != "binary" && export_format != "csv" && export_format != "both" && export_format != "none")
        throw ConfigError("simulation.export: expected binary, csv, both or none");
    json resolved = to_json(cfg);
    resolved["simulation"]["export"] = export_format;
    std::filesystem::create_directories(ctx.out_dir);

    CommandResult r = detail::guarded(resolved, [&](const json&) {
        const auto flow = simulate(cfg);
        if (export_format == "binary" || export_format == "both") write_flow_binary(ctx.out_dir / "flow.bin", flow);
        if (export_format == "csv" || export_format == "both") write_flow_csv(ctx.out_dir / "flow.csv", flow);

        CsvWriter moments(ctx.out_dir / "moments.csv");
        moments.header({"time", "mean", "second_moment", "median"});
        for (std::size_t k = 0; k < flow.size(); ++k)
            moments.row({flow.times[k], flow.marginals[k].mean(), second_moment(flow.marginals[k]), flow.marginals[k].quantile(0.5)});

        const auto& last = flow.marginals.back();
        const double h = rule_of_thumb_bandwidth(last);
        const GaussianSmoother kde(last.samples(), h * h);
        const double lo = last.quantile(0.01) - 3.0 * h, hi = last.quantile(0.99) + 3.0 * h;
        std::vector<double> xs(401), ps(401);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            xs[i] = lo + (hi - lo) * static_cast<double>(i) / 400.0;
            ps[i] = kde.density(xs[i]);
        }
        write_two_column(ctx.out_dir / "kde_final.csv", "x", "density", xs, ps);

        CommandResult res;
        res.pass = true;
        res.summary = {{"status", "ok"},
                       {"n", cfg.n_particles},
                       {"steps", cfg.steps()},
                       {"dt", cfg.resolved_dt()},
                       {"final_mean", last.mean()},
                       {"final_second_moment", second_moment(last)},
                       {"kde_bandwidth", h}};

        // With a constant coefficient, an exact stable driver and a point
        // start, X_T - x0 = c Z_T exactly, with CF exp(-scale T |c xi|^alpha).
        const auto* constant = std::get_if<ConstantCoefficient>(&cfg.sigma);
        const auto* stable = std::get_if<StableDriverSpec>(&cfg.driver);
        const auto* point = std::get_if<PointMass>(&cfg.initial_law);
        if (constant && stable && point && !cfg.truncation) {
            const double tol = 5.0 / std::sqrt(static_cast<double>(cfg.n_particles));
            double worst = 0.0;
            json rows = json::array();
            for (double xi : {0.25, 0.5, 1.0, 2.0, 4.0}) {
                double re = 0.0, im = 0.0;
                for (double x : last.samples()) {
                    re += std::cos(xi * (x - point->x));
                    im += std::sin(xi * (x - point->x));
                }
                re /= static_cast<double>(last.size());
                im /= static_cast<double>(last.size());
                const double target = std::exp(-stable->scale * cfg.horizon * std::pow(std::abs(constant->value * xi), stable->alpha));
                const double err = std::abs(std::complex<double>(re - target, im));
                worst = std::max(worst, err);
                rows.push_back({{"xi", xi}, {"empirical_real", re}, {"empirical_imag", im}, {"target", target}, {"error", err}});
            }
            const bool ok = worst <= tol;
            res.summary["cf_test"] = {{"max_error", worst}, {"tolerance", tol}, {"rows", rows}, {"pass", ok}};
            res.pass = ok;
        } else {
            res.summary["cf_test"] = "not applicable";
        }
        return res;
    });
    detail::finish(ctx, "simulate", resolved, r);
    return r;
}

// --- pde ----------------------------------------------------------------------

namespace detail {

inline CommandResult pde_solve(const json& root, const RunContext& ctx, json& resolved) {
    const auto p = pde_from_json(root, false);
    const CoefficientSpec sigma = root.contains("sigma") ? sigma_from_json(Section(root, "").child("sigma")) : CoefficientSpec{};
    resolved["sigma"] = levymv::to_json(sigma);
    resolved["pde"] = to_json(p);
    resolved["pde"]["task"] = "solve";
    return guarded(resolved, [&](const json&) {
        const auto p0 = DensityGrid::gaussian(p.half_width, p.points, p.initial_mean, p.initial_var);
        const auto res = solve_fp(p0, p.horizon, p.dt, sigma, p.params, p.snapshots, p.options);

        std::vector<double> times;
        std::vector<DensityGrid> grids;
        for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
            const auto& s = res.snapshots[i];
            times.push_back(s.time);
            grids.push_back(s.density);
            std::vector<double> xs(s.density.size());
            for (std::size_t j = 0; j < xs.size(); ++j) xs[j] = s.density.x(j);
            write_two_column(ctx.out_dir / ("snapshot_" + std::to_string(i) + ".csv"), "x", "density", xs, s.density.values());
        }
        write_density_binary(ctx.out_dir / "density.bin", times, grids);

        CsvWriter mass(ctx.out_dir / "mass.csv");
        mass.header({"time", "mass", "drift"});
        double max_drift = 0.0;
        for (std::size_t k = 0; k < res.mass_log.size(); ++k) {
            mass.row({res.step_times[k], res.mass_log[k], res.mass_log[k] - 1.0});
            max_drift = std::max(max_drift, std::abs(res.mass_log[k] - 1.0));
        }
        CsvWriter boundary(ctx.out_dir / "boundary.csv");
        boundary.header({"time", "boundary_density"});
        for (std::size_t k = 0; k < res.boundary_log.size(); ++k) boundary.row({res.step_times[k], res.boundary_log[k]});

        CommandResult r;
        const bool mass_ok = max_drift <= 1e-9;
        r.summary = {{"status", "ok"},
                     {"task", "solve"},
                     {"steps", res.steps},
                     {"dt", res.dt},
                     {"max_mass_drift", max_drift},
                     {"mass_ok", mass_ok},
                     {"max_boundary_density", res.max_boundary_density},
                     {"boundary_exceeded", res.boundary_exceeded},
                     {"snapshot_times", times}};
        r.pass = mass_ok && !res.boundary_exceeded;
        if (const auto* c = std::get_if<ConstantCoefficient>(&sigma)) {
            FractionalParams eff = p.params;
            double max_err = 0.0;
            if (c->value == 0.0) {
                sup_abs_diff(res.snapshots.back().density.values(), p0.values(), &max_err);
            } else {
                eff.k_prime *= std::pow(std::abs(c->value), p.params.alpha);
                const auto exact = solve_linear_exact(p0, p.horizon, eff);
                sup_abs_diff(res.snapshots.back().density.values(), exact.values(), &max_err);
            }
            const double tol = Section(root.at("pde"), "pde").number("exact_tolerance", 1e-6);
            r.summary["max_error_vs_exact"] = max_err;
            r.summary["exact_tolerance"] = tol;
            r.pass = r.pass && max_err <= tol;
        }
        return r;
    });
}

inline CommandResult pde_linear_oracle(const json& root, const RunContext& ctx, json& resolved) {
    const auto base = pde_from_json(root, false);
    const Section s(root.at("pde"), "pde");
    const CoefficientSpec sigma = root.contains("sigma") ? sigma_from_json(Section(root, "").child("sigma")) : CoefficientSpec{};
    const auto* c = std::get_if<ConstantCoefficient>(&sigma);
    if (!c || c->value == 0.0) throw ConfigError("sigma: the linear oracle needs a nonzero constant coefficient");
    const double tol = s.number("tolerance", 1e-6);
    const auto range = s.numbers("ratio_range", {12.0, 20.0});
    if (range.size() != 2) throw ConfigError("pde.ratio_range: expected [low, high]");
    if (!s.has("cases")) throw ConfigError("pde.cases: missing");
    const auto& cases = s.raw("cases");
    if (!cases.is_array() || cases.empty()) throw ConfigError("pde.cases: expected a non-empty array");

    struct Case {
        double alpha, L, dt;
        std::size_t m;
    };
    std::vector<Case> list;
    json resolved_cases = json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        Section cs(cases[i], "pde.cases[" + std::to_string(i) + "]");
        cs.allow({"alpha", "L", "m", "dt"});
        list.push_back({cs.number("alpha"), cs.number("L", base.half_width), cs.number("dt"), cs.count("m", base.points)});
        resolved_cases.push_back({{"alpha", list.back().alpha}, {"L", list.back().L}, {"m", list.back().m}, {"dt", list.back().dt}});
    }
    resolved["sigma"] = levymv::to_json(sigma);
    resolved["pde"] = to_json(base);
    resolved["pde"]["task"] = "linear-oracle";
    resolved["pde"]["cases"] = resolved_cases;
    resolved["pde"]["tolerance"] = tol;
    resolved["pde"]["ratio_range"] = range;

    return guarded(resolved, [&](const json&) {
        CommandResult r;
        r.pass = true;
        json rows = json::array();
        CsvWriter csv(ctx.out_dir / "linear_oracle.csv");
        csv.header({"alpha", "dt", "sup_error", "dt_half", "sup_error_half", "ratio", "max_mass_drift", "max_boundary_density"});
        for (const auto& cs : list) {
            FractionalParams params{cs.alpha, base.params.k_prime};
            const auto p0 = DensityGrid::gaussian(cs.L, cs.m, base.initial_mean, base.initial_var);
            FractionalParams eff = params;
            eff.k_prime *= std::pow(std::abs(c->value), cs.alpha);
            const auto exact = solve_linear_exact(p0, base.horizon, eff);
            FpOptions opt = base.options;
            const auto coarse = solve_fp(p0, base.horizon, cs.dt, sigma, params, {}, opt);
            const auto fine = solve_fp(p0, base.horizon, 0.5 * cs.dt, sigma, params, {}, opt);
            double e1 = 0.0, e2 = 0.0;
            sup_abs_diff(coarse.snapshots.back().density.values(), exact.values(), &e1);
            sup_abs_diff(fine.snapshots.back().density.values(), exact.values(), &e2);
            const double ratio = e1 / e2;
            double drift = 0.0;
            for (double m : coarse.mass_log) drift = std::max(drift, std::abs(m - 1.0));
            for (double m : fine.mass_log) drift = std::max(drift, std::abs(m - 1.0));
            const double boundary = std::max(coarse.max_boundary_density, fine.max_boundary_density);
            const bool ok = e1 <= tol && e2 <= tol && ratio >= range[0] && ratio <= range[1] && drift <= 1e-9;
            r.pass = r.pass && ok;
            csv.row({cs.alpha, coarse.dt, e1, fine.dt, e2, ratio, drift, boundary});
            rows.push_back({{"alpha", cs.alpha}, {"dt", coarse.dt}, {"sup_error", e1}, {"dt_half", fine.dt}, {"sup_error_half", e2},
                            {"ratio", ratio}, {"max_mass_drift", drift}, {"max_boundary_density", boundary}, {"pass", ok}});
        }
        r.summary = {{"status", "ok"}, {"task", "linear-oracle"}, {"cases", rows}};
        return r;
    });
}

inline CommandResult pde_adjoint(const json& root, const RunContext& ctx, json& resolved) {
    const auto base = pde_from_json(root, false);
    const Section s(root.at("pde"), "pde");
    const double tol = s.number("tolerance", 1e-4);
    if (!s.has("cases")) throw ConfigError("pde.cases: missing");
    const auto& cases = s.raw("cases");
    if (!cases.is_array() || cases.empty()) throw ConfigError("pde.cases: expected a non-empty array");
    struct Case {
        CoefficientSpec sigma;
        double nu_mean, nu_var;
        TestFunction phi, psi;
    };
    std::vector<Case> list;
    json resolved_cases = json::array();
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string where = "pde.cases[" + std::to_string(i) + "]";
        Section cs(cases[i], where);
        cs.allow({"sigma", "nu", "phi", "psi"});
        Case c{sigma_from_json(cs.child("sigma")), 0.0, 1.0, test_function_from_json(cs.raw("phi"), cs.at("phi")),
               test_function_from_json(cs.raw("psi"), cs.at("psi"))};
        if (cs.has("nu")) {
            const auto nu = cs.child("nu");
            nu.allow({"mean", "var"});
            c.nu_mean = nu.number("mean", 0.0);
            c.nu_var = nu.number("var", 1.0);
        }
        resolved_cases.push_back({{"sigma", levymv::to_json(c.sigma)},
                                  {"nu", {{"mean", c.nu_mean}, {"var", c.nu_var}}},
                                  {"phi", to_json(c.phi)},
                                  {"psi", to_json(c.psi)}});
        list.push_back(std::move(c));
    }
    resolved["pde"] = {{"task", "adjoint"}, {"L", base.half_width}, {"m", base.points}, {"alpha", base.params.alpha},
                       {"k_prime", base.params.k_prime}, {"tolerance", tol}, {"cases", resolved_cases}};
    return guarded(resolved, [&](const json&) {
        CommandResult r;
        r.pass = true;
        json rows = json::array();
        CsvWriter csv(ctx.out_dir / "adjoint.csv");
        csv.header({"case", "lhs", "rhs", "relative_error"});
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& c = list[i];
            const auto nu = DensityGrid::gaussian(base.half_width, base.points, c.nu_mean, c.nu_var);
            const auto rep = adjoint_identity_check(c.sigma, nu, c.phi, c.psi, base.params);
            const bool ok = rep.relative_error <= tol;
            r.pass = r.pass && ok;
            csv.row({static_cast<double>(i), rep.lhs, rep.rhs, rep.relative_error});
            rows.push_back({{"case", i}, {"lhs", rep.lhs}, {"rhs", rep.rhs}, {"relative_error", rep.relative_error}, {"pass", ok}});
        }
        r.summary = {{"status", "ok"}, {"task", "adjoint"}, {"tolerance", tol}, {"cases", rows}};
        return r;
    });
}

} // namespace detail

inline CommandResult cmd_pde(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    std::string task = "solve";
    if (root.contains("pde")) task = Section(root.at("pde"), "pde").text("task", "solve");
    json resolved;
    resolved["seed"] = root.value("seed", 1);
    if (root.contains("driver")) resolved["driver"] = to_json(driver_from_json(Section(root, "").child("driver")));
    std::filesystem::create_directories(ctx.out_dir);
    CommandResult r;
    if (task == "solve") r = detail::pde_solve(root, ctx, resolved);
    else if (task == "linear-oracle") r = detail::pde_linear_oracle(root, ctx, resolved);
    else if (task == "adjoint") r = detail::pde_adjoint(root, ctx, resolved);
    else throw ConfigError("pde.task: expected solve, linear-oracle or adjoint");
    detail::finish(ctx, "pde", resolved, r);
    return r;
}

// --- chaos-rate ---------------------------------------------------------------

inline CommandResult cmd_chaos_rate(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    ChaosConfig cc;
    cc.base = simulation_from_json(root, ctx.base_dir);
    cc.base.threads = ctx.threads;
    std::optional<double> slope_max;
    bool require_monotone = false;
    if (root.contains("chaos")) {
        const Section s(root.at("chaos"), "chaos");
        s.allow({"n_list", "reps", "n_ref", "expect_slope_max", "require_monotone"});
        cc.n_list = s.counts("n_list", cc.n_list);
        cc.reps = s.count("reps", cc.reps);
        cc.n_ref = s.count("n_ref", cc.n_ref);
        if (s.has("expect_slope_max")) slope_max = s.number("expect_slope_max");
        require_monotone = s.flag("require_monotone", false);
    }
    levymv::detail::rethrow_as_config("chaos", [&] {
        cc.validate();
        return 0;
    });
    if (!cc.base.make_sampler().square_integrable())
        throw ConfigError("chaos: the driver is not square integrable; set a truncation level or use a triplet with bounded jumps");
    json resolved = to_json(cc.base);
    resolved["chaos"] = {{"n_list", cc.n_list}, {"reps", cc.reps}, {"n_ref", cc.n_ref}, {"require_monotone", require_monotone}};
    if (slope_max) resolved["chaos"]["expect_slope_max"] = *slope_max;
    std::filesystem::create_directories(ctx.out_dir);

    CommandResult r = detail::guarded(resolved, [&](const json&) {
        const auto table = chaos_rate_experiment(cc);
        CsvWriter csv(ctx.out_dir / "chaos_rate.csv");
        csv.header({"n", "mean_sup_gap_sq", "standard_error"});
        json rows = json::array();
        for (const auto& row : table.rows) {
            csv.row({static_cast<double>(row.n), row.mean, row.standard_error});
            rows.push_back(detail::stats_row(row.n, row.mean, row.standard_error));
        }
        CommandResult res;
        const bool monotone = monotone_within_2se(table);
        res.summary = {{"status", table.status}, {"rows", rows}, {"monotone_within_2se", monotone}, {"vasdis_violations", table.vasdis_violations}};
        if (table.degenerate()) {
            res.summary["slope"] = nullptr;
            res.pass = table.status == "degenerate: all-zero" && !depends_on_measure(cc.base.sigma) && table.vasdis_violations == 0;
        } else {
            res.summary["slope"] = table.slope;
            res.summary["slope_ci95"] = {table.slope_ci_low, table.slope_ci_high};
            res.pass = table.vasdis_violations == 0 && (!slope_max || table.slope <= *slope_max) && (!require_monotone || monotone);
        }
        return res;
    });
    detail::finish(ctx, "chaos-rate", resolved, r);
    return r;
}

// --- compare ------------------------------------------------------------------

inline CommandResult cmd_compare(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    auto cfg = simulation_from_json(root, ctx.base_dir);
    cfg.threads = ctx.threads;
    const auto p = detail::pde_from_json(root, true);
    const auto* gauss = std::get_if<GaussianLaw>(&cfg.initial_law);
    if (!gauss) throw ConfigError("initial: compare needs a gaussian initial law to match the PDE");
    std::vector<std::size_t> n_list{1000, 10000};
    std::vector<double> times{cfg.horizon};
    double tol = 0.05;
    bool require_decreasing = true;
    if (root.contains("compare")) {
        const Section s(root.at("compare"), "compare");
        s.allow({"n_list", "times", "tolerance", "require_decreasing"});
        n_list = s.counts("n_list", n_list);
        times = s.numbers("times", times);
        tol = s.number("tolerance", tol);
        require_decreasing = s.flag("require_decreasing", require_decreasing);
    }
    if (n_list.empty() || !std::is_sorted(n_list.begin(), n_list.end())) throw ConfigError("compare.n_list: expected ascending counts");
    std::vector<std::size_t> snap_steps;
    for (double t : times) {
        if (!(t > 0.0 && t <= cfg.horizon * (1.0 + 1e-12))) throw ConfigError("compare.times: must lie in (0, T]");
        snap_steps.push_back(static_cast<std::size_t>(std::llround(t / cfg.resolved_dt())));
    }
    detail::PdeSetup pde = p;
    pde.horizon = cfg.horizon;
    pde.initial_mean = gauss->mean;
    pde.initial_var = gauss->sd * gauss->sd;
    pde.snapshots.clear();
    for (std::size_t k : snap_steps) pde.snapshots.push_back(cfg.resolved_dt() * static_cast<double>(k));

    json resolved = to_json(cfg);
    resolved["pde"] = detail::to_json(pde);
    resolved["compare"] = {{"n_list", n_list}, {"times", pde.snapshots}, {"tolerance", tol}, {"require_decreasing", require_decreasing}};
    std::filesystem::create_directories(ctx.out_dir);

    CommandResult r = detail::guarded(resolved, [&](const json&) {
        const auto p0 = DensityGrid::gaussian(pde.half_width, pde.points, pde.initial_mean, pde.initial_var);
        const auto sol = solve_fp(p0, pde.horizon, pde.dt, cfg.sigma, pde.params, pde.snapshots, pde.options);
        const auto density_at = [&](double t) -> const DensityGrid& {
            for (const auto& s : sol.snapshots)
                if (std::abs(s.time - t) < 1e-9) return s.density;
            throw std::logic_error("compare: missing PDE snapshot");
        };
        std::vector<double> xs(p0.size());
        for (std::size_t j = 0; j < xs.size(); ++j) xs[j] = p0.x(j);
        write_two_column(ctx.out_dir / "pde_final.csv", "x", "density", xs, sol.snapshots.back().density.values());

        CsvWriter csv(ctx.out_dir / "compare.csv");
        csv.header({"n", "time", "l1", "mass_outside_domain", "bandwidth"});
        json rows = json::array();
        std::vector<double> final_l1;
        const DriverSampler sampler = cfg.make_sampler();
        for (std::size_t n : n_list) {
            SimulationConfig run = cfg;
            run.n_particles = n;
            ParticleState state{0.0, initial_positions(run)};
            std::size_t next = 0;
            for (std::size_t k = 1; k <= run.steps() && next < snap_steps.size(); ++k) {
                state = step_interacting(state, run, sampler);
                while (next < snap_steps.size() && snap_steps[next] == k) {
                    const EmpiricalMeasure mu(state.positions);
                    const double h = rule_of_thumb_bandwidth(mu);
                    const GaussianSmoother kde(mu.samples(), h * h);
                    const auto& grid = density_at(pde.snapshots[next]);
                    double l1 = 0.0;
                    std::vector<double> kv(grid.size());
                    for (std::size_t j = 0; j < grid.size(); ++j) {
                        kv[j] = kde.density(grid.x(j));
                        l1 += std::abs(kv[j] - grid[j]) * grid.dx();
                    }
                    double kde_mass = 0.0;
                    for (double v : kv) kde_mass += v * grid.dx();
                    const double outside = std::max(0.0, 1.0 - kde_mass);
                    l1 += outside;
                    csv.row({static_cast<double>(n), pde.snapshots[next], l1, outside, h});
                    rows.push_back({{"n", n}, {"time", pde.snapshots[next]}, {"l1", l1}, {"mass_outside_domain", outside}, {"bandwidth", h}});
                    if (next + 1 == snap_steps.size()) {
                        final_l1.push_back(l1);
                        write_two_column(ctx.out_dir / ("kde_final_n" + std::to_string(n) + ".csv"), "x", "density", xs, kv);
                    }
                    ++next;
                }
            }
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < final_l1.size(); ++i) decreasing = decreasing && final_l1[i] < final_l1[i - 1];
        CommandResult res;
        res.summary = {{"status", "ok"},
                       {"rows", rows},
                       {"final_l1", final_l1},
                       {"decreasing_in_n", decreasing},
                       {"l1_at_largest_n", final_l1.back()},
                       {"tolerance", tol},
                       {"pde_steps", sol.steps},
                       {"pde_dt", sol.dt},
                       {"pde_max_boundary_density", sol.max_boundary_density}};
        res.pass = (!require_decreasing || decreasing) && final_l1.back() <= tol;
        return res;
    });
    detail::finish(ctx, "compare", resolved, r);
    return r;
}

// --- validate-sampler ---------------------------------------------------------

namespace detail {

inline CommandResult sampler_cf(const Section& s, std::uint64_t seed, const RunContext& ctx, json& resolved) {
    s.allow({"battery", "alphas", "draws", "xis", "scale", "tolerance"});
    const auto alphas = s.numbers("alphas", {0.8, 1.2, 1.5, 1.9, 2.0});
    const auto draws = s.count("draws", 1'000'000);
    const auto xis = s.numbers("xis", {0.25, 0.5, 1.0, 2.0, 4.0});
    const double scale = s.number("scale", 1.0);
    const double tol = s.number("tolerance", 5e-3);
    if (draws < 2) throw ConfigError("sampler.draws: need at least 2");
    for (double a : alphas) levymv::detail::rethrow_as_config("sampler.alphas", [&] {
            StableDriverSpec{a, scale}.validate();
            return 0;
        });
    resolved["sampler"] = {{"battery", "cf"}, {"alphas", alphas}, {"draws", draws}, {"xis", xis}, {"scale", scale}, {"tolerance", tol}};
    CommandResult r;
    r.pass = true;
    json rows = json::array();
    CsvWriter csv(ctx.out_dir / "cf.csv");
    csv.header({"alpha", "xi", "empirical_real", "empirical_imag", "target", "error"});
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const StableDriverSpec spec{alphas[ai], scale};
        Rng g = substream(seed, ai, 0, StreamTag::experiment);
        std::vector<double> re(xis.size(), 0.0), im(xis.size(), 0.0);
        double m1 = 0.0, m2 = 0.0, m4 = 0.0;
        for (std::uint64_t d = 0; d < draws; ++d) {
            const double x = sample_stable_increment(spec, 1.0, g);
            for (std::size_t k = 0; k < xis.size(); ++k) {
                re[k] += std::cos(xis[k] * x);
                im[k] += std::sin(xis[k] * x);
            }
            m1 += x;
            m2 += x * x;
            m4 += x * x * x * x;
        }
        const double nd = static_cast<double>(draws);
        double worst = 0.0;
        for (std::size_t k = 0; k < xis.size(); ++k) {
            const double target = std::exp(-scale * std::pow(std::abs(xis[k]), spec.alpha));
            const double err = std::abs(std::complex<double>(re[k] / nd - target, im[k] / nd));
            worst = std::max(worst, err);
            csv.row({spec.alpha, xis[k], re[k] / nd, im[k] / nd, target, err});
        }
        json row{{"alpha", spec.alpha}, {"max_cf_error", worst}, {"pass", worst <= tol}};
        bool ok = worst <= tol;
        if (spec.alpha == 2.0) {
            // N(0, 2 scale): check mean, variance and kurtosis at 5 standard errors.
            const double var = 2.0 * scale;
            const double mean = m1 / nd, v = m2 / nd, kurt = m4 / nd / (var * var);
            const bool mean_ok = std::abs(mean) <= 5.0 * std::sqrt(var / nd);
            const bool var_ok = std::abs(v - var) <= 5.0 * var * std::sqrt(2.0 / nd);
            const bool kurt_ok = std::abs(kurt - 3.0) <= 5.0 * std::sqrt(96.0 / nd);
            row["gaussian_moments"] = {{"mean", mean}, {"variance", v}, {"target_variance", var}, {"kurtosis", kurt},
                                       {"pass", mean_ok && var_ok && kurt_ok}};
            ok = ok && mean_ok && var_ok && kurt_ok;
        }
        row["pass"] = ok;
        r.pass = r.pass && ok;
        rows.push_back(row);
    }
    r.summary = {{"status", "ok"}, {"battery", "cf"}, {"rows", rows}};
    return r;
}

inline CommandResult sampler_gap(const Section& s, std::uint64_t seed, const RunContext& ctx, json& resolved) {
    s.allow({"battery", "n_list", "reps", "n_ref", "bound"});
    const auto n_list = s.counts("n_list", {10, 100, 1000});
    const auto reps = s.count("reps", 200);
    const auto n_ref = s.count("n_ref", 1'000'000);
    // 4 times the second moment of the standard Gaussian.
    const double bound = s.number("bound", 4.0);
    if (n_list.empty() || reps < 2 || n_ref < 2) throw ConfigError("sampler: gap needs n_list, reps >= 2 and n_ref >= 2");
    resolved["sampler"] = {{"battery", "gap"}, {"n_list", n_list}, {"reps", reps}, {"n_ref", n_ref}, {"bound", bound}};
    CommandResult r;
    r.pass = true;
    json rows = json::array();
    CsvWriter csv(ctx.out_dir / "gap.csv");
    csv.header({"n", "mean_d2_sq", "standard_error", "bound"});
    std::vector<GapEstimate> est;
    for (std::size_t n : n_list) {
        est.push_back(empirical_gap_experiment([](Rng& g) { return standard_normal(g); }, n, reps, seed, n_ref));
        csv.row({static_cast<double>(n), est.back().mean, est.back().standard_error, bound});
        rows.push_back(stats_row(n, est.back().mean, est.back().standard_error));
        r.pass = r.pass && est.back().mean <= bound;
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < est.size(); ++i)
        decreasing = decreasing && est[i].mean < est[i - 1].mean + 2.0 * std::hypot(est[i].standard_error, est[i - 1].standard_error);
    r.pass = r.pass && decreasing;
    r.summary = {{"status", "ok"}, {"battery", "gap"}, {"rows", rows}, {"decreasing_within_2se", decreasing}, {"bound", bound}};
    return r;
}

inline CommandResult sampler_vasdis(const Section& s, std::uint64_t seed, const RunContext& ctx, json& resolved) {
    s.allow({"battery", "pairs", "n_min", "n_max", "tolerance"});
    const auto pairs = s.count("pairs", 10'000);
    const auto n_min = s.count("n_min", 2);
    const auto n_max = s.count("n_max", 64);
    const double tol = s.number("tolerance", 1e-12);
    if (n_min < 1 || n_max < n_min) throw ConfigError("sampler: vasdis needs 1 <= n_min <= n_max");
    resolved["sampler"] = {{"battery", "vasdis"}, {"pairs", pairs}, {"n_min", n_min}, {"n_max", n_max}, {"tolerance", tol}};
    std::size_t violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
    for (std::uint64_t p = 0; p < pairs; ++p) {
        Rng g = substream(seed, p, 0, StreamTag::experiment);
        const auto n = std::uniform_int_distribution<std::uint64_t>(n_min, n_max)(g);
        std::vector<double> xs(n), ys(n);
        const int family = static_cast<int>(p % 3);
        for (std::size_t i = 0; i < n; ++i) {
            if (family == 0) {
                xs[i] = standard_normal(g);
                ys[i] = standard_normal(g);
            } else if (family == 1) {
                xs[i] = sample_standard_stable(1.0, g);
                ys[i] = xs[i] + 0.1 * standard_normal(g);
            } else {
                // Few distinct values, many ties.
                xs[i] = std::floor(4.0 * uniform_open01(g));
                ys[i] = std::floor(4.0 * uniform_open01(g));
            }
        }
        const EmpiricalMeasure mu(xs), nu(ys);
        double euclid = 0.0;
        for (std::size_t i = 0; i < n; ++i) euclid += (xs[i] - ys[i]) * (xs[i] - ys[i]);
        const double slack = std::sqrt(euclid / static_cast<double>(n)) - wasserstein2(mu, nu);
        worst_slack = std::min(worst_slack, slack);
        if (slack < -tol) ++violations;
    }
    CommandResult r;
    r.pass = violations == 0;
    r.summary = {{"status", "ok"}, {"battery", "vasdis"}, {"pairs", pairs}, {"violations", violations}, {"min_slack", worst_slack}};
    CsvWriter csv(ctx.out_dir / "vasdis.csv");
    csv.header({"pairs", "violations", "min_slack"});
    csv.row({static_cast<double>(pairs), static_cast<double>(violations), worst_slack});
    return r;
}

} // namespace detail

inline CommandResult cmd_validate_sampler(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    const Section r0(root, "");
    const auto seed = r0.count("seed", 1);
    if (!r0.has("sampler")) throw ConfigError("sampler: missing");
    const auto s = r0.child("sampler");
    const auto battery = s.text("battery", "cf");
    json resolved{{"seed", seed}};
    std::filesystem::create_directories(ctx.out_dir);
    CommandResult r;
    if (battery == "cf") r = detail::guarded(resolved, [&](json&) { return detail::sampler_cf(s, seed, ctx, resolved); });
    else if (battery == "gap") r = detail::guarded(resolved, [&](json&) { return detail::sampler_gap(s, seed, ctx, resolved); });
    else if (battery == "vasdis") r = detail::guarded(resolved, [&](json&) { return detail::sampler_vasdis(s, seed, ctx, resolved); });
    else throw ConfigError("sampler.battery: expected cf, gap or vasdis");
    detail::finish(ctx, "validate-sampler", resolved, r);
    return r;
}

// --- check-h1 -----------------------------------------------------------------

inline CommandResult cmd_check_h1(const json& root, const RunContext& ctx) {
    detail::check_top_level(root);
    if (!root.contains("h1")) throw ConfigError("h1: missing");
    const Section s(root.at("h1"), "h1");
    s.allow({"alpha", "gamma", "eps", "K1", "K", "y_points", "a_points", "lambda_points"});
    const auto params = perturbation_from_json(s);
    H1Grids grids;
    grids.y_points = s.count("y_points", grids.y_points);
    grids.a_points = s.count("a_points", grids.a_points);
    grids.lambda_points = s.count("lambda_points", grids.lambda_points);
    if (grids.y_points < 3 || grids.a_points < 1 || grids.lambda_points < 2) throw ConfigError("h1: grids too coarse");
    json resolved{{"h1", to_json(params)}};
    resolved["h1"]["y_points"] = grids.y_points;
    resolved["h1"]["a_points"] = grids.a_points;
    resolved["h1"]["lambda_points"] = grids.lambda_points;
    std::filesystem::create_directories(ctx.out_dir);
    CommandResult r = detail::guarded(resolved, [&](const json&) {
        const auto rep = verify_H1(params, grids);
        json checks = json::array();
        for (const auto& c : rep.checks)
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"bound", c.bound}, {"margin", c.margin}});
        CommandResult res;
        res.pass = rep.all_pass();
        res.summary = {{"status", "ok"},
                       {"checks", checks},
                       {"integral_k2_beta", rep.integral.value},
                       {"integral_relative_corrections", rep.integral.relative_corrections},
                       {"ratio_sup_sampled", rep.ratio_sup},
                       {"ratio_closed_form_bound", rep.ratio_bound},
                       {"empirical_threshold", rep.empirical_threshold},
                       {"proof_threshold", rep.proof_threshold},
                       {"threshold_case", rep.threshold_case}};
        std::vector<double> ys, ks;
        for (int i = 0; i <= 2000; ++i) {
            ys.push_back(-1.0 + static_cast<double>(i) / 1000.0);
            ks.push_back(k_eps(ys.back(), params));
        }
        write_two_column(ctx.out_dir / "k_eps.csv", "y", "k", ys, ks);
        return res;
    });
    detail::finish(ctx, "check-h1", resolved, r);
    return r;
}

inline CommandResult run_command(const std::string& name, const json& root, const RunContext& ctx) {
    if (name == "simulate") return cmd_simulate(root, ctx);
    if (name == "pde") return cmd_pde(root, ctx);
    if (name == "chaos-rate") return cmd_chaos_rate(root, ctx);
    if (name == "compare") return cmd_compare(root, ctx);
    if (name == "validate-sampler") return cmd_validate_sampler(root, ctx);
    if (name == "check-h1") return cmd_check_h1(root, ctx);
    throw ConfigError("unknown command " + name);
}

} // namespace levymv::cli
