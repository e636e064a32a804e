#pragma once

// JSON form of the library's configuration types. Readers fill defaults,
// reject unknown keys and name the offending path in every error, so a
// resolved config written back with the to_json functions reproduces a run.

#include "levymv/coefficient.hpp"
#include "levymv/fractional_fp.hpp"
#include "levymv/io.hpp"
#include "levymv/levy_driver.hpp"
#include "levymv/particle_engine.hpp"
#include "levymv/variation_checks.hpp"

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>

namespace levymv {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Read-side view of one JSON object with its dotted path for messages.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const std::string& path() const { return path_; }
    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) throw ConfigError(at(k) + ": unknown key");
    }

    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
    double number(const std::string& key) const {
        require(key);
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
        return v.get<double>();
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) const { return has(key) ? count(key) : fallback; }
    std::uint64_t count(const std::string& key) const {
        require(key);
        const auto& v = j_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError(at(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }
    std::string text(const std::string& key) const {
        require(key);
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
        return v.get<std::string>();
    }
    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at(key) + ": expected true or false");
        return v.get<bool>();
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(at(key) + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(at(key) + ": expected an array of integers");
        std::vector<std::size_t> out;
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<std::int64_t>() < 0) throw ConfigError(at(key) + ": expected an array of integers");
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }
    Section child(const std::string& key) const {
        require(key);
        return Section(j_.at(key), at(key));
    }
    const json& raw(const std::string& key) const {
        require(key);
        return j_.at(key);
    }

private:
    void require(const std::string& key) const {
        if (!has(key)) throw ConfigError(at(key) + ": missing");
    }
    const json& j_;
    std::string path_;
};

namespace detail {
template <class F>
auto rethrow_as_config(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}
} // namespace detail

// --- driver -------------------------------------------------------------------

inline DriverSpec driver_from_json(const Section& s) {
    const auto type = s.text("type");
    return detail::rethrow_as_config(s.path(), [&]() -> DriverSpec {
        if (type == "stable") {
            s.allow({"type", "alpha", "scale"});
            StableDriverSpec d{s.number("alpha", 1.5), s.number("scale", 1.0)};
            d.validate();
            return d;
        }
        if (type == "triplet") {
            s.allow({"type", "gaussian_a", "drift_b", "small_jumps", "big_jumps", "delta", "scheme"});
            LevyTripletSpec t;
            t.gaussian_a = s.number("gaussian_a", 0.0);
            t.drift_b = s.number("drift_b", 0.0);
            t.small_jump_cutoff_delta = s.number("delta", 0.05);
            const auto scheme = s.text("scheme", "gaussian_match");
            if (scheme == "gaussian_match") t.scheme = SmallJumpScheme::gaussian_match;
            else if (scheme == "drop") t.scheme = SmallJumpScheme::drop;
            else throw ConfigError(s.at("scheme") + ": expected gaussian_match or drop");
            if (s.has("small_jumps")) {
                const auto sj = s.child("small_jumps");
                const auto st = sj.text("type");
                if (st == "none") {
                    sj.allow({"type"});
                } else if (st == "power_law") {
                    sj.allow({"type", "K", "alpha"});
                    t.small_jumps = PowerLawDensity{sj.number("K"), sj.number("alpha")};
                } else if (st == "uniform") {
                    sj.allow({"type", "rate"});
                    t.small_jumps = UniformDensity{sj.number("rate")};
                } else {
                    throw ConfigError(sj.at("type") + ": expected none, power_law or uniform");
                }
            }
            if (s.has("big_jumps")) {
                const auto bj = s.child("big_jumps");
                bj.allow({"atoms", "tail"});
                if (bj.has("atoms")) {
                    const auto& atoms = bj.raw("atoms");
                    if (!atoms.is_array()) throw ConfigError(bj.at("atoms") + ": expected an array");
                    for (std::size_t i = 0; i < atoms.size(); ++i) {
                        Section a(atoms[i], bj.at("atoms") + "[" + std::to_string(i) + "]");
                        a.allow({"amplitude", "rate"});
                        t.big_jumps.atoms.push_back({a.number("amplitude"), a.number("rate")});
                    }
                }
                if (bj.has("tail")) {
                    const auto tl = bj.child("tail");
                    tl.allow({"K", "alpha"});
                    t.big_jumps.tail = PowerTail{tl.number("K"), tl.number("alpha")};
                }
            }
            t.validate();
            return t;
        }
        throw ConfigError(s.at("type") + ": expected stable or triplet");
    });
}

inline json to_json(const DriverSpec& d) {
    if (const auto* s = std::get_if<StableDriverSpec>(&d)) return {{"type", "stable"}, {"alpha", s->alpha}, {"scale", s->scale}};
    const auto& t = std::get<LevyTripletSpec>(d);
    json j{{"type", "triplet"}, {"gaussian_a", t.gaussian_a}, {"drift_b", t.drift_b}};
    std::visit(
        [&](const auto& sj) {
            using T = std::decay_t<decltype(sj)>;
            if constexpr (std::is_same_v<T, NoSmallJumps>) j["small_jumps"] = {{"type", "none"}};
            else if constexpr (std::is_same_v<T, PowerLawDensity>) j["small_jumps"] = {{"type", "power_law"}, {"K", sj.K}, {"alpha", sj.alpha}};
            else if constexpr (std::is_same_v<T, UniformDensity>) j["small_jumps"] = {{"type", "uniform"}, {"rate", sj.rate}};
            else j["small_jumps"] = {{"type", "custom"}, {"name", sj.name}};
        },
        t.small_jumps);
    json atoms = json::array();
    for (const auto& a : t.big_jumps.atoms) atoms.push_back({{"amplitude", a.amplitude}, {"rate", a.rate}});
    j["big_jumps"] = {{"atoms", atoms}};
    if (t.big_jumps.tail) j["big_jumps"]["tail"] = {{"K", t.big_jumps.tail->K}, {"alpha", t.big_jumps.tail->alpha}};
    j["delta"] = t.small_jump_cutoff_delta;
    j["scheme"] = t.scheme == SmallJumpScheme::gaussian_match ? "gaussian_match" : "drop";
    return j;
}

// --- coefficient --------------------------------------------------------------

inline CoefficientSpec sigma_from_json(const Section& s) {
    const auto type = s.text("type");
    return detail::rethrow_as_config(s.path(), [&]() -> CoefficientSpec {
        CoefficientSpec spec;
        if (type == "constant") {
            s.allow({"type", "value"});
            spec = ConstantCoefficient{s.number("value")};
        } else if (type == "linear") {
            s.allow({"type", "kernel"});
            const auto k = s.child("kernel");
            k.allow({"type", "c0", "c1"});
            const auto kt = k.text("type");
            if (kt == "sine") spec = LinearInteraction{SineKernel{k.number("c0", 1.0), k.number("c1", 0.5)}};
            else if (kt == "lorentzian") spec = LinearInteraction{LorentzianKernel{k.number("c0", 1.0), k.number("c1", 0.5)}};
            else throw ConfigError(k.at("type") + ": expected sine or lorentzian");
        } else if (type == "smoothed_density_power") {
            s.allow({"type", "eps", "s"});
            spec = SmoothedDensityPower{s.number("eps", 0.5), s.number("s", 0.5)};
        } else {
            throw ConfigError(s.at("type") + ": expected constant, linear or smoothed_density_power");
        }
        validate(spec);
        return spec;
    });
}

inline json to_json(const CoefficientSpec& spec) {
    return std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ConstantCoefficient>) {
                return {{"type", "constant"}, {"value", c.value}};
            } else if constexpr (std::is_same_v<T, LinearInteraction>) {
                json k = std::visit(
                    [](const auto& kk) -> json {
                        using K = std::decay_t<decltype(kk)>;
                        if constexpr (std::is_same_v<K, SineKernel>) return {{"type", "sine"}, {"c0", kk.c0}, {"c1", kk.c1}};
                        else if constexpr (std::is_same_v<K, LorentzianKernel>) return {{"type", "lorentzian"}, {"c0", kk.c0}, {"c1", kk.c1}};
                        else return {{"type", "custom"}, {"name", kk.name}};
                    },
                    c.kernel);
                return {{"type", "linear"}, {"kernel", k}};
            } else {
                return {{"type", "smoothed_density_power"}, {"eps", c.eps}, {"s", c.s}};
            }
        },
        spec);
}

// --- initial law --------------------------------------------------------------

/// Relative sample-file paths resolve against `base_dir`.
inline InitialLaw initial_from_json(const Section& s, const std::filesystem::path& base_dir = {}) {
    const auto type = s.text("type");
    InitialLaw law;
    if (type == "point") {
        s.allow({"type", "x"});
        law = PointMass{s.number("x", 0.0)};
    } else if (type == "gaussian") {
        s.allow({"type", "mean", "sd"});
        law = GaussianLaw{s.number("mean", 0.0), s.number("sd", 1.0)};
    } else if (type == "uniform") {
        s.allow({"type", "lo", "hi"});
        law = UniformLaw{s.number("lo"), s.number("hi")};
    } else if (type == "file") {
        s.allow({"type", "path"});
        std::filesystem::path p = s.text("path");
        const auto resolved = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        law = SampleLaw{detail::rethrow_as_config(s.at("path"), [&] { return read_samples(resolved); }), p.string()};
    } else {
        throw ConfigError(s.at("type") + ": expected point, gaussian, uniform or file");
    }
    detail::rethrow_as_config(s.path(), [&] {
        validate(law);
        return 0;
    });
    return law;
}

inline json to_json(const InitialLaw& law) {
    return std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, PointMass>) return {{"type", "point"}, {"x", l.x}};
            else if constexpr (std::is_same_v<T, GaussianLaw>) return {{"type", "gaussian"}, {"mean", l.mean}, {"sd", l.sd}};
            else if constexpr (std::is_same_v<T, UniformLaw>) return {{"type", "uniform"}, {"lo", l.lo}, {"hi", l.hi}};
            else return {{"type", "file"}, {"path", l.source}};
        },
        law);
}

// --- simulation ---------------------------------------------------------------

inline SmoothingMode smoothing_from_text(const std::string& s, const std::string& where) {
    if (s == "auto") return SmoothingMode::automatic;
    if (s == "exact") return SmoothingMode::exact;
    if (s == "binned") return SmoothingMode::binned;
    throw ConfigError(where + ": expected auto, exact or binned");
}

inline std::string to_text(SmoothingMode m) {
    switch (m) {
    case SmoothingMode::exact: return "exact";
    case SmoothingMode::binned: return "binned";
    default: return "auto";
    }
}

/// Simulation settings from the top-level sections seed, driver, truncation,
/// sigma, initial and simulation.
inline SimulationConfig simulation_from_json(const json& root, const std::filesystem::path& base_dir = {}) {
    Section r(root, "");
    SimulationConfig cfg;
    cfg.seed = r.count("seed", 1);
    if (r.has("driver")) cfg.driver = driver_from_json(r.child("driver"));
    if (r.has("truncation")) cfg.truncation = r.number("truncation");
    if (r.has("sigma")) cfg.sigma = sigma_from_json(r.child("sigma"));
    if (r.has("initial")) cfg.initial_law = initial_from_json(r.child("initial"), base_dir);
    if (r.has("simulation")) {
        const auto s = r.child("simulation");
        // steps and resolved_dt are written back for information only.
        s.allow({"n", "dt", "T", "smoothing", "small_jump_delta", "export", "steps", "resolved_dt"});
        cfg.n_particles = s.count("n", cfg.n_particles);
        cfg.dt = s.number("dt", cfg.dt);
        cfg.horizon = s.number("T", cfg.horizon);
        cfg.smoothing = smoothing_from_text(s.text("smoothing", "auto"), s.at("smoothing"));
        cfg.small_jump_delta = s.number("small_jump_delta", cfg.small_jump_delta);
    }
    detail::rethrow_as_config("simulation", [&] {
        cfg.validate();
        cfg.make_sampler();
        return 0;
    });
    return cfg;
}

/// Everything that determines a simulation's output; thread count excluded.
inline json to_json(const SimulationConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["driver"] = to_json(cfg.driver);
    j["truncation"] = cfg.truncation ? json(*cfg.truncation) : json(nullptr);
    j["sigma"] = to_json(cfg.sigma);
    j["initial"] = to_json(cfg.initial_law);
    j["simulation"] = {{"n", cfg.n_particles}, {"dt", cfg.dt}, {"T", cfg.horizon}, {"smoothing", to_text(cfg.smoothing)},
                       {"small_jump_delta", cfg.small_jump_delta}, {"steps", cfg.steps()}, {"resolved_dt", cfg.resolved_dt()}};
    return j;
}

// --- PDE, H1 ------------------------------------------------------------------

inline FpOptions fp_options_from_json(const Section& s) {
    FpOptions o;
    o.c_stab = s.number("c_stab", o.c_stab);
    const auto scheme = s.text("scheme", "rk4");
    if (scheme == "rk4") o.scheme = TimeScheme::rk4;
    else if (scheme == "integrating_factor") o.scheme = TimeScheme::integrating_factor;
    else throw ConfigError(s.at("scheme") + ": expected rk4 or integrating_factor");
    const auto policy = s.text("boundary_policy", "abort");
    if (policy == "abort") o.abort_on_boundary = true;
    else if (policy == "warn") o.abort_on_boundary = false;
    else throw ConfigError(s.at("boundary_policy") + ": expected abort or warn");
    o.boundary_tol = s.number("boundary_tol", o.boundary_tol);
    o.positivity_rel_tol = s.number("positivity_rel_tol", o.positivity_rel_tol);
    o.mass_step_tol = s.number("mass_step_tol", o.mass_step_tol);
    if (!(o.c_stab > 0.0 && o.c_stab <= 1.0)) throw ConfigError(s.at("c_stab") + ": must lie in (0, 1]");
    return o;
}

inline json to_json(const FpOptions& o) {
    return {{"c_stab", o.c_stab},
            {"scheme", o.scheme == TimeScheme::rk4 ? "rk4" : "integrating_factor"},
            {"boundary_policy", o.abort_on_boundary ? "abort" : "warn"},
            {"boundary_tol", o.boundary_tol},
            {"positivity_rel_tol", o.positivity_rel_tol},
            {"mass_step_tol", o.mass_step_tol}};
}

inline PerturbationParams perturbation_from_json(const Section& s) {
    return detail::rethrow_as_config(s.path(), [&] {
        return PerturbationParams(s.number("alpha", 1.5), s.number("gamma", 1.0), s.number("eps", 0.01), s.number("K1", 1.0), s.number("K", 1.0));
    });
}

inline json to_json(const PerturbationParams& p) {
    return {{"alpha", p.alpha}, {"gamma", p.gamma}, {"eps", p.eps}, {"K1", p.K1}, {"K", p.K}, {"c_derived", p.c_derived()}};
}

} // namespace levymv
