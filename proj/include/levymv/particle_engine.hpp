#pragma once

// Euler scheme for the interacting particle system
//
//     X^i_{t+dt} = X^i_t + sigma(X^i_t, mu^n_t) dZ^i
//
// with sigma frozen at the start of each step, together with the frozen-flow
// copies used by the Picard iteration and the chaos-rate coupling.
//
// Particle i at step k always draws its increment from the stream
// (seed, i, k, driver_increment), so a run is reproducible bit for bit for
// any number of worker threads, and two runs with the same seed share their
// increments particle by particle.

#include "levymv/coefficient.hpp"
#include "levymv/empirical_measure.hpp"
#include "levymv/levy_driver.hpp"
#include "levymv/parallel.hpp"
#include "levymv/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace levymv {

struct PointMass {
    double x = 0.0;
};
struct GaussianLaw {
    double mean = 0.0;
    double sd = 1.0;
};
struct UniformLaw {
    double lo = 0.0;
    double hi = 1.0;
};
/// Empirical law of a stored sample (e.g. read from a file), drawn with replacement.
struct SampleLaw {
    std::vector<double> values;
    std::string source;
};
using InitialLaw = std::variant<PointMass, GaussianLaw, UniformLaw, SampleLaw>;

inline void validate(const InitialLaw& law) {
    std::visit(
        [](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, PointMass>) {
                if (!std::isfinite(l.x)) throw std::invalid_argument("initial law: point mass must be finite");
            } else if constexpr (std::is_same_v<T, GaussianLaw>) {
                if (!std::isfinite(l.mean) || !(l.sd >= 0.0)) throw std::invalid_argument("initial law: gaussian needs finite mean and sd >= 0");
            } else if constexpr (std::is_same_v<T, UniformLaw>) {
                if (!(l.lo < l.hi)) throw std::invalid_argument("initial law: uniform needs lo < hi");
            } else {
                if (l.values.empty()) throw std::invalid_argument("initial law: sample law is empty");
                for (double v : l.values)
                    if (!std::isfinite(v)) throw std::invalid_argument("initial law: sample law has a non-finite value");
            }
        },
        law);
}

template <class G>
double sample_initial(const InitialLaw& law, G& g) {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, PointMass>)
                return l.x;
            else if constexpr (std::is_same_v<T, GaussianLaw>)
                return l.mean + l.sd * standard_normal(g);
            else if constexpr (std::is_same_v<T, UniformLaw>)
                return uniform_real(g, l.lo, l.hi);
            else
                return l.values[std::uniform_int_distribution<std::size_t>(0, l.values.size() - 1)(g)];
        },
        law);
}

struct SimulationConfig {
    std::size_t n_particles = 1000;
    double dt = 0.01;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    DriverSpec driver = StableDriverSpec{};
    CoefficientSpec sigma = ConstantCoefficient{1.0};
    InitialLaw initial_law = PointMass{0.0};
    std::optional<double> truncation;
    double small_jump_delta = 0.05; ///< triplet cutoff used when a stable driver is truncated
    SmoothingMode smoothing = SmoothingMode::automatic;
    std::size_t threads = 1; ///< 0 means hardware concurrency; never affects results

    /// Number of steps, horizon / dt rounded to the nearest whole number (at least 1).
    std::size_t steps() const {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / dt)));
    }
    /// The step actually used, horizon / steps().
    double resolved_dt() const { return horizon / static_cast<double>(steps()); }
    std::size_t worker_count() const {
        return threads ? threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    void validate() const {
        if (n_particles == 0) throw std::invalid_argument("simulation: n_particles must be positive");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("simulation: dt must be positive");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("simulation: horizon must be positive");
        if (truncation && !(*truncation >= 1.0)) throw std::invalid_argument("simulation: truncation N must be >= 1");
        levymv::validate(sigma);
        levymv::validate(initial_law);
    }

    DriverSampler make_sampler() const { return DriverSampler(driver, truncation, small_jump_delta); }
};

struct ParticleState {
    double time = 0.0;
    std::vector<double> positions;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discretized marginal flow: one empirical measure per recorded time.
struct MarginalFlow {
    std::vector<double> times;
    std::vector<EmpiricalMeasure> marginals;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t sample_count() const { return marginals.empty() ? 0 : marginals.front().size(); }

    void validate() const {
        if (times.size() != marginals.size() || times.empty()) throw std::invalid_argument("marginal flow: times and marginals disagree");
        for (std::size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1])) throw std::invalid_argument("marginal flow: times must increase strictly");
        for (const auto& m : marginals)
            if (m.size() != marginals.front().size()) throw std::invalid_argument("marginal flow: sample counts differ");
    }
};

inline std::vector<double> initial_positions(const SimulationConfig& cfg) {
    std::vector<double> x(cfg.n_particles);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Rng g = substream(cfg.seed, i, 0, StreamTag::initial_position);
        x[i] = sample_initial(cfg.initial_law, g);
    }
    return x;
}

namespace detail {

inline void require_finite(std::span<const double> x, double time) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]))
            throw NonFiniteError("particle " + std::to_string(i) + " became non-finite (" + std::to_string(x[i]) +
                                 ") at t = " + std::to_string(time));
}

/// out[i] = x[i] + sigma(x[i]) dZ^i for the increment stream of step `step`.
inline void euler_step(std::span<const double> x, std::span<double> out, const PreparedCoefficient& sigma,
                       const DriverSampler& sampler, double dt, std::uint64_t seed, std::size_t step, std::size_t threads) {
    parallel_for(x.size(), threads, [&](std::size_t i) {
        Rng g = substream(seed, i, step, StreamTag::driver_increment);
        out[i] = x[i] + sigma(x[i]) * sampler.increment(dt, g);
    });
}

inline void check_step(const ParticleState& state, const SimulationConfig& cfg) {
    if (state.positions.size() != cfg.n_particles) throw std::invalid_argument("step: state size differs from n_particles");
    if (state.time + cfg.resolved_dt() > cfg.horizon * (1.0 + 1e-12) + 1e-12)
        throw std::invalid_argument("step: would run past the horizon");
}

inline std::size_t step_index(const ParticleState& state, const SimulationConfig& cfg) {
    return static_cast<std::size_t>(std::llround(state.time / cfg.resolved_dt()));
}

} // namespace detail

/// One Euler step against the system's own empirical measure.
inline ParticleState step_interacting(const ParticleState& state, const SimulationConfig& cfg, const DriverSampler& sampler) {
    detail::check_step(state, cfg);
    const std::size_t k = detail::step_index(state, cfg);
    const EmpiricalMeasure mu(state.positions);
    const PreparedCoefficient sigma(cfg.sigma, mu, cfg.smoothing);
    ParticleState next{cfg.resolved_dt() * static_cast<double>(k + 1), std::vector<double>(state.positions.size())};
    detail::euler_step(state.positions, next.positions, sigma, sampler, cfg.resolved_dt(), cfg.seed, k, cfg.worker_count());
    detail::require_finite(next.positions, next.time);
    return next;
}

/// One Euler step with sigma evaluated against an external marginal.
inline ParticleState step_frozen_flow(const ParticleState& state, const EmpiricalMeasure& flow_marginal, const SimulationConfig& cfg,
                                      const DriverSampler& sampler) {
    detail::check_step(state, cfg);
    const std::size_t k = detail::step_index(state, cfg);
    const PreparedCoefficient sigma(cfg.sigma, flow_marginal, cfg.smoothing);
    ParticleState next{cfg.resolved_dt() * static_cast<double>(k + 1), std::vector<double>(state.positions.size())};
    detail::euler_step(state.positions, next.positions, sigma, sampler, cfg.resolved_dt(), cfg.seed, k, cfg.worker_count());
    detail::require_finite(next.positions, next.time);
    return next;
}

/// Runs steps() Euler steps from the configured initial law and records the
/// empirical measure at every step (time 0 included).
inline MarginalFlow simulate(const SimulationConfig& cfg) {
    cfg.validate();
    const DriverSampler sampler = cfg.make_sampler();
    ParticleState state{0.0, initial_positions(cfg)};
    MarginalFlow flow;
    flow.times.push_back(0.0);
    flow.marginals.emplace_back(state.positions);
    for (std::size_t k = 0; k < cfg.steps(); ++k) {
        state = step_interacting(state, cfg, sampler);
        flow.times.push_back(state.time);
        flow.marginals.emplace_back(state.positions);
    }
    return flow;
}

/// Final particle positions (in particle order) of the same run as simulate().
inline ParticleState simulate_final(const SimulationConfig& cfg) {
    cfg.validate();
    const DriverSampler sampler = cfg.make_sampler();
    ParticleState state{0.0, initial_positions(cfg)};
    for (std::size_t k = 0; k < cfg.steps(); ++k) state = step_interacting(state, cfg, sampler);
    return state;
}

inline std::vector<double> second_moments(const MarginalFlow& flow) {
    std::vector<double> out;
    out.reserve(flow.size());
    for (const auto& m : flow.marginals) out.push_back(second_moment(m));
    return out;
}

// --- Picard iteration on marginal flows ---------------------------------------

enum class IncrementMode { common, independent };

struct PicardResult {
    std::vector<MarginalFlow> flows;  ///< flows[0] is the constant initial flow
    std::vector<double> successive_gaps; ///< sup_t d(flows[j]_t, flows[j+1]_t)
};

inline double sup_distance(const MarginalFlow& a, const MarginalFlow& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sup_distance: flows have different time grids");
    double sup = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sup = std::max(sup, wasserstein2(a.marginals[k], b.marginals[k]));
    return sup;
}

/// Iterates Q -> law of the SDE driven with sigma(., Q_t). Every iterate starts
/// from the same X_0 sample; increments are shared across iterates in
/// `common` mode and drawn afresh per iterate otherwise.
inline PicardResult picard_flow(const SimulationConfig& cfg, std::size_t iterations, IncrementMode mode = IncrementMode::common) {
    if (iterations == 0) throw std::invalid_argument("picard_flow: iterations must be >= 1");
    cfg.validate();
    const DriverSampler sampler = cfg.make_sampler();
    const auto x0 = initial_positions(cfg);
    const std::size_t steps = cfg.steps();

    PicardResult res;
    MarginalFlow initial;
    for (std::size_t k = 0; k <= steps; ++k) {
        initial.times.push_back(cfg.resolved_dt() * static_cast<double>(k));
        initial.marginals.emplace_back(x0);
    }
    res.flows.push_back(std::move(initial));

    for (std::size_t j = 1; j <= iterations; ++j) {
        SimulationConfig it = cfg;
        if (mode == IncrementMode::independent) it.seed = mix_key({cfg.seed, 0x5049434152440000ULL, j});
        const MarginalFlow& q = res.flows.back();
        ParticleState state{0.0, x0};
        MarginalFlow next;
        next.times.push_back(0.0);
        next.marginals.emplace_back(state.positions);
        for (std::size_t k = 0; k < steps; ++k) {
            state = step_frozen_flow(state, q.marginals[k], it, sampler);
            next.times.push_back(state.time);
            next.marginals.emplace_back(state.positions);
        }
        res.successive_gaps.push_back(sup_distance(q, next));
        res.flows.push_back(std::move(next));
    }
    return res;
}

// --- coupling with frozen-flow copies -----------------------------------------

struct CoupledResult {
    std::vector<double> sup_gaps; ///< per particle, sup over steps of |X^{i,n} - X^i|
    std::size_t vasdis_violations = 0;
};

namespace detail {

/// One coefficient per step of a reference flow, prepared once.
inline std::vector<PreparedCoefficient> prepare_flow(const CoefficientSpec& sigma, const MarginalFlow& flow) {
    std::vector<PreparedCoefficient> out;
    out.reserve(flow.size());
    // The reference is large and queried for every copy; the binned smoother
    // keeps those queries O(1).
    for (const auto& m : flow.marginals) out.emplace_back(sigma, m, SmoothingMode::binned);
    return out;
}

inline CoupledResult run_coupled(const SimulationConfig& cfg, const DriverSampler& sampler, const std::vector<PreparedCoefficient>& frozen) {
    const std::size_t steps = cfg.steps();
    if (frozen.size() != steps + 1) throw std::invalid_argument("simulate_coupled: reference flow time grid does not match the configuration");
    const double dt = cfg.resolved_dt();
    const std::size_t threads = cfg.worker_count();
    std::vector<double> x = initial_positions(cfg), y = x, xn(x.size()), yn(x.size());
    CoupledResult res;
    res.sup_gaps.assign(x.size(), 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        const EmpiricalMeasure mu(x);
        const PreparedCoefficient own(cfg.sigma, mu, cfg.smoothing);
        const PreparedCoefficient& ref = frozen[k];
        parallel_for(x.size(), threads, [&](std::size_t i) {
            Rng g = substream(cfg.seed, i, k, StreamTag::driver_increment);
            const double dz = sampler.increment(dt, g);
            xn[i] = x[i] + own(x[i]) * dz;
            yn[i] = y[i] + ref(y[i]) * dz;
        });
        const double t = dt * static_cast<double>(k + 1);
        require_finite(xn, t);
        require_finite(yn, t);
        std::swap(x, xn);
        std::swap(y, yn);
        for (std::size_t i = 0; i < x.size(); ++i) res.sup_gaps[i] = std::max(res.sup_gaps[i], std::abs(x[i] - y[i]));
        if (!check_vasdis(x, y)) ++res.vasdis_violations;
    }
    return res;
}

} // namespace detail

/// Runs the interacting system and its frozen-flow copies (sigma against the
/// reference marginals) on the same increments, particle by particle.
inline CoupledResult simulate_coupled(const SimulationConfig& cfg, const MarginalFlow& reference_flow) {
    cfg.validate();
    reference_flow.validate();
    return detail::run_coupled(cfg, cfg.make_sampler(), detail::prepare_flow(cfg.sigma, reference_flow));
}

struct ChaosRateRow {
    std::size_t n = 0;
    double mean = 0.0;
    double standard_error = 0.0;
};

struct ChaosRateTable {
    std::vector<ChaosRateRow> rows;
    double slope = std::numeric_limits<double>::quiet_NaN();
    double slope_ci_low = std::numeric_limits<double>::quiet_NaN();
    double slope_ci_high = std::numeric_limits<double>::quiet_NaN();
    std::size_t vasdis_violations = 0;
    std::string status = "ok";
    bool degenerate() const { return status != "ok"; }
};

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;  ///< 95% confidence interval of the slope
    double ci_high = 0.0;
};

inline LogLogFit fit_log_log(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3) throw std::invalid_argument("fit_log_log: need at least 3 points");
    const std::size_t k = xs.size();
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("fit_log_log: values must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(k);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += r * r;
    }
    const double df = static_cast<double>(k - 2);
    const double se = std::sqrt(rss / df / sxx);
    const double t = boost::math::quantile(boost::math::complement(boost::math::students_t(df), 0.025));
    fit.ci_low = fit.slope - t * se;
    fit.ci_high = fit.slope + t * se;
    return fit;
}

struct ChaosConfig {
    SimulationConfig base;
    std::vector<std::size_t> n_list{50, 100, 200, 400, 800};
    std::size_t reps = 20;
    std::size_t n_ref = 8000;

    void validate() const {
        base.validate();
        if (n_list.size() < 4) throw std::invalid_argument("chaos: n_list needs at least 4 values");
        if (!std::is_sorted(n_list.begin(), n_list.end()) || std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
            throw std::invalid_argument("chaos: n_list must be strictly ascending");
        if (n_list.front() == 0) throw std::invalid_argument("chaos: n must be positive");
        if (reps < 2) throw std::invalid_argument("chaos: need at least 2 repetitions");
        if (n_ref < 10 * n_list.back()) throw std::invalid_argument("chaos: n_ref must be at least 10 * max(n_list)");
    }
};

/// The reference flow of a chaos experiment: an interacting run at n_ref on
/// a stream independent of every repetition.
inline MarginalFlow chaos_reference_flow(const ChaosConfig& cc) {
    SimulationConfig ref = cc.base;
    ref.n_particles = cc.n_ref;
    ref.seed = mix_key({cc.base.seed, static_cast<std::uint64_t>(StreamTag::reference)});
    return simulate(ref);
}

/// E sup_t |X^{i,n} - X^i|^2 for each n, averaged over particles and then over
/// repetitions, each repetition with a fresh X_0 sample and fresh increments.
inline ChaosRateTable chaos_rate_experiment(const ChaosConfig& cc, const MarginalFlow& reference_flow) {
    cc.validate();
    const DriverSampler sampler = cc.base.make_sampler();
    const auto frozen = detail::prepare_flow(cc.base.sigma, reference_flow);
    ChaosRateTable table;
    for (std::size_t n : cc.n_list) {
        std::vector<double> stats(cc.reps);
        for (std::size_t r = 0; r < cc.reps; ++r) {
            SimulationConfig cfg = cc.base;
            cfg.n_particles = n;
            cfg.seed = mix_key({cc.base.seed, static_cast<std::uint64_t>(StreamTag::experiment), n, r});
            const auto res = detail::run_coupled(cfg, sampler, frozen);
            table.vasdis_violations += res.vasdis_violations;
            double acc = 0.0;
            for (double gap : res.sup_gaps) acc += gap * gap;
            stats[r] = acc / static_cast<double>(n);
        }
        ChaosRateRow row;
        row.n = n;
        row.mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(cc.reps);
        double ss = 0.0;
        for (double s : stats) ss += (s - row.mean) * (s - row.mean);
        row.standard_error = std::sqrt(ss / static_cast<double>(cc.reps - 1) / static_cast<double>(cc.reps));
        table.rows.push_back(row);
    }
    const bool all_zero = std::all_of(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.mean == 0.0; });
    const bool any_zero = std::any_of(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.mean <= 0.0; });
    if (all_zero) {
        table.status = "degenerate: all-zero";
    } else if (any_zero) {
        table.status = "degenerate: some zero estimates";
    } else {
        std::vector<double> ns, ms;
        for (const auto& r : table.rows) {
            ns.push_back(static_cast<double>(r.n));
            ms.push_back(r.mean);
        }
        const auto fit = fit_log_log(ns, ms);
        table.slope = fit.slope;
        table.slope_ci_low = fit.ci_low;
        table.slope_ci_high = fit.ci_high;
    }
    return table;
}

inline ChaosRateTable chaos_rate_experiment(const ChaosConfig& cc) {
    cc.validate();
    return chaos_rate_experiment(cc, chaos_reference_flow(cc));
}

/// True when the row means decrease in n, allowing each step to rise by at
/// most two combined standard errors.
inline bool monotone_within_2se(const ChaosRateTable& t) {
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const auto& a = t.rows[i - 1];
        const auto& b = t.rows[i];
        if (b.mean > a.mean + 2.0 * std::hypot(a.standard_error, b.standard_error)) return false;
    }
    return true;
}

} // namespace levymv
