#pragma once

// Lévy driving noise: exact symmetric alpha-stable increments, triplet-specified
// drivers built from a diffusion part plus compound-Poisson jumps, and removal of
// jumps above a cutoff level.
//
// Normalization: a stable driver is parameterized by its characteristic-function
// constant c, E exp(i xi Z_t) = exp(-c t |xi|^alpha). The Lévy measure of the same
// process is K |y|^(-1-alpha) dy with K = c / kappa(alpha), see stable_kappa().

#include "levymv/quadrature.hpp"
#include "levymv/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace levymv {

struct StableDriverSpec {
    double alpha = 1.5;
    double scale = 1.0; ///< c in exp(-c |xi|^alpha)

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("stable driver: alpha must lie in (0, 2]");
        if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("stable driver: scale must be positive");
    }
};

/// kappa(alpha) = integral over R of (1 - cos u) |u|^(-1-alpha) du.
inline double stable_kappa(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable_kappa: alpha must lie in (0, 2)");
    if (std::abs(alpha - 1.0) < 1e-9) return std::numbers::pi;
    return 2.0 * boost::math::tgamma(1.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0) / alpha;
}

/// Jump-density constant K of the stable process with CF constant c.
inline double stable_jump_constant(const StableDriverSpec& spec) {
    return spec.scale / stable_kappa(spec.alpha);
}

/// Chambers-Mallows-Stuck draw with characteristic function exp(-|xi|^alpha).
template <class G>
double sample_standard_stable(double alpha, G& g) {
    const double v = std::numbers::pi * (uniform_open01(g) - 0.5);
    const double w = standard_exponential(g);
    if (alpha == 1.0) return std::tan(v);
    const double a = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
    const double b = std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
    return a * b;
}

template <class G>
double sample_stable_increment(const StableDriverSpec& spec, double dt, G& g) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_stable_increment: dt must be positive");
    return std::pow(spec.scale * dt, 1.0 / spec.alpha) * sample_standard_stable(spec.alpha, g);
}

// --- triplet drivers ---------------------------------------------------------

struct NoSmallJumps {};
/// K |y|^(-1-alpha) on [-1, 1].
struct PowerLawDensity {
    double K = 1.0;
    double alpha = 1.5;
};
/// Constant density `rate` on [-1, 1].
struct UniformDensity {
    double rate = 1.0;
};
struct CustomDensity {
    std::string name;
    std::function<double(double)> fn;
};
using SmallJumpDensity = std::variant<NoSmallJumps, PowerLawDensity, UniformDensity, CustomDensity>;

inline double evaluate(const SmallJumpDensity& density, double y) {
    if (y == 0.0 || std::abs(y) > 1.0) return 0.0;
    return std::visit(
        [y](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NoSmallJumps>) return 0.0;
            else if constexpr (std::is_same_v<T, PowerLawDensity>) return d.K * std::pow(std::abs(y), -1.0 - d.alpha);
            else if constexpr (std::is_same_v<T, UniformDensity>) return d.rate;
            else return d.fn(y);
        },
        density);
}

struct JumpAtom {
    double amplitude = 2.0; ///< must satisfy |amplitude| > 1
    double rate = 1.0;
};

/// K |y|^(-1-alpha) restricted to |y| > 1.
struct PowerTail {
    double K = 1.0;
    double alpha = 1.5;
};

struct BigJumpMeasure {
    std::vector<JumpAtom> atoms;
    std::optional<PowerTail> tail;

    double tail_rate() const { return tail ? 2.0 * tail->K / tail->alpha : 0.0; }
    double total_rate() const {
        double r = tail_rate();
        for (const auto& a : atoms) r += a.rate;
        return r;
    }
};

enum class SmallJumpScheme { gaussian_match, drop };

struct LevyTripletSpec {
    double gaussian_a = 0.0; ///< Gaussian part has variance a*dt
    double drift_b = 0.0;
    SmallJumpDensity small_jumps = NoSmallJumps{};
    BigJumpMeasure big_jumps;
    double small_jump_cutoff_delta = 0.05;
    SmallJumpScheme scheme = SmallJumpScheme::gaussian_match;

    void validate() const {
        if (!(gaussian_a >= 0.0) || !std::isfinite(gaussian_a)) throw std::invalid_argument("triplet: gaussian_a must be >= 0");
        if (!std::isfinite(drift_b)) throw std::invalid_argument("triplet: drift_b must be finite");
        if (!(small_jump_cutoff_delta > 0.0 && small_jump_cutoff_delta <= 1.0))
            throw std::invalid_argument("triplet: small_jump_cutoff_delta must lie in (0, 1]");
        for (const auto& a : big_jumps.atoms) {
            if (!(std::abs(a.amplitude) > 1.0)) throw std::invalid_argument("triplet: big-jump atoms need |amplitude| > 1");
            if (!(a.rate >= 0.0) || !std::isfinite(a.rate)) throw std::invalid_argument("triplet: atom rates must be >= 0");
        }
        if (big_jumps.tail && !(big_jumps.tail->K > 0.0 && big_jumps.tail->alpha > 0.0))
            throw std::invalid_argument("triplet: power tail needs K > 0 and alpha > 0");
        if (const auto* p = std::get_if<PowerLawDensity>(&small_jumps); p && !(p->K >= 0.0 && p->alpha > 0.0 && p->alpha < 2.0))
            throw std::invalid_argument("triplet: power-law small-jump density needs K >= 0 and alpha in (0, 2)");
        if (const auto* u = std::get_if<UniformDensity>(&small_jumps); u && !(u->rate >= 0.0))
            throw std::invalid_argument("triplet: uniform small-jump rate must be >= 0");
    }

    /// Stable driver with CF constant c, as a triplet whose jumps below
    /// `delta` are replaced by a matched Gaussian.
    static LevyTripletSpec from_stable(const StableDriverSpec& stable, double delta) {
        stable.validate();
        if (stable.alpha >= 2.0) {
            LevyTripletSpec t;
            t.gaussian_a = 2.0 * stable.scale;
            t.small_jump_cutoff_delta = delta;
            return t;
        }
        const double K = stable_jump_constant(stable);
        LevyTripletSpec t;
        t.small_jumps = PowerLawDensity{K, stable.alpha};
        t.big_jumps.tail = PowerTail{K, stable.alpha};
        t.small_jump_cutoff_delta = delta;
        t.scheme = SmallJumpScheme::gaussian_match;
        return t;
    }
};

struct RecordedJump {
    double time_offset = 0.0;
    double amplitude = 0.0;
};

/// One step of a triplet driver; big_jumps lists every jump with |y| > 1.
struct IncrementRecord {
    double total = 0.0;
    std::vector<RecordedJump> big_jumps;
};

/// Removes recorded jumps larger than level_n in absolute value.
inline double truncate_increments(const IncrementRecord& record, double level_n) {
    if (!(level_n > 0.0)) throw std::invalid_argument("truncate_increments: level must be positive");
    double total = record.total;
    for (const auto& j : record.big_jumps)
        if (std::abs(j.amplitude) > level_n) total -= j.amplitude;
    return total;
}

inline IncrementRecord truncated_record(const IncrementRecord& record, double level_n) {
    IncrementRecord out;
    out.total = truncate_increments(record, level_n);
    for (const auto& j : record.big_jumps)
        if (std::abs(j.amplitude) <= level_n) out.big_jumps.push_back(j);
    return out;
}

/// Precomputed sampling tables for a triplet driver.
class TripletSampler {
public:
    explicit TripletSampler(LevyTripletSpec spec, std::size_t cells_per_side = 1024) : spec_(std::move(spec)) {
        spec_.validate();
        const double delta = spec_.small_jump_cutoff_delta;
        auto beta = [this](double y) { return evaluate(spec_.small_jumps, y); };

        // Second moment below delta: must be finite for a Lévy measure.
        auto y2pos = [&](double y) { return y * y * beta(y); };
        auto y2neg = [&](double y) { return y * y * beta(-y); };
        variance_below_delta_ = integrate_near_zero(y2pos, delta) + integrate_near_zero(y2neg, delta);
        if (!std::isfinite(variance_below_delta_))
            throw std::invalid_argument("triplet: integral of y^2 beta_1 near 0 is not finite");

        if (delta < 1.0) {
            const double ratio = std::pow(1.0 / delta, 1.0 / static_cast<double>(cells_per_side));
            std::vector<double> edges(cells_per_side + 1);
            for (std::size_t j = 0; j <= cells_per_side; ++j) edges[j] = delta * std::pow(ratio, static_cast<double>(j));
            edges.back() = 1.0;
            for (int side : {1, -1}) {
                for (std::size_t j = 0; j < cells_per_side; ++j) {
                    const double lo = edges[j], hi = edges[j + 1];
                    auto f = [&](double y) { return beta(side * y); };
                    const double mass = gauss_panel(f, lo, hi);
                    const double moment = side * gauss_panel([&](double y) { return y * f(y); }, lo, hi);
                    if (!(mass >= 0.0) || !std::isfinite(mass))
                        throw std::invalid_argument("triplet: small-jump density is negative or not integrable on (delta, 1]");
                    cells_.push_back({side > 0 ? lo : -hi, side > 0 ? hi : -lo});
                    intensity_ += mass;
                    cumulative_.push_back(intensity_);
                    mean_ += moment;
                }
            }
        }
        if (!std::isfinite(intensity_)) throw std::invalid_argument("triplet: small-jump intensity above delta is not finite");
    }

    const LevyTripletSpec& spec() const { return spec_; }
    double small_jump_intensity() const { return intensity_; }
    double small_jump_mean() const { return mean_; }
    double variance_below_delta() const { return variance_below_delta_; }
    double big_jump_rate() const { return spec_.big_jumps.total_rate(); }

    /// Variance rate of the process with jumps above `level` removed; infinite
    /// when an untruncated power tail is present with alpha <= 2.
    double second_moment_rate(double level = std::numeric_limits<double>::infinity()) const {
        double v = spec_.gaussian_a + variance_below_delta_;
        for (std::size_t k = 0; k < cells_.size(); ++k) {
            const double mass = cumulative_[k] - (k ? cumulative_[k - 1] : 0.0);
            const double mid = 0.5 * (cells_[k].lo + cells_[k].hi);
            v += mass * mid * mid;
        }
        for (const auto& a : spec_.big_jumps.atoms)
            if (std::abs(a.amplitude) <= level) v += a.rate * a.amplitude * a.amplitude;
        if (const auto& t = spec_.big_jumps.tail) {
            if (!std::isfinite(level)) return t->alpha > 2.0 ? v + 2.0 * t->K / (t->alpha - 2.0) : std::numeric_limits<double>::infinity();
            if (level > 1.0) {
                const double e = 2.0 - t->alpha;
                v += 2.0 * t->K * (std::abs(e) < 1e-12 ? std::log(level) : (std::pow(level, e) - 1.0) / e);
            }
        }
        return v;
    }

    template <class G>
    IncrementRecord sample(double dt, G& g) const {
        if (!(dt > 0.0)) throw std::invalid_argument("sample_triplet_increment: dt must be positive");
        IncrementRecord rec;
        double total = spec_.drift_b * dt - mean_ * dt;
        double var = spec_.gaussian_a;
        if (spec_.scheme == SmallJumpScheme::gaussian_match) var += variance_below_delta_;
        if (var > 0.0) total += std::sqrt(var * dt) * standard_normal(g);

        const auto n_small = poisson_count(g, intensity_ * dt);
        for (std::uint64_t k = 0; k < n_small; ++k) total += draw_small(g);

        const double big_rate = spec_.big_jumps.total_rate();
        const auto n_big = poisson_count(g, big_rate * dt);
        for (std::uint64_t k = 0; k < n_big; ++k) {
            const double offset = dt * uniform_open01(g);
            const double amp = draw_big(g, big_rate);
            rec.big_jumps.push_back({offset, amp});
            total += amp;
        }
        std::sort(rec.big_jumps.begin(), rec.big_jumps.end(),
                  [](const RecordedJump& a, const RecordedJump& b) { return a.time_offset < b.time_offset; });
        rec.total = total;
        return rec;
    }

private:
    struct Cell {
        double lo, hi;
    };

    template <class G>
    double draw_small(G& g) const {
        const double u = uniform_open01(g) * intensity_;
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cells_.size() - 1);
        const double below = k ? cumulative_[k - 1] : 0.0;
        const double mass = cumulative_[k] - below;
        const double frac = mass > 0.0 ? std::clamp((u - below) / mass, 0.0, 1.0) : 0.5;
        return cells_[k].lo + frac * (cells_[k].hi - cells_[k].lo);
    }

    template <class G>
    double draw_big(G& g, double big_rate) const {
        double u = uniform_open01(g) * big_rate;
        for (const auto& a : spec_.big_jumps.atoms) {
            if (u < a.rate) return a.amplitude;
            u -= a.rate;
        }
        const auto& t = *spec_.big_jumps.tail;
        const double mag = std::pow(uniform_open01(g), -1.0 / t.alpha);
        return uniform_open01(g) < 0.5 ? -mag : mag;
    }

    LevyTripletSpec spec_;
    std::vector<Cell> cells_;
    std::vector<double> cumulative_;
    double intensity_ = 0.0;
    double mean_ = 0.0;
    double variance_below_delta_ = 0.0;
};

template <class G>
IncrementRecord sample_triplet_increment(const LevyTripletSpec& spec, double dt, G& g) {
    return TripletSampler(spec).sample(dt, g);
}

using DriverSpec = std::variant<StableDriverSpec, LevyTripletSpec>;

/// Per-step increment source used by the particle engine. A stable driver
/// without truncation is sampled exactly; with a truncation level it goes
/// through its triplet representation so big jumps can be removed.
class DriverSampler {
public:
    DriverSampler(const DriverSpec& spec, std::optional<double> truncation, double stable_delta = 0.05)
        : truncation_(truncation) {
        if (truncation_ && !(*truncation_ >= 1.0))
            throw std::invalid_argument("driver: truncation level N must be >= 1");
        if (const auto* s = std::get_if<StableDriverSpec>(&spec)) {
            s->validate();
            if (!truncation_) {
                stable_ = *s;
                return;
            }
            triplet_.emplace(LevyTripletSpec::from_stable(*s, stable_delta));
        } else {
            triplet_.emplace(std::get<LevyTripletSpec>(spec));
        }
    }

    template <class G>
    double increment(double dt, G& g) const {
        if (stable_) return sample_stable_increment(*stable_, dt, g);
        auto rec = triplet_->sample(dt, g);
        return truncation_ ? truncate_increments(rec, *truncation_) : rec.total;
    }

    bool square_integrable() const {
        if (stable_) return stable_->alpha >= 2.0;
        return std::isfinite(triplet_->second_moment_rate(truncation_.value_or(std::numeric_limits<double>::infinity())));
    }

    bool exact_stable() const { return stable_.has_value(); }
    const TripletSampler* triplet() const { return triplet_ ? &*triplet_ : nullptr; }

private:
    std::optional<StableDriverSpec> stable_;
    std::optional<TripletSampler> triplet_;
    std::optional<double> truncation_;
};

} // namespace levymv
