#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "scene.hpp"
#include "slab.hpp"
#include "tracer.hpp"

namespace o2i {

/// Free-space path loss in dB, 20 log10(4 pi d f / c).
inline double free_space_loss_db(double distance_m, double frequency_hz) {
    if (!(distance_m > 0.0) || !(frequency_hz > 0.0)) throw DomainError("free-space loss needs positive distance and frequency");
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * frequency_hz / speed_of_light);
}

struct FilmParameters {
    double triple_film_m = 0.0;
    double double_film_m = 0.0;

    void validate() const {
        if (!(triple_film_m >= 0.0) || !(double_film_m >= 0.0)) throw ValidationError("film thickness must be >= 0");
    }
    double for_role(StackRole r) const {
        if (r == StackRole::window_triple) return triple_film_m;
        if (r == StackRole::window_double) return double_film_m;
        return 0.0;
    }
};

/// Everything needed to turn an annotated path into a gain at one band.
struct PathGainModel {
    MaterialTable materials = MaterialTable::defaults();
    StackSet stacks = StackSet::defaults();
    FilmParameters films;
    double canopy_loss_db_per_m = 0.0;
    PolarizationPolicy polarization = PolarizationPolicy::te;

    void validate() const {
        films.validate();
        if (!(canopy_loss_db_per_m >= 0.0)) throw ValidationError("canopy loss must be >= 0 dB/m");
    }
};

enum class ModelVariant { full_floor_plan, exteriors_only, no_metal_film };

inline std::string_view to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::full_floor_plan: return "full_floor_plan";
        case ModelVariant::exteriors_only: return "exteriors_only";
        case ModelVariant::no_metal_film: return "no_metal_film";
    }
    return "full_floor_plan";
}

inline std::optional<ModelVariant> parse_model_variant(std::string_view s) {
    for (auto v : {ModelVariant::full_floor_plan, ModelVariant::exteriors_only, ModelVariant::no_metal_film})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

/// Scene seen by a variant: exteriors_only drops every interior wall point.
inline PointCloud apply_variant(const PointCloud& cloud, ModelVariant v) {
    if (v != ModelVariant::exteriors_only) return cloud;
    return cloud.filtered([](ObjectClass c) { return c != ObjectClass::interior_wall; });
}

inline PathGainModel apply_variant(PathGainModel model, ModelVariant v) {
    if (v == ModelVariant::no_metal_film) model.films = {};
    return model;
}

// Grazing incidence is clipped just below pi/2 where the slab model is defined.
inline double usable_angle(double angle) { return std::fmin(angle, std::numbers::pi / 2 - 1e-9); }

/// Loss terms of one path in dB (all >= 0 for passive stacks, canopy, free space).
struct GainBreakdown {
    double free_space_db = 0.0;
    double window_db = 0.0;
    double interior_wall_db = 0.0;
    double canopy_db = 0.0;
    double reflection_db = 0.0;

    double total_loss_db() const { return free_space_db + window_db + interior_wall_db + canopy_db + reflection_db; }
    double gain_db() const { return -total_loss_db(); }
    double excess_loss_db() const { return window_db + interior_wall_db + canopy_db + reflection_db; }
};

inline double stack_penetration_loss_db(const PathGainModel& m, StackRole role, double angle, double frequency_hz) {
    return penetration_loss_db(m.stacks.get(role), m.materials, usable_angle(angle), frequency_hz, m.films.for_role(role),
                               m.polarization);
}

inline double stack_reflection_loss_db(const PathGainModel& m, StackRole role, double angle, double frequency_hz,
                                       bool from_front) {
    auto layers = resolve_stack(m.stacks.get(role), m.materials, frequency_hz, m.films.for_role(role));
    if (!from_front) layers = reversed(layers);
    return reflection_loss_db(layers, usable_angle(angle), frequency_hz, m.polarization);
}

inline GainBreakdown path_gain_breakdown(const PropagationPath& path, const PathGainModel& model, double frequency_hz) {
    if (!path.annotated) throw ValidationError("path has not been annotated by the tracer");
    GainBreakdown g;
    g.free_space_db = free_space_loss_db(path.geometric_length_m, frequency_hz);
    for (const Interaction& in : path.interactions) {
        switch (in.kind) {
            case InteractionKind::window_penetration: {
                const auto role = model.stacks.role_for(in.object_class);
                g.window_db += stack_penetration_loss_db(model, *role, in.incidence_angle, frequency_hz);
                break;
            }
            case InteractionKind::interior_wall_penetration:
                g.interior_wall_db += stack_penetration_loss_db(model, StackRole::interior_wall, in.incidence_angle,
                                                                frequency_hz) *
                                      in.fresnel_scale_q;
                break;
            case InteractionKind::canopy_penetration:
                g.canopy_db += model.canopy_loss_db_per_m * in.penetration_length_m * in.fresnel_scale_q;
                break;
            case InteractionKind::reflection: {
                const auto role = model.stacks.role_for(in.object_class);
                if (!role) throw ValidationError("reflection on an object class without a stack");
                g.reflection_db += stack_reflection_loss_db(model, *role, in.incidence_angle, frequency_hz, in.from_front);
                break;
            }
        }
    }
    return g;
}

inline double path_gain(const PropagationPath& path, const PathGainModel& model, double frequency_hz) {
    return path_gain_breakdown(path, model, frequency_hz).gain_db();
}

// ---------------------------------------------------------------------------
// PADP
// ---------------------------------------------------------------------------

struct DiscretePath {
    double delay_ns = 0.0;
    double azimuth_deg = 0.0;
    double gain_db = 0.0;
};

/// Power-angle-delay grid: 2 ns x 5 deg bins, delay 0..limit, azimuth [0, 360).
class Padp {
public:
    static constexpr double delay_step_ns = 2.0;
    static constexpr double azimuth_step_deg = 5.0;
    static constexpr std::size_t azimuth_bins = 72;

    explicit Padp(double delay_limit_ns = 350.0) : delay_limit_ns_(delay_limit_ns) {
        if (!(delay_limit_ns > 0.0)) throw ConfigError("delay limit must be positive");
        delay_bins_ = static_cast<std::size_t>(std::floor(delay_limit_ns / delay_step_ns)) + 1;
        power_.assign(delay_bins_ * azimuth_bins, 0.0);
    }

    std::size_t delay_bins() const { return delay_bins_; }
    double delay_limit_ns() const { return delay_limit_ns_; }
    double delay_of(std::size_t i) const { return static_cast<double>(i) * delay_step_ns; }
    double azimuth_of(std::size_t j) const { return static_cast<double>(j) * azimuth_step_deg; }

    static double wrap_deg(double a) {
        double w = std::fmod(a, 360.0);
        if (w < 0.0) w += 360.0;
        if (w >= 360.0) w = 0.0;
        return w;
    }

    static std::size_t azimuth_bin(double azimuth_deg) {
        return static_cast<std::size_t>(std::llround(wrap_deg(azimuth_deg) / azimuth_step_deg)) % azimuth_bins;
    }
    std::optional<std::size_t> delay_bin(double delay_ns) const {
        if (!(delay_ns >= 0.0) || delay_ns > delay_limit_ns_) return std::nullopt;
        const auto i = static_cast<std::size_t>(std::llround(delay_ns / delay_step_ns));
        return std::min(i, delay_bins_ - 1);
    }

    /// Deposits a path; returns false when it lies beyond the delay limit.
    bool add(double delay_ns, double azimuth_deg, double gain_db) {
        if (!std::isfinite(gain_db)) throw DomainError("path gain must be finite");
        const auto i = delay_bin(delay_ns);
        if (!i) return false;
        power_[*i * azimuth_bins + azimuth_bin(azimuth_deg)] += std::pow(10.0, gain_db / 10.0);
        return true;
    }

    double power_linear(std::size_t i, std::size_t j) const { return power_[i * azimuth_bins + j]; }
    double power_db(std::size_t i, std::size_t j) const {
        const double p = power_linear(i, j);
        return p > 0.0 ? 10.0 * std::log10(p) : -std::numeric_limits<double>::infinity();
    }
    bool occupied(std::size_t i, std::size_t j) const { return power_linear(i, j) > 0.0; }

    double max_power_db() const {
        const double m = *std::max_element(power_.begin(), power_.end());
        return m > 0.0 ? 10.0 * std::log10(m) : -std::numeric_limits<double>::infinity();
    }

    bool is_local_maximum(std::size_t i, std::size_t j) const {
        const double p = power_linear(i, j);
        if (!(p > 0.0)) return false;
        for (int di = -1; di <= 1; ++di) {
            const auto ii = static_cast<long long>(i) + di;
            if (ii < 0 || ii >= static_cast<long long>(delay_bins_)) continue;
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const auto jj = (j + azimuth_bins + static_cast<std::size_t>(dj + 1) - 1) % azimuth_bins;
                if (power_linear(static_cast<std::size_t>(ii), jj) > p) return false;
            }
        }
        return true;
    }

    /// Local maxima of the grid, by delay then azimuth.
    std::vector<DiscretePath> discrete_paths() const {
        std::vector<DiscretePath> out;
        for (std::size_t i = 0; i < delay_bins_; ++i)
            for (std::size_t j = 0; j < azimuth_bins; ++j)
                if (is_local_maximum(i, j)) out.push_back({delay_of(i), azimuth_of(j), power_db(i, j)});
        return out;
    }

private:
    double delay_limit_ns_;
    std::size_t delay_bins_ = 0;
    std::vector<double> power_;  // linear, row-major by delay
};

inline Padp synthesize_padp(std::span<const DiscretePath> paths, double delay_limit_ns = 350.0) {
    Padp grid(delay_limit_ns);
    for (const auto& p : paths) grid.add(p.delay_ns, p.azimuth_deg, p.gain_db);
    return grid;
}

inline std::vector<DiscretePath> as_discrete(std::span<const PropagationPath> paths) {
    std::vector<DiscretePath> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        if (!p.gain_db) throw ValidationError("path gain has not been assigned");
        out.push_back({p.delay_ns(), p.aoa_azimuth_deg(), *p.gain_db});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Large-scale parameters
// ---------------------------------------------------------------------------

struct Lsp {
    double path_loss_db = 0.0;
    double delay_spread_ns = 0.0;
    double azimuth_spread_deg = 0.0;
    std::size_t paths_used = 0;
};

/// Paths within `dynamic_range_db` of the strongest one.
inline std::vector<DiscretePath> within_dynamic_range(std::span<const DiscretePath> paths, double dynamic_range_db) {
    if (paths.empty()) throw DomainError("no paths to filter");
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : paths) top = std::fmax(top, p.gain_db);
    std::vector<DiscretePath> kept;
    for (const auto& p : paths)
        if (p.gain_db >= top - dynamic_range_db) kept.push_back(p);
    return kept;
}

/// Wraps an angle difference to (-180, 180].
inline double wrap_deg_signed(double a) {
    double w = std::fmod(a, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

inline Lsp compute_lsps(std::span<const DiscretePath> paths, double dynamic_range_db = 20.0) {
    if (paths.empty()) throw DomainError("cannot compute LSPs of an empty path set");
    if (!(dynamic_range_db >= 0.0)) throw ConfigError("dynamic range must be >= 0 dB");
    for (const auto& p : paths)
        if (!std::isfinite(p.gain_db)) throw DomainError("path gain must be finite");
    const auto kept = within_dynamic_range(paths, dynamic_range_db);

    // moments are taken relative to the strongest path, so a lone path has exactly zero spread
    std::size_t ref = 0;
    for (std::size_t k = 1; k < kept.size(); ++k)
        if (kept[k].gain_db > kept[ref].gain_db) ref = k;
    const double ref_delay = kept[ref].delay_ns, ref_az = kept[ref].azimuth_deg;

    double total = 0.0, delay_sum = 0.0, s = 0.0, c = 0.0;
    std::vector<double> w(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        w[k] = std::pow(10.0, kept[k].gain_db / 10.0);
        total += w[k];
        delay_sum += w[k] * (kept[k].delay_ns - ref_delay);
        const double a = deg_to_rad(wrap_deg_signed(kept[k].azimuth_deg - ref_az));
        s += w[k] * std::sin(a);
        c += w[k] * std::cos(a);
    }
    const double mean_delay = delay_sum / total;
    const double mean_az = rad_to_deg(std::atan2(s, c));
    double dvar = 0.0, avar = 0.0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const double dt = (kept[k].delay_ns - ref_delay) - mean_delay;
        const double da = wrap_deg_signed(wrap_deg_signed(kept[k].azimuth_deg - ref_az) - mean_az);
        dvar += w[k] * dt * dt;
        avar += w[k] * da * da;
    }
    Lsp out;
    out.path_loss_db = -10.0 * std::log10(total);
    out.delay_spread_ns = std::sqrt(dvar / total);
    out.azimuth_spread_deg = std::sqrt(avar / total);
    out.paths_used = kept.size();
    return out;
}

inline Lsp compute_lsps(const Padp& padp, double dynamic_range_db = 20.0) {
    const auto d = padp.discrete_paths();
    return compute_lsps(d, dynamic_range_db);
}

struct LspRecord {
    std::string link_id;
    double band_hz = 0.0;
    double incidence_deg = std::numeric_limits<double>::quiet_NaN();
    Lsp lsp;
    ModelVariant variant = ModelVariant::full_floor_plan;
};

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

inline Summary summarize(std::span<const double> v) {
    if (v.empty()) return {};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

enum class LspMetric { path_loss, delay_spread, azimuth_spread };

inline double metric_of(const Lsp& l, LspMetric m) {
    switch (m) {
        case LspMetric::path_loss: return l.path_loss_db;
        case LspMetric::delay_spread: return l.delay_spread_ns;
        case LspMetric::azimuth_spread: return l.azimuth_spread_deg;
    }
    return 0.0;
}

inline std::string_view to_string(LspMetric m) {
    switch (m) {
        case LspMetric::path_loss: return "pl_db";
        case LspMetric::delay_spread: return "ds_ns";
        case LspMetric::azimuth_spread: return "as_deg";
    }
    return "pl_db";
}

inline constexpr LspMetric all_metrics[] = {LspMetric::path_loss, LspMetric::delay_spread, LspMetric::azimuth_spread};

struct MetricComparison {
    LspMetric metric = LspMetric::path_loss;
    double mean_error = 0.0;  // simulated - reference; positive = simulation larger
    double rms_error = 0.0;
    double mean_error_pct = 0.0;  // relative to the reference mean
    double rms_error_pct = 0.0;
    Summary simulated;
    Summary reference;
};

struct BandComparison {
    double band_hz = 0.0;
    std::size_t links = 0;
    std::vector<MetricComparison> metrics;
};

/// Per-band mean and RMS errors of matched (link, band) records.
inline std::vector<BandComparison> compare_lsps(std::span<const LspRecord> simulated,
                                                std::span<const LspRecord> reference) {
    using Key = std::pair<double, std::string>;
    auto index = [](std::span<const LspRecord> recs) {
        std::map<Key, const LspRecord*> m;
        for (const auto& r : recs) {
            double band = r.band_hz;
            for (const auto& [k, v] : m)
                if (MaterialTable::same_band(k.first, band)) band = k.first;
            if (!m.emplace(Key{band, r.link_id}, &r).second)
                throw ValidationError("duplicate LSP record for link " + r.link_id);
        }
        return m;
    };
    const auto sim = index(simulated);
    const auto ref = index(reference);
    auto band_match = [](const Key& a, const Key& b) {
        return a.second == b.second && MaterialTable::same_band(a.first, b.first);
    };
    if (sim.size() != ref.size()) throw ValidationError("simulated and reference link sets differ");
    std::map<double, std::vector<std::pair<const LspRecord*, const LspRecord*>>> by_band;
    auto rit = ref.begin();
    for (const auto& [k, s] : sim) {
        if (!band_match(k, rit->first))
            throw ValidationError("link " + k.second + " is missing from one of the compared sets");
        by_band[k.first].emplace_back(s, rit->second);
        ++rit;
    }
    std::vector<BandComparison> out;
    for (const auto& [band, pairs] : by_band) {
        BandComparison bc;
        bc.band_hz = band;
        bc.links = pairs.size();
        for (const LspMetric m : all_metrics) {
            std::vector<double> sv, rv;
            double se = 0.0, sq = 0.0;
            for (const auto& [s, r] : pairs) {
                const double a = metric_of(s->lsp, m), b = metric_of(r->lsp, m);
                sv.push_back(a);
                rv.push_back(b);
                se += a - b;
                sq += (a - b) * (a - b);
            }
            const double n = static_cast<double>(pairs.size());
            MetricComparison mc;
            mc.metric = m;
            mc.mean_error = se / n;
            mc.rms_error = std::sqrt(sq / n);
            mc.simulated = summarize(sv);
            mc.reference = summarize(rv);
            auto rel = [&](double e) {
                if (e == 0.0) return 0.0;
                const double denom = std::fabs(mc.reference.mean);
                return denom > 0.0 ? 100.0 * e / denom : std::numeric_limits<double>::quiet_NaN();
            };
            mc.mean_error_pct = rel(mc.mean_error);
            mc.rms_error_pct = rel(mc.rms_error);
            bc.metrics.push_back(mc);
        }
        out.push_back(std::move(bc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Link simulation
// ---------------------------------------------------------------------------

struct SimulationOptions {
    int max_bounces = max_supported_bounces;
    double dynamic_range_db = 20.0;
    double delay_limit_ns = 350.0;
    SearchMode mode = SearchMode::indexed;
    unsigned workers = 1;
};

struct LinkResult {
    Link link;
    double band_hz = 0.0;
    std::vector<PropagationPath> paths;  // with gains, delay-limited
    PropagationPath direct;              // traced even when obstructed
    std::optional<Lsp> lsp;              // empty when no path survives
    double incidence_deg = std::numeric_limits<double>::quiet_NaN();
};

/// Incidence angle of the first facade-window crossing on a path, degrees.
inline double window_incidence_deg(const PropagationPath& p) {
    for (const auto& in : p.interactions)
        if (in.kind == InteractionKind::window_penetration) return rad_to_deg(in.incidence_angle);
    return std::numeric_limits<double>::quiet_NaN();
}

inline LinkResult simulate_link(const Tracer& tracer, const Link& link, double band_hz, const PathGainModel& model,
                                const SimulationOptions& opt) {
    TraceOptions topt;
    topt.wavelength_m = wavelength(band_hz);
    topt.max_bounces = opt.max_bounces;
    topt.mode = opt.mode;
    topt.workers = opt.workers;

    LinkResult r;
    r.link = link;
    r.band_hz = band_hz;
    r.direct = tracer.trace_direct(link.tx, link.rx, topt);
    r.incidence_deg = window_incidence_deg(r.direct);
    for (auto& p : tracer.trace(link.tx, link.rx, topt)) {
        if (p.delay_ns() > opt.delay_limit_ns) continue;
        p.gain_db = path_gain(p, model, band_hz);
        r.paths.push_back(std::move(p));
    }
    if (!r.paths.empty()) {
        const auto d = as_discrete(r.paths);
        r.lsp = compute_lsps(d, opt.dynamic_range_db);
    }
    return r;
}

}  // namespace o2i
