#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "tracer.hpp"

namespace o2i {

inline double nm_to_m(double nm) { return nm * 1e-9; }

// ---------------------------------------------------------------------------
// Direct-path refinement
// ---------------------------------------------------------------------------

struct RefineOptions {
    double delay_window_ns = 2.0;
    double azimuth_window_deg = 5.0;
    double noise_floor_db = 40.0;  // bins this far below the grid maximum count as empty
};

struct DirectPathObservation {
    std::string link_id;
    double band_hz = 0.0;
    double tau_ns = 0.0;  // coarse
    double phi_deg = 0.0;
    double refined_tau_ns = 0.0;
    double refined_phi_deg = 0.0;
    double gain_db = 0.0;  // at the refined bin
    double excess_loss_db = 0.0;
};

/// Excess loss of a direct path: -G minus the free-space loss over c * tau.
inline double excess_loss_from_gain(double gain_db, double tau_ns, double band_hz) {
    return -gain_db - free_space_loss_db(tau_ns * 1e-9 * speed_of_light, band_hz);
}

/// Strongest PADP bin within +-delay window x +-azimuth window of (tau, phi).
inline DirectPathObservation refine_direct_path(const Padp& padp, const std::string& link_id, double band_hz,
                                                double tau_ns, double phi_deg, const RefineOptions& opt = {}) {
    if (!(tau_ns >= 0.0) || tau_ns > padp.delay_limit_ns())
        throw DomainError("coarse delay " + std::to_string(tau_ns) + " ns is outside the PADP");
    if (!(phi_deg >= 0.0) || !(phi_deg < 360.0))
        throw DomainError("coarse azimuth " + std::to_string(phi_deg) + " deg is outside [0, 360)");
    const double floor_db = padp.max_power_db() - opt.noise_floor_db;
    const double tol = 1e-9;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < padp.delay_bins(); ++i) {
        if (std::fabs(padp.delay_of(i) - tau_ns) > opt.delay_window_ns + tol) continue;
        for (std::size_t j = 0; j < Padp::azimuth_bins; ++j) {
            if (std::fabs(wrap_deg_signed(padp.azimuth_of(j) - phi_deg)) > opt.azimuth_window_deg + tol) continue;
            if (!padp.occupied(i, j)) continue;
            const double p = padp.power_db(i, j);
            if (p < floor_db) continue;
            if (p > best) {
                best = p;
                bi = i;
                bj = j;
                found = true;
            }
        }
    }
    if (!found) throw DomainError("direct path not found for link " + link_id);
    DirectPathObservation o;
    o.link_id = link_id;
    o.band_hz = band_hz;
    o.tau_ns = tau_ns;
    o.phi_deg = phi_deg;
    o.refined_tau_ns = padp.delay_of(bi);
    o.refined_phi_deg = padp.azimuth_of(bj);
    o.gain_db = best;
    o.excess_loss_db = excess_loss_from_gain(best, o.refined_tau_ns, band_hz);
    return o;
}

// ---------------------------------------------------------------------------
// Simulated excess loss
// ---------------------------------------------------------------------------

/// Decomposition of a direct path's excess loss into a parameter-free part and
/// the parts driven by the calibrated quantities.
struct ExcessTerms {
    double fixed_db = 0.0;                // interior walls, q-scaled
    std::vector<double> triple_angles;    // incidence angles of triple-glass crossings
    std::vector<double> double_angles;    // same for double glass
    double canopy_factor_m = 0.0;         // sum of d * q over canopies
};

inline ExcessTerms excess_terms(const PropagationPath& direct, const PathGainModel& model, double band_hz) {
    if (!direct.annotated) throw ValidationError("path has not been annotated by the tracer");
    ExcessTerms t;
    for (const Interaction& in : direct.interactions) {
        switch (in.kind) {
            case InteractionKind::window_penetration:
                (in.object_class == ObjectClass::window_double ? t.double_angles : t.triple_angles)
                    .push_back(in.incidence_angle);
                break;
            case InteractionKind::interior_wall_penetration:
                t.fixed_db += stack_penetration_loss_db(model, StackRole::interior_wall, in.incidence_angle, band_hz) *
                              in.fresnel_scale_q;
                break;
            case InteractionKind::canopy_penetration:
                t.canopy_factor_m += in.penetration_length_m * in.fresnel_scale_q;
                break;
            case InteractionKind::reflection: break;
        }
    }
    return t;
}

/// Summed window loss over the given crossings for one stack and film thickness.
inline double window_term_db(std::span<const double> angles, const PathGainModel& model, StackRole role,
                             double film_m, double band_hz) {
    if (angles.empty()) return 0.0;
    const auto layers = resolve_stack(model.stacks.get(role), model.materials, band_hz, film_m);
    double sum = 0.0;
    for (const double a : angles) sum += penetration_loss_db(layers, usable_angle(a), band_hz, model.polarization);
    return sum;
}

// Shared by the forward model and the grid search so both add in the same order.
inline double combine_excess(double fixed_db, double triple_db, double double_db, double canopy_db_per_m,
                             double canopy_factor_m) {
    return fixed_db + triple_db + double_db + canopy_db_per_m * canopy_factor_m;
}

inline double simulated_excess_loss(const ExcessTerms& t, const PathGainModel& model, double band_hz,
                                    double triple_film_m, double double_film_m, double canopy_db_per_m) {
    return combine_excess(t.fixed_db, window_term_db(t.triple_angles, model, StackRole::window_triple, triple_film_m, band_hz),
                          window_term_db(t.double_angles, model, StackRole::window_double, double_film_m, band_hz),
                          canopy_db_per_m, t.canopy_factor_m);
}

/// Excess loss of an annotated direct path under the model's own films and canopy loss.
inline double simulated_excess_loss(const PropagationPath& direct, const PathGainModel& model, double band_hz) {
    return simulated_excess_loss(excess_terms(direct, model, band_hz), model, band_hz, model.films.triple_film_m,
                                 model.films.double_film_m, model.canopy_loss_db_per_m);
}

// ---------------------------------------------------------------------------
// Grid-search calibration
// ---------------------------------------------------------------------------

struct Grid {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 1;

    double value(std::size_t k) const { return start + step * static_cast<double>(k); }
    double last() const { return value(count - 1); }
    void validate(const char* what) const {
        if (count == 0) throw ConfigError(std::string(what) + " grid is empty");
        if (count > 1 && !(step > 0.0)) throw ConfigError(std::string(what) + " grid step must be positive");
        if (!(start >= 0.0)) throw ConfigError(std::string(what) + " grid must start at >= 0");
    }
    /// Index of the grid point equal to v, if any.
    std::optional<std::size_t> index_of(double v) const {
        for (std::size_t k = 0; k < count; ++k)
            if (value(k) == v) return k;
        return std::nullopt;
    }
};

struct CalibrationGrids {
    Grid film_nm{0.0, 1.0, 101};
    Grid canopy_db_per_m{0.0, 0.1, 51};
};

struct CalibrationSample {
    DirectPathObservation observation;
    ExcessTerms terms;
};

struct CalibrationResidual {
    std::string link_id;
    double band_hz = 0.0;
    double observed_db = 0.0;
    double simulated_db = 0.0;
    double residual_db = 0.0;  // simulated - observed
};

struct BandCalibration {
    double band_hz = 0.0;
    double canopy_db_per_m = 0.0;
    double mean_abs_error_db = 0.0;
    double mean_error_db = 0.0;
    std::size_t observations = 0;
};

struct CalibrationResult {
    double triple_film_nm = 0.0;
    double double_film_nm = 0.0;
    std::vector<BandCalibration> bands;
    double objective_db = 0.0;  // sum over bands of the mean absolute error
    std::vector<CalibrationResidual> residuals;
    CalibrationGrids grids;
};

namespace detail {

struct BandData {
    double band_hz = 0.0;
    std::vector<const CalibrationSample*> samples;
    std::vector<std::vector<double>> triple;  // [film index][sample]
    std::vector<std::vector<double>> dbl;
};

struct BandBest {
    double objective = std::numeric_limits<double>::infinity();
    std::size_t canopy = 0;
};

inline BandBest best_canopy(const BandData& b, std::size_t tf, std::size_t df, const Grid& canopy,
                            std::vector<double>& base) {
    const std::size_t n = b.samples.size();
    base.resize(n);
    for (std::size_t i = 0; i < n; ++i) base[i] = b.samples[i]->terms.fixed_db + b.triple[tf][i] + b.dbl[df][i];
    BandBest best;
    for (std::size_t c = 0; c < canopy.count; ++c) {
        const double cv = canopy.value(c);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sim = base[i] + cv * b.samples[i]->terms.canopy_factor_m;
            sum += std::fabs(b.samples[i]->observation.excess_loss_db - sim);
        }
        const double obj = sum / static_cast<double>(n);
        if (obj < best.objective) best = {obj, c};
    }
    return best;
}

}  // namespace detail

/// Exhaustive search: film thicknesses shared across bands, canopy loss per
/// band. Ties go to the smaller triple film, then double film, then canopy loss.
inline CalibrationResult calibrate(std::span<const CalibrationSample> samples, const PathGainModel& model,
                                   const CalibrationGrids& grids = {}, unsigned workers = 1) {
    if (samples.empty()) throw ValidationError("calibration needs at least one observation");
    grids.film_nm.validate("film");
    grids.canopy_db_per_m.validate("canopy loss");

    // order-independent grouping: by band, then link id
    std::vector<const CalibrationSample*> sorted;
    for (const auto& s : samples) sorted.push_back(&s);
    std::stable_sort(sorted.begin(), sorted.end(), [](const CalibrationSample* a, const CalibrationSample* b) {
        return std::tie(a->observation.band_hz, a->observation.link_id, a->observation.excess_loss_db) <
               std::tie(b->observation.band_hz, b->observation.link_id, b->observation.excess_loss_db);
    });
    std::vector<detail::BandData> bands;
    for (const auto* s : sorted) {
        if (bands.empty() || !MaterialTable::same_band(bands.back().band_hz, s->observation.band_hz))
            bands.push_back({s->observation.band_hz, {}, {}, {}});
        bands.back().samples.push_back(s);
    }

    const std::size_t nf = grids.film_nm.count;
    for (auto& b : bands) {
        b.triple.assign(nf, {});
        b.dbl.assign(nf, {});
        parallel_for(nf, workers, [&](std::size_t k) {
            const double film = nm_to_m(grids.film_nm.value(k));
            b.triple[k].resize(b.samples.size());
            b.dbl[k].resize(b.samples.size());
            for (std::size_t i = 0; i < b.samples.size(); ++i) {
                const ExcessTerms& t = b.samples[i]->terms;
                b.triple[k][i] = window_term_db(t.triple_angles, model, StackRole::window_triple, film, b.band_hz);
                b.dbl[k][i] = window_term_db(t.double_angles, model, StackRole::window_double, film, b.band_hz);
            }
        });
    }

    struct Candidate {
        double objective = std::numeric_limits<double>::infinity();
        std::size_t df = 0;
        std::vector<std::size_t> canopy;
    };
    std::vector<Candidate> per_triple(nf);
    parallel_for(nf, workers, [&](std::size_t tf) {
        std::vector<double> base;
        Candidate& best = per_triple[tf];
        for (std::size_t df = 0; df < nf; ++df) {
            double obj = 0.0;
            std::vector<std::size_t> canopy(bands.size());
            for (std::size_t b = 0; b < bands.size(); ++b) {
                const auto bb = detail::best_canopy(bands[b], tf, df, grids.canopy_db_per_m, base);
                obj += bb.objective;
                canopy[b] = bb.canopy;
            }
            if (obj < best.objective) best = {obj, df, std::move(canopy)};
        }
    });
    std::size_t best_tf = 0;
    for (std::size_t tf = 1; tf < nf; ++tf)
        if (per_triple[tf].objective < per_triple[best_tf].objective) best_tf = tf;
    const Candidate& win = per_triple[best_tf];

    CalibrationResult r;
    r.grids = grids;
    r.triple_film_nm = grids.film_nm.value(best_tf);
    r.double_film_nm = grids.film_nm.value(win.df);
    r.objective_db = win.objective;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto& bd = bands[b];
        BandCalibration bc;
        bc.band_hz = bd.band_hz;
        bc.canopy_db_per_m = grids.canopy_db_per_m.value(win.canopy[b]);
        bc.observations = bd.samples.size();
        double abs_sum = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < bd.samples.size(); ++i) {
            const auto& s = *bd.samples[i];
            const double sim = combine_excess(s.terms.fixed_db, bd.triple[best_tf][i], bd.dbl[win.df][i],
                                              bc.canopy_db_per_m, s.terms.canopy_factor_m);
            const double res = sim - s.observation.excess_loss_db;
            abs_sum += std::fabs(res);
            sum += res;
            r.residuals.push_back({s.observation.link_id, bd.band_hz, s.observation.excess_loss_db, sim, res});
        }
        bc.mean_abs_error_db = abs_sum / static_cast<double>(bd.samples.size());
        bc.mean_error_db = sum / static_cast<double>(bd.samples.size());
        r.bands.push_back(bc);
    }
    return r;
}

/// Objective of one grid point, evaluated independently of the search (for checks).
inline double calibration_objective(std::span<const CalibrationSample> samples, const PathGainModel& model,
                                    double triple_film_nm, double double_film_nm,
                                    const std::map<double, double>& canopy_by_band) {
    std::map<double, std::pair<double, std::size_t>> per_band;
    for (const auto& s : samples) {
        double canopy = std::numeric_limits<double>::quiet_NaN();
        double key = s.observation.band_hz;
        for (const auto& [b, c] : canopy_by_band)
            if (MaterialTable::same_band(b, s.observation.band_hz)) {
                canopy = c;
                key = b;
            }
        if (std::isnan(canopy)) throw ValidationError("no canopy loss for an observation band");
        const double sim = simulated_excess_loss(s.terms, model, s.observation.band_hz, nm_to_m(triple_film_nm),
                                                 nm_to_m(double_film_nm), canopy);
        auto& acc = per_band[key];
        acc.first += std::fabs(sim - s.observation.excess_loss_db);
        ++acc.second;
    }
    double obj = 0.0;
    for (const auto& [b, acc] : per_band) obj += acc.first / static_cast<double>(acc.second);
    return obj;
}

// ---------------------------------------------------------------------------
// Antenna-position sensitivity
// ---------------------------------------------------------------------------

struct JitterOptions {
    double box_m = 0.2;                  // side of the horizontal square each antenna moves in
    std::size_t steps = 5;               // grid points per axis
    double small_angle_change_deg = 2.0;
};

/// Samples of one window crossing of one path (matched by reflection sequence)
/// across all antenna positions.
struct WindowSensitivity {
    std::vector<int> reflection_sequence;
    std::size_t crossing = 0;  // ordinal among the path's window crossings
    int object_id = 0;
    ObjectClass object_class = ObjectClass::window_triple;
    double min_angle_deg = 0.0, max_angle_deg = 0.0;
    double min_loss_db = 0.0, max_loss_db = 0.0;
    double max_loss_delta_db = 0.0;        // over all position pairs
    double small_angle_loss_delta_db = 0.0;  // over pairs whose angles differ by <= the small-angle limit
    double small_angle_angle_delta_deg = 0.0;
    std::size_t samples = 0;
};

struct SensitivityReport {
    double band_hz = 0.0;
    std::size_t positions = 0;
    std::vector<WindowSensitivity> windows;
    double max_loss_delta_db = 0.0;
    double small_angle_loss_delta_db = 0.0;
    double min_azimuth_spread_deg = 0.0;
    double max_azimuth_spread_deg = 0.0;

    /// Largest small-angle delta restricted to one window class.
    double small_angle_loss_delta_db_for(ObjectClass c) const {
        double m = 0.0;
        for (const auto& w : windows)
            if (w.object_class == c) m = std::fmax(m, w.small_angle_loss_delta_db);
        return m;
    }
};

inline std::vector<double> jitter_offsets(double box_m, std::size_t steps) {
    if (!(box_m >= 0.0)) throw DomainError("jitter box must be >= 0");
    if (steps == 0) throw DomainError("jitter needs at least one step");
    std::vector<double> out(steps, 0.0);
    if (steps > 1)
        for (std::size_t k = 0; k < steps; ++k)
            out[k] = -0.5 * box_m + box_m * static_cast<double>(k) / static_cast<double>(steps - 1);
    return out;
}

inline SensitivityReport jitter_sensitivity(const Tracer& tracer, const Link& link, double band_hz,
                                            const PathGainModel& model, const SimulationOptions& sim,
                                            const JitterOptions& opt = {}) {
    const auto offs = jitter_offsets(opt.box_m, opt.steps);
    struct Position {
        Vec3 tx, rx;
    };
    std::vector<Position> positions;
    for (double tx_dx : offs)
        for (double tx_dy : offs)
            for (double rx_dx : offs)
                for (double rx_dy : offs)
                    positions.push_back({link.tx + Vec3{tx_dx, tx_dy, 0.0}, link.rx + Vec3{rx_dx, rx_dy, 0.0}});

    SimulationOptions inner = sim;
    inner.workers = 1;
    std::vector<LinkResult> results(positions.size());
    parallel_for(positions.size(), sim.workers, [&](std::size_t k) {
        results[k] = simulate_link(tracer, {link.id, positions[k].tx, positions[k].rx}, band_hz, model, inner);
    });

    using Key = std::tuple<std::vector<int>, std::size_t, int>;
    struct Acc {
        ObjectClass cls = ObjectClass::window_triple;
        std::vector<std::pair<double, double>> samples;  // (angle deg, loss dB)
    };
    std::map<Key, Acc> acc;
    SensitivityReport rep;
    rep.band_hz = band_hz;
    rep.positions = positions.size();
    rep.min_azimuth_spread_deg = std::numeric_limits<double>::infinity();
    rep.max_azimuth_spread_deg = -std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        if (r.lsp) {
            rep.min_azimuth_spread_deg = std::fmin(rep.min_azimuth_spread_deg, r.lsp->azimuth_spread_deg);
            rep.max_azimuth_spread_deg = std::fmax(rep.max_azimuth_spread_deg, r.lsp->azimuth_spread_deg);
        }
        for (const auto& p : r.paths) {
            std::size_t ordinal = 0;
            for (const auto& in : p.interactions) {
                if (in.kind != InteractionKind::window_penetration) continue;
                const auto role = *model.stacks.role_for(in.object_class);
                auto& a = acc[Key{p.reflection_objects(), ordinal++, in.object_id}];
                a.cls = in.object_class;
                a.samples.emplace_back(rad_to_deg(in.incidence_angle),
                                       stack_penetration_loss_db(model, role, in.incidence_angle, band_hz));
            }
        }
    }
    if (!std::isfinite(rep.min_azimuth_spread_deg)) rep.min_azimuth_spread_deg = rep.max_azimuth_spread_deg = 0.0;

    for (const auto& [key, a] : acc) {
        WindowSensitivity w;
        w.reflection_sequence = std::get<0>(key);
        w.crossing = std::get<1>(key);
        w.object_id = std::get<2>(key);
        w.object_class = a.cls;
        w.samples = a.samples.size();
        w.min_angle_deg = w.max_angle_deg = a.samples.front().first;
        w.min_loss_db = w.max_loss_db = a.samples.front().second;
        for (const auto& [ang, loss] : a.samples) {
            w.min_angle_deg = std::fmin(w.min_angle_deg, ang);
            w.max_angle_deg = std::fmax(w.max_angle_deg, ang);
            w.min_loss_db = std::fmin(w.min_loss_db, loss);
            w.max_loss_db = std::fmax(w.max_loss_db, loss);
        }
        w.max_loss_delta_db = w.max_loss_db - w.min_loss_db;
        // pairs sorted by angle: only neighbours within the angle limit matter
        auto s = a.samples;
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size() && s[j].first - s[i].first <= opt.small_angle_change_deg; ++j) {
                const double d = std::fabs(s[j].second - s[i].second);
                if (d > w.small_angle_loss_delta_db) {
                    w.small_angle_loss_delta_db = d;
                    w.small_angle_angle_delta_deg = s[j].first - s[i].first;
                }
            }
        rep.max_loss_delta_db = std::fmax(rep.max_loss_delta_db, w.max_loss_delta_db);
        rep.small_angle_loss_delta_db = std::fmax(rep.small_angle_loss_delta_db, w.small_angle_loss_delta_db);
        rep.windows.push_back(std::move(w));
    }
    return rep;
}

}  // namespace o2i
