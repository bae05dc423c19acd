// Shared helpers for the unit tests and the acceptance binary: independent
// oracles and randomized scene generators.
#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "o2i/o2i.hpp"

namespace o2i::oracle {

// Brute-force specular search. Every reflector point defines its own plane
// (normal through the point); a sequence of points is admissible when
// consecutive points belong to different objects, the unfolded path crosses
// each plane between its image and the next vertex, each actual vertex pair
// sits on one side of its plane, and every point satisfies
// d1 + d2 - D <= lambda/2 for its bounce. Results are grouped per object
// sequence keeping the lexicographically smallest (excess, point index) tuple.
struct OracleHit {
    std::vector<int> objects;
    std::vector<double> excess;
    std::vector<std::size_t> points;
};

namespace oracle_detail {

struct Chain {
    bool ok = false;
    std::vector<Vec3> images, hits, next;
    std::vector<double> focal;
};

inline Chain unfold(const Vec3& tx, const Vec3& rx, const std::vector<Plane>& planes) {
    Chain c;
    const std::size_t m = planes.size();
    c.images.push_back(tx);
    for (const auto& p : planes) c.images.push_back(mirror(c.images.back(), p));
    c.hits.assign(m, {});
    c.next.assign(m, {});
    c.focal.assign(m, 0.0);
    Vec3 target = rx;
    for (std::size_t i = m; i-- > 0;) {
        const Vec3 from = c.images[i + 1];
        const Vec3 dir = target - from;
        const double denom = dot(planes[i].normal, dir);
        if (denom == 0.0) return c;
        const double t = (planes[i].offset - dot(planes[i].normal, from)) / denom;
        // the crossing must lie strictly between the image and the target
        if (!(t > 0.0 && t < 1.0)) return c;
        c.next[i] = target;
        c.focal[i] = distance(from, target);
        c.hits[i] = from + dir * t;
        target = c.hits[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3 prev = i == 0 ? tx : c.hits[i - 1];
        if (!(planes[i].signed_distance(prev) * planes[i].signed_distance(c.next[i]) > 0.0)) return c;
    }
    c.ok = true;
    return c;
}

}  // namespace oracle_detail

inline std::vector<OracleHit> brute_force_specular(const PointCloud& cloud, const Vec3& tx, const Vec3& rx,
                                                   std::size_t order, double wavelength_m) {
    // bucket points whose own planes coincide exactly; the image construction of
    // a point tuple only depends on the planes, so a bucket shares one chain
    using Key = std::tuple<int, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t>;
    std::map<Key, std::vector<std::size_t>> buckets;
    std::map<Key, Plane> plane_of;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud[i];
        if (!(p.object_class == ObjectClass::interior_wall || p.object_class == ObjectClass::exterior_wall ||
              p.object_class == ObjectClass::window_triple || p.object_class == ObjectClass::window_double))
            continue;
        const Vec3 n = normalized(p.normal);
        const Plane pl{n, dot(n, p.position)};
        const Key k{p.object_id, std::bit_cast<std::uint64_t>(n.x), std::bit_cast<std::uint64_t>(n.y),
                    std::bit_cast<std::uint64_t>(n.z), std::bit_cast<std::uint64_t>(pl.offset)};
        buckets[k].push_back(i);
        plane_of[k] = pl;
    }
    std::vector<Key> keys;
    for (const auto& [k, v] : buckets) keys.push_back(k);

    std::map<std::vector<int>, OracleHit> best;
    std::vector<std::size_t> seq;
    auto visit = [&](auto&& self) -> void {
        if (seq.size() == order) {
            std::vector<Plane> planes;
            for (auto s : seq) planes.push_back(plane_of[keys[s]]);
            const auto chain = oracle_detail::unfold(tx, rx, planes);
            if (!chain.ok) return;
            OracleHit h;
            for (std::size_t i = 0; i < order; ++i) {
                double e_best = 0.0;
                std::size_t p_best = 0;
                bool found = false;
                for (std::size_t idx : buckets[keys[seq[i]]]) {
                    const Vec3& q = cloud[idx].position;
                    const double e = distance(chain.images[i], q) + distance(q, chain.next[i]) - chain.focal[i];
                    if (e > 0.5 * wavelength_m) continue;
                    if (!found || e < e_best || (e == e_best && idx < p_best)) {
                        e_best = e;
                        p_best = idx;
                        found = true;
                    }
                }
                if (!found) return;
                h.objects.push_back(std::get<0>(keys[seq[i]]));
                h.excess.push_back(e_best);
                h.points.push_back(p_best);
            }
            auto it = best.find(h.objects);
            if (it == best.end() ||
                std::tie(h.excess, h.points) < std::tie(it->second.excess, it->second.points))
                best[h.objects] = h;
            return;
        }
        for (std::size_t s = 0; s < keys.size(); ++s) {
            if (!seq.empty() && std::get<0>(keys[s]) == std::get<0>(keys[seq.back()])) continue;
            seq.push_back(s);
            self(self);
            seq.pop_back();
        }
    };
    visit(visit);
    std::vector<OracleHit> out;
    for (auto& [k, v] : best) out.push_back(std::move(v));
    return out;
}

// Axis-aligned vertical walls at random positions plus some non-reflecting
// clutter; stays under `max_points`.
struct RandomScene {
    PointCloud cloud;
    std::vector<std::pair<Vec3, Vec3>> links;
};

inline RandomScene random_scene(std::mt19937_64& rng, std::size_t max_points = 20000) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
    const ObjectClass classes[] = {ObjectClass::interior_wall, ObjectClass::window_triple,
                                   ObjectClass::window_double, ObjectClass::exterior_wall};
    for (;;) {
        SceneSpec spec;
        spec.spacing_m = std::round(uni(0.1, 0.3) * 100.0) / 100.0;
        const int walls = 3 + static_cast<int>(u01(rng) * 5);
        for (int w = 0; w < walls; ++w) {
            WallSpec s;
            s.object_id = w + 1;
            s.object_class = classes[static_cast<std::size_t>(u01(rng) * 4) % 4];
            const double len = std::round(uni(2.0, 9.0));
            const double h = std::round(uni(2.0, 4.0));
            const double a = std::round(uni(-8.0, 8.0) * 10.0) / 10.0;
            const double b = std::round(uni(-8.0, 8.0) * 10.0) / 10.0;
            const bool along_x = u01(rng) < 0.5;
            const bool flip = u01(rng) < 0.5;
            s.origin = {a, b, 0.0};
            s.edge_u = along_x ? Vec3{flip ? -len : len, 0, 0} : Vec3{0, flip ? -len : len, 0};
            s.edge_v = {0, 0, h};
            spec.walls.push_back(s);
        }
        if (u01(rng) < 0.5) spec.blobs.push_back({90, {uni(-5, 5), uni(-5, 5), 1.5}, {1.0, 1.0, 1.0}, 0.3});
        if (u01(rng) < 0.5)
            spec.blobs.push_back({91, {uni(-5, 5), uni(-5, 5), 0.5}, {0.5, 0.5, 0.5}, 0.25, ObjectClass::other});
        PointCloud cloud = make_synthetic_scene(spec);
        if (cloud.size() > max_points) continue;
        RandomScene out{std::move(cloud), {}};
        for (int k = 0; k < 3; ++k) {
            Vec3 tx{uni(-10, 10), uni(-10, 10), uni(0.5, 3.0)};
            Vec3 rx{uni(-10, 10), uni(-10, 10), uni(0.5, 3.0)};
            out.links.emplace_back(tx, rx);
        }
        return out;
    }
}

// Compare the tracer's grouped candidates with the oracle; returns the number
// of mismatching entries (missing, extra, or different representative).
inline std::size_t count_mismatches(const std::vector<detail::SpecularCandidate>& got,
                                    const std::vector<OracleHit>& want) {
    std::map<std::vector<int>, const detail::SpecularCandidate*> g;
    for (const auto& c : got) g[c.objects] = &c;
    std::size_t bad = 0;
    std::size_t matched = 0;
    for (const auto& w : want) {
        auto it = g.find(w.objects);
        if (it == g.end()) {
            ++bad;
            continue;
        }
        ++matched;
        if (it->second->representative != w.points || it->second->excess != w.excess) ++bad;
    }
    bad += g.size() - matched;
    return bad;
}

// Receivers on a 0.5 m grid in all three shoebox rooms (1 m clear of every
// wall) for both default transmitters: many triple, double and canopy crossings.
inline std::vector<Link> dense_calibration_links(const ShoeboxSpec& spec = {}) {
    const auto base = shoebox_links();
    std::vector<Link> out;
    for (std::size_t t = 0; t < base.tx_positions.size(); ++t)
        for (double x = 1.0; x <= spec.width_m - 1.0 + 1e-9; x += 0.5) {
            if (std::fabs(x - spec.room_split_1_m) < 1.0 || std::fabs(x - spec.room_split_2_m) < 1.0) continue;
            for (double y = 1.0; y <= spec.corridor_y_m - 1.0 + 1e-9; y += 0.5) {
                const std::string id = "Tx" + std::to_string(t + 1) + "_" + std::to_string(out.size());
                out.push_back({id, base.tx_positions[t], {x, y, 1.5}});
            }
        }
    return out;
}

struct ForwardTruth {
    double triple_film_nm = 0.0;
    double double_film_nm = 0.0;
    std::map<double, double> canopy_by_band;
};

// Direct-path observations produced by the forward model itself, optionally
// perturbed by uniform noise in [-noise_db, noise_db].
inline std::vector<CalibrationSample> forward_samples(const Tracer& tracer, const std::vector<Link>& links,
                                                      const PathGainModel& model, const ForwardTruth& truth,
                                                      double noise_db, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-noise_db, noise_db);
    std::vector<CalibrationSample> out;
    for (const auto& [band, canopy] : truth.canopy_by_band) {
        TraceOptions opt;
        opt.wavelength_m = wavelength(band);
        for (const auto& l : links) {
            const auto direct = tracer.trace_direct(l.tx, l.rx, opt);
            if (direct.obstructed()) continue;
            CalibrationSample s;
            s.terms = excess_terms(direct, model, band);
            auto& o = s.observation;
            o.link_id = l.id;
            o.band_hz = band;
            o.tau_ns = o.refined_tau_ns = direct.delay_ns();
            o.phi_deg = o.refined_phi_deg = direct.aoa_azimuth_deg();
            o.excess_loss_db = simulated_excess_loss(s.terms, model, band, nm_to_m(truth.triple_film_nm),
                                                     nm_to_m(truth.double_film_nm), canopy);
            if (noise_db > 0.0) o.excess_loss_db += noise(rng);
            o.gain_db = -(o.excess_loss_db + free_space_loss_db(direct.geometric_length_m, band));
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace o2i::oracle
