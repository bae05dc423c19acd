#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
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
#include "parallel.hpp"
#include "scene.hpp"

namespace o2i {

inline constexpr int max_supported_bounces = 4;

enum class InteractionKind { reflection, window_penetration, interior_wall_penetration, canopy_penetration };

inline std::string_view to_string(InteractionKind k) {
    switch (k) {
        case InteractionKind::reflection: return "reflection";
        case InteractionKind::window_penetration: return "window_penetration";
        case InteractionKind::interior_wall_penetration: return "interior_wall_penetration";
        case InteractionKind::canopy_penetration: return "canopy_penetration";
    }
    return "reflection";
}

struct Interaction {
    InteractionKind kind = InteractionKind::reflection;
    int object_id = 0;
    ObjectClass object_class = ObjectClass::other;
    Vec3 point;                    // reflection point, or where the ray enters the blocking object
    double incidence_angle = 0.0;  // radians, 0 = normal incidence
    double fresnel_scale_q = 1.0;
    double penetration_length_m = 0.0;
    double ray_distance_m = 0.0;   // d_w, closest blocking point to the ray
    bool from_front = true;        // wave arrives on the side the object normal points to
    std::size_t segment = 0;       // path segment index (0 = leaving Tx)
};

struct PropagationPath {
    Vec3 tx;
    Vec3 rx;
    std::vector<Vec3> vertices;  // tx, reflection points..., rx
    std::vector<Interaction> interactions;
    double geometric_length_m = 0.0;
    double delay_s = 0.0;
    double aoa_azimuth_rad = 0.0;  // direction of arrival at Rx, [0, 2 pi)
    std::optional<double> gain_db;
    std::vector<int> opaque_blockers;  // solid exterior walls inside a Fresnel zone
    bool annotated = false;

    std::size_t reflection_count() const { return vertices.size() >= 2 ? vertices.size() - 2 : 0; }
    std::vector<int> reflection_objects() const {
        std::vector<int> out;
        for (const auto& i : interactions)
            if (i.kind == InteractionKind::reflection) out.push_back(i.object_id);
        return out;
    }
    bool obstructed() const { return !opaque_blockers.empty(); }
    double delay_ns() const { return delay_s * 1e9; }
    double aoa_azimuth_deg() const { return rad_to_deg(aoa_azimuth_rad); }
};

enum class SearchMode { indexed, linear_scan };

/// Radius of the first Fresnel zone, sqrt(lambda d1 d2 / (d1 + d2)).
inline double fresnel_radius(double d1, double d2, double wavelength_m) {
    if (!(d1 > 0.0) || !(d2 > 0.0) || !(wavelength_m > 0.0))
        throw DomainError("fresnel_radius needs positive distances and wavelength");
    return std::sqrt(wavelength_m * d1 * d2 / (d1 + d2));
}

/// Path-length excess of the detour a -> p -> b over the distance `direct`.
inline double fresnel_excess(const Vec3& a, const Vec3& p, const Vec3& b, double direct) {
    return distance(a, p) + distance(p, b) - direct;
}

/// One object found inside the first Fresnel ellipsoid of a segment.
struct ShadowingHit {
    int object_id = 0;
    ObjectClass object_class = ObjectClass::other;
    double ray_distance_m = 0.0;        // d_w
    double fresnel_scale_q = 0.0;       // clamp(1 - d_w / r_F, 0, 1)
    double penetration_length_m = 0.0;  // d = max l_k - min l_k over blocking points
    double incidence_angle = 0.0;       // against the mean normal of the blocking points
    double along_ray_start_m = 0.0;     // min l_k
    Vec3 mean_normal;
    std::size_t blocking_points = 0;
};

namespace detail {

struct ShadowAccumulator {
    int object_id = 0;
    ObjectClass object_class = ObjectClass::other;
    double min_dw = std::numeric_limits<double>::infinity();
    double along_at_min = 0.0;
    double min_along = std::numeric_limits<double>::infinity();
    double max_along = -std::numeric_limits<double>::infinity();
    Vec3 normal_sum;
    std::size_t count = 0;
};

inline bool shadows(ObjectClass c) { return c != ObjectClass::other; }

}  // namespace detail

/// Objects with at least one point inside the first Fresnel ellipsoid of
/// [p1, p2], ordered by where the ray first meets them.
inline std::vector<ShadowingHit> detect_shadowing(const Vec3& p1, const Vec3& p2, const PointCloud& cloud,
                                                  double wavelength_m, std::span<const int> excluded = {},
                                                  SearchMode mode = SearchMode::indexed) {
    if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
    const double length = distance(p1, p2);
    if (!(length > 0.0)) throw DomainError("shadowing segment has coincident end points");
    const Vec3 r = (p2 - p1) / length;
    const double half_wave = 0.5 * wavelength_m;

    auto is_excluded = [&](int id) { return std::find(excluded.begin(), excluded.end(), id) != excluded.end(); };

    std::vector<std::size_t> candidates;
    if (mode == SearchMode::indexed) {
        // The ellipsoid lies within max(semi-minor axis, lambda/2) of the segment.
        const double semi_minor = 0.5 * std::sqrt(length * wavelength_m + 0.25 * wavelength_m * wavelength_m);
        const double reach = std::fmax(semi_minor, half_wave) * (1.0 + 1e-9) + 1e-9;
        candidates = cloud.index().segment_query(p1, p2, reach);
    } else {
        candidates.resize(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) candidates[i] = i;
    }

    std::map<int, detail::ShadowAccumulator> acc;
    for (const std::size_t k : candidates) {
        const ScenePoint& sp = cloud[k];
        if (!detail::shadows(sp.object_class) || is_excluded(sp.object_id)) continue;
        if (!(fresnel_excess(p1, sp.position, p2, length) <= half_wave)) continue;
        auto& a = acc[sp.object_id];
        a.object_id = sp.object_id;
        a.object_class = sp.object_class;
        const Vec3 rel = p1 - sp.position;
        const Vec3 dk = rel - r * dot(rel, r);
        const double dw = norm(dk);
        const double along = dot(sp.position - p1, r);
        if (dw < a.min_dw) {
            a.min_dw = dw;
            a.along_at_min = along;
        }
        a.min_along = std::fmin(a.min_along, along);
        a.max_along = std::fmax(a.max_along, along);
        a.normal_sum += sp.normal;
        ++a.count;
    }

    std::vector<ShadowingHit> hits;
    hits.reserve(acc.size());
    for (const auto& [id, a] : acc) {
        ShadowingHit h;
        h.object_id = id;
        h.object_class = a.object_class;
        h.ray_distance_m = a.min_dw;
        h.penetration_length_m = a.max_along - a.min_along;
        h.along_ray_start_m = a.min_along;
        h.blocking_points = a.count;
        if (a.along_at_min > 0.0 && a.along_at_min < length) {
            const double rf = fresnel_radius(a.along_at_min, length - a.along_at_min, wavelength_m);
            h.fresnel_scale_q = std::clamp(1.0 - a.min_dw / rf, 0.0, 1.0);
        } else {
            h.fresnel_scale_q = a.min_dw == 0.0 ? 1.0 : 0.0;
        }
        const double ns = norm(a.normal_sum);
        if (ns > 0.0) {
            h.mean_normal = a.normal_sum / ns;
            h.incidence_angle = std::acos(std::fmin(1.0, std::fabs(dot(r, h.mean_normal))));
        }
        hits.push_back(h);
    }
    std::sort(hits.begin(), hits.end(), [](const ShadowingHit& a, const ShadowingHit& b) {
        return std::tie(a.along_ray_start_m, a.object_id) < std::tie(b.along_ray_start_m, b.object_id);
    });
    return hits;
}

struct TraceOptions {
    double wavelength_m = speed_of_light / 4.65e9;
    int max_bounces = max_supported_bounces;
    SearchMode mode = SearchMode::indexed;
    unsigned workers = 1;
};

/// Reflector point set split into exact planes: points of one object whose unit
/// normal and plane offset are bit-identical share a plane, and therefore share
/// every image and reflection point computed from it.
class ReflectorSet {
public:
    struct Member {
        std::size_t index;
        Vec3 position;
    };
    struct Surface {
        Plane plane;
        int object_id = 0;
        ObjectClass object_class = ObjectClass::other;
        std::vector<Member> members;  // ascending point index
        Aabb box;
    };

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    ReflectorSet() = default;

    explicit ReflectorSet(const PointCloud& cloud) : surface_of_(cloud.size(), npos) {
        using Key = std::tuple<int, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t>;
        std::map<Key, std::size_t> lookup;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const ScenePoint& p = cloud[i];
            if (!is_reflector(p.object_class)) continue;
            const Plane plane = point_plane(p);
            const Key key{p.object_id, std::bit_cast<std::uint64_t>(plane.normal.x),
                          std::bit_cast<std::uint64_t>(plane.normal.y), std::bit_cast<std::uint64_t>(plane.normal.z),
                          std::bit_cast<std::uint64_t>(plane.offset)};
            auto [it, inserted] = lookup.try_emplace(key, surfaces_.size());
            if (inserted) surfaces_.push_back({plane, p.object_id, p.object_class, {}, {}});
            Surface& s = surfaces_[it->second];
            s.members.push_back({i, p.position});
            s.box.extend(p.position);
            surface_of_[i] = it->second;
        }
    }

    /// Reflection plane of a single point: normalized normal through the point.
    static Plane point_plane(const ScenePoint& p) {
        const Vec3 n = normalized(p.normal);
        return {n, dot(n, p.position)};
    }

    const std::vector<Surface>& surfaces() const { return surfaces_; }
    std::size_t surface_of(std::size_t point) const { return surface_of_[point]; }

private:
    std::vector<Surface> surfaces_;
    std::vector<std::size_t> surface_of_;
};

/// Geometry of a reflection sequence: images of Tx and back-traced reflection points.
struct ImageChain {
    std::vector<Vec3> images;       // images[0] = tx, images[i] = image after bounce i
    std::vector<Vec3> reflections;  // reflections[i-1] = reflection point of bounce i
    std::vector<Vec3> next_points;  // next_points[i-1] = reflection i+1 or rx
    std::vector<double> focal;      // focal[i-1] = |images[i] - next_points[i-1]|
};

/// Image-method construction over the given planes. Returns nothing when a
/// bounce has its source and next point on opposite sides of the plane.
inline std::optional<ImageChain> build_image_chain(const Vec3& tx, const Vec3& rx, std::span<const Plane> planes) {
    const std::size_t m = planes.size();
    ImageChain c;
    c.images.resize(m + 1);
    c.reflections.resize(m);
    c.next_points.resize(m);
    c.focal.resize(m);
    c.images[0] = tx;
    for (std::size_t i = 0; i < m; ++i) c.images[i + 1] = mirror(c.images[i], planes[i]);
    Vec3 target = rx;
    for (std::size_t i = m; i-- > 0;) {
        const Plane& pl = planes[i];
        const double side_src = pl.signed_distance(c.images[i]);
        const double side_dst = pl.signed_distance(target);
        if (!(side_src * side_dst > 0.0)) return std::nullopt;
        const Vec3 dir = target - c.images[i + 1];
        const double denom = dot(pl.normal, dir);
        if (denom == 0.0) return std::nullopt;
        const double t = (pl.offset - dot(pl.normal, c.images[i + 1])) / denom;
        c.next_points[i] = target;
        c.focal[i] = distance(c.images[i + 1], target);
        c.reflections[i] = c.images[i + 1] + dir * t;
        target = c.reflections[i];
    }
    // the actual vertices must also sit strictly on one side of every plane
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3& prev = i == 0 ? tx : c.reflections[i - 1];
        if (!(planes[i].signed_distance(prev) * planes[i].signed_distance(c.next_points[i]) > 0.0))
            return std::nullopt;
    }
    return c;
}

/// Excess of bounce i (0-based) evaluated at point p: |source - p| + |p - next| - focal.
inline double bounce_excess(const ImageChain& c, std::size_t i, const Vec3& p) {
    return fresnel_excess(c.images[i], p, c.next_points[i], c.focal[i]);
}

namespace detail {

inline double azimuth_of(const Vec3& v) {
    double a = std::atan2(v.y, v.x);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    if (a >= 2.0 * std::numbers::pi) a = 0.0;
    return a;
}

// Appends penetration interactions of one segment; solid exterior walls are collected as blockers.
inline void annotate_segment(PropagationPath& path, std::size_t segment, const Vec3& a, const Vec3& b,
                             const PointCloud& cloud, double wavelength_m, std::span<const int> excluded,
                             SearchMode mode) {
    const Vec3 r = normalized(b - a);
    for (const ShadowingHit& h : detect_shadowing(a, b, cloud, wavelength_m, excluded, mode)) {
        Interaction in;
        switch (h.object_class) {
            case ObjectClass::window_triple:
            case ObjectClass::window_double: in.kind = InteractionKind::window_penetration; break;
            case ObjectClass::interior_wall: in.kind = InteractionKind::interior_wall_penetration; break;
            case ObjectClass::tree_canopy: in.kind = InteractionKind::canopy_penetration; break;
            case ObjectClass::exterior_wall: path.opaque_blockers.push_back(h.object_id); continue;
            case ObjectClass::other: continue;
        }
        in.object_id = h.object_id;
        in.object_class = h.object_class;
        in.point = a + r * std::clamp(h.along_ray_start_m, 0.0, distance(a, b));
        in.incidence_angle = h.incidence_angle;
        in.fresnel_scale_q = h.fresnel_scale_q;
        in.penetration_length_m = h.penetration_length_m;
        in.ray_distance_m = h.ray_distance_m;
        in.from_front = dot(r, h.mean_normal) < 0.0;
        in.segment = segment;
        path.interactions.push_back(in);
    }
}

struct SpecularCandidate {
    std::vector<int> objects;
    std::vector<double> excess;              // per bounce, of the representative point
    std::vector<std::size_t> representative;  // point index per bounce
    std::vector<std::size_t> surfaces;
    bool operator<(const SpecularCandidate& o) const {
        return std::tie(excess, representative) < std::tie(o.excess, o.representative);
    }
};

}  // namespace detail

/// Direct and specular path search over one immutable point cloud.
class Tracer {
public:
    explicit Tracer(const PointCloud& cloud) : cloud_(&cloud), reflectors_(cloud) {}

    const PointCloud& cloud() const { return *cloud_; }
    const ReflectorSet& reflectors() const { return reflectors_; }

    PropagationPath trace_direct(const Vec3& tx, const Vec3& rx, const TraceOptions& opt) const {
        if (tx == rx) throw DomainError("Tx and Rx coincide");
        PropagationPath p;
        p.tx = tx;
        p.rx = rx;
        p.vertices = {tx, rx};
        p.geometric_length_m = distance(tx, rx);
        p.delay_s = p.geometric_length_m / speed_of_light;
        p.aoa_azimuth_rad = detail::azimuth_of(tx - rx);
        detail::annotate_segment(p, 0, tx, rx, *cloud_, opt.wavelength_m, {}, opt.mode);
        p.annotated = true;
        return p;
    }

    /// Reflected paths with 1..max_bounces bounces; one per object sequence.
    std::vector<PropagationPath> find_specular_paths(const Vec3& tx, const Vec3& rx, const TraceOptions& opt) const {
        if (opt.max_bounces < 0 || opt.max_bounces > max_supported_bounces)
            throw DomainError("max_bounces must lie in [0, 4]");
        if (tx == rx) throw DomainError("Tx and Rx coincide");
        std::vector<PropagationPath> paths;
        for (int order = 1; order <= opt.max_bounces; ++order) {
            for (const auto& cand : search_order(tx, rx, static_cast<std::size_t>(order), opt)) {
                PropagationPath p = build_path(tx, rx, cand, opt);
                if (!p.obstructed()) paths.push_back(std::move(p));
            }
        }
        return paths;
    }

    /// Direct path (unless obstructed) plus specular paths, sorted by delay then azimuth.
    std::vector<PropagationPath> trace(const Vec3& tx, const Vec3& rx, const TraceOptions& opt) const {
        std::vector<PropagationPath> out;
        PropagationPath direct = trace_direct(tx, rx, opt);
        if (!direct.obstructed()) out.push_back(std::move(direct));
        for (auto& p : find_specular_paths(tx, rx, opt)) out.push_back(std::move(p));
        sort_paths(out);
        return out;
    }

    static void sort_paths(std::vector<PropagationPath>& paths) {
        std::stable_sort(paths.begin(), paths.end(), [](const PropagationPath& a, const PropagationPath& b) {
            const auto ra = a.reflection_objects(), rb = b.reflection_objects();
            return std::tie(a.delay_s, a.aoa_azimuth_rad, ra) < std::tie(b.delay_s, b.aoa_azimuth_rad, rb);
        });
    }

    /// Accepted representative tuples for exactly `order` bounces, keyed by object sequence.
    std::vector<detail::SpecularCandidate> search_order(const Vec3& tx, const Vec3& rx, std::size_t order,
                                                        const TraceOptions& opt) const {
        const auto& surfaces = reflectors_.surfaces();
        const std::size_t n = surfaces.size();
        std::vector<std::vector<detail::SpecularCandidate>> per_first(n);
        parallel_for(n, opt.workers, [&](std::size_t first) {
            std::vector<std::size_t> seq{first};
            seq.reserve(order);
            enumerate(tx, rx, order, opt, seq, per_first[first]);
        });
        std::map<std::vector<int>, detail::SpecularCandidate> best;
        for (auto& bucket : per_first)
            for (auto& c : bucket) {
                auto it = best.find(c.objects);
                if (it == best.end())
                    best.emplace(c.objects, std::move(c));
                else if (c < it->second)
                    it->second = std::move(c);
            }
        std::vector<detail::SpecularCandidate> out;
        out.reserve(best.size());
        for (auto& [k, v] : best) out.push_back(std::move(v));
        return out;
    }

private:
    void enumerate(const Vec3& tx, const Vec3& rx, std::size_t order, const TraceOptions& opt,
                   std::vector<std::size_t>& seq, std::vector<detail::SpecularCandidate>& out) const {
        const auto& surfaces = reflectors_.surfaces();
        if (seq.size() == order) {
            evaluate(tx, rx, seq, opt, out);
            return;
        }
        for (std::size_t s = 0; s < surfaces.size(); ++s) {
            if (surfaces[s].object_id == surfaces[seq.back()].object_id) continue;
            seq.push_back(s);
            enumerate(tx, rx, order, opt, seq, out);
            seq.pop_back();
        }
    }

    void evaluate(const Vec3& tx, const Vec3& rx, const std::vector<std::size_t>& seq, const TraceOptions& opt,
                  std::vector<detail::SpecularCandidate>& out) const {
        const auto& surfaces = reflectors_.surfaces();
        const std::size_t m = seq.size();
        std::array<Plane, max_supported_bounces> planes;
        for (std::size_t i = 0; i < m; ++i) planes[i] = surfaces[seq[i]].plane;
        const auto chain = build_image_chain(tx, rx, std::span<const Plane>(planes.data(), m));
        if (!chain) return;

        const double half_wave = 0.5 * opt.wavelength_m;
        detail::SpecularCandidate cand;
        cand.objects.resize(m);
        cand.excess.resize(m);
        cand.representative.resize(m);
        cand.surfaces = seq;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& surf = surfaces[seq[i]];
            cand.objects[i] = surf.object_id;
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_idx = ReflectorSet::npos;
            auto consider = [&](std::size_t idx, const Vec3& pos) {
                const double e = bounce_excess(*chain, i, pos);
                if (e <= half_wave && (e < best || (e == best && idx < best_idx))) {
                    best = e;
                    best_idx = idx;
                }
            };
            if (opt.mode == SearchMode::linear_scan) {
                for (const auto& mem : surf.members) consider(mem.index, mem.position);
            } else if (!indexed_scan(*chain, i, surf, seq[i], half_wave, consider)) {
                return;
            }
            if (best_idx == ReflectorSet::npos) return;
            cand.excess[i] = best;
            cand.representative[i] = best_idx;
        }
        out.push_back(std::move(cand));
    }

    // Visits every member that can satisfy the excess bound at bounce i. Points
    // with excess <= lambda/2 lie within rho of the focal line, with
    // sqrt(D^2 + 4 rho^2) - D <= lambda/2, hence within rho / sin(beta) of the
    // reflection point on their plane. Returns false when no member can qualify.
    template <class Fn>
    bool indexed_scan(const ImageChain& chain, std::size_t i, const ReflectorSet::Surface& surf,
                      std::size_t surf_id, double half_wave, Fn&& consider) const {
        const double focal = chain.focal[i];
        const double rho = 0.5 * std::sqrt((focal + half_wave) * (focal + half_wave) - focal * focal);
        const Vec3 axis = normalized(chain.next_points[i] - chain.images[i + 1]);
        const double sin_beta = std::fabs(dot(axis, surf.plane.normal));
        const double slack = 1e-9 * (1.0 + focal);
        const Vec3& hit = chain.reflections[i];
        if (sin_beta < 1e-6) {
            for (const auto& mem : surf.members) consider(mem.index, mem.position);
            return true;
        }
        const double radius = (rho + slack) / sin_beta + slack;
        if (surf.box.distance2_to(hit) > radius * radius) return false;
        if (radius > 2.0 * surf.box.half_diagonal()) {
            for (const auto& mem : surf.members) consider(mem.index, mem.position);
            return true;
        }
        for (const std::size_t idx : cloud_->index().radius_query(hit, radius))
            if (reflectors_.surface_of(idx) == surf_id) consider(idx, (*cloud_)[idx].position);
        return true;
    }

    PropagationPath build_path(const Vec3& tx, const Vec3& rx, const detail::SpecularCandidate& cand,
                               const TraceOptions& opt) const {
        const auto& surfaces = reflectors_.surfaces();
        const std::size_t m = cand.surfaces.size();
        std::vector<Plane> planes(m);
        for (std::size_t i = 0; i < m; ++i) planes[i] = surfaces[cand.surfaces[i]].plane;
        const auto chain = build_image_chain(tx, rx, planes);

        PropagationPath p;
        p.tx = tx;
        p.rx = rx;
        p.vertices.push_back(tx);
        for (const auto& r : chain->reflections) p.vertices.push_back(r);
        p.vertices.push_back(rx);
        p.geometric_length_m = chain->focal[m - 1];
        p.delay_s = p.geometric_length_m / speed_of_light;
        p.aoa_azimuth_rad = detail::azimuth_of(p.vertices[m] - rx);

        for (std::size_t seg = 0; seg <= m; ++seg) {
            std::vector<int> excluded;
            if (seg >= 1) excluded.push_back(cand.objects[seg - 1]);
            if (seg < m) excluded.push_back(cand.objects[seg]);
            detail::annotate_segment(p, seg, p.vertices[seg], p.vertices[seg + 1], *cloud_, opt.wavelength_m,
                                     excluded, opt.mode);
            if (seg < m) {
                const auto& surf = surfaces[cand.surfaces[seg]];
                const Vec3 u = normalized(p.vertices[seg + 1] - p.vertices[seg]);
                Interaction in;
                in.kind = InteractionKind::reflection;
                in.object_id = surf.object_id;
                in.object_class = surf.object_class;
                in.point = p.vertices[seg + 1];
                in.incidence_angle = std::acos(std::fmin(1.0, std::fabs(dot(u, surf.plane.normal))));
                in.from_front = dot(u, surf.plane.normal) < 0.0;
                in.segment = seg;
                p.interactions.push_back(in);
            }
        }
        p.annotated = true;
        return p;
    }

    const PointCloud* cloud_;
    ReflectorSet reflectors_;
};

inline PropagationPath trace_direct(const Vec3& tx, const Vec3& rx, const PointCloud& cloud,
                                    const TraceOptions& opt = {}) {
    return Tracer(cloud).trace_direct(tx, rx, opt);
}

inline std::vector<PropagationPath> find_specular_paths(const Vec3& tx, const Vec3& rx, const PointCloud& cloud,
                                                        const TraceOptions& opt = {}) {
    return Tracer(cloud).find_specular_paths(tx, rx, opt);
}

}  // namespace o2i
