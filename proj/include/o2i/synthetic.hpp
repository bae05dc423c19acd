#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "scene.hpp"

namespace o2i {

/// Rectangular wall patch spanned by two edges from `origin`; the normal is
/// unit(edge_u x edge_v).
struct WallSpec {
    int object_id = 0;
    ObjectClass object_class = ObjectClass::interior_wall;
    Vec3 origin;
    Vec3 edge_u;
    Vec3 edge_v;
};

/// Ellipsoidal blob filled on a cubic lattice; normals point away from the center.
struct CanopySpec {
    int object_id = 0;
    Vec3 center;
    Vec3 radii{1.5, 1.5, 1.5};
    double spacing_m = 0.3;
    ObjectClass object_class = ObjectClass::tree_canopy;
};

struct SceneSpec {
    std::vector<WallSpec> walls;
    std::vector<CanopySpec> blobs;
    double spacing_m = 0.1;
};

inline Vec3 wall_normal(const WallSpec& w) { return normalized(cross(w.edge_u, w.edge_v)); }

inline std::vector<ScenePoint> sample_wall(const WallSpec& w, double spacing_m) {
    if (!(spacing_m > 0.0)) throw ValidationError("point spacing must be positive");
    const Vec3 n = cross(w.edge_u, w.edge_v);
    if (!(norm(n) > 0.0)) throw ValidationError("wall " + std::to_string(w.object_id) + " has zero area");
    const Vec3 normal = normalized(n);
    const auto count = [&](const Vec3& e) { return static_cast<std::size_t>(std::llround(norm(e) / spacing_m)) + 1; };
    const std::size_t nu = count(w.edge_u), nv = count(w.edge_v);
    std::vector<ScenePoint> out;
    out.reserve(nu * nv);
    for (std::size_t i = 0; i < nu; ++i) {
        const double a = nu > 1 ? static_cast<double>(i) / static_cast<double>(nu - 1) : 0.0;
        for (std::size_t j = 0; j < nv; ++j) {
            const double b = nv > 1 ? static_cast<double>(j) / static_cast<double>(nv - 1) : 0.0;
            out.push_back({w.origin + w.edge_u * a + w.edge_v * b, normal, w.object_id, w.object_class});
        }
    }
    return out;
}

inline std::vector<ScenePoint> sample_blob(const CanopySpec& c) {
    if (!(c.spacing_m > 0.0)) throw ValidationError("canopy spacing must be positive");
    if (!(c.radii.x > 0.0 && c.radii.y > 0.0 && c.radii.z > 0.0))
        throw ValidationError("canopy " + std::to_string(c.object_id) + " needs positive radii");
    std::vector<ScenePoint> out;
    const auto steps = [&](double r) { return static_cast<long long>(std::floor(r / c.spacing_m)); };
    const long long nx = steps(c.radii.x), ny = steps(c.radii.y), nz = steps(c.radii.z);
    for (long long i = -nx; i <= nx; ++i)
        for (long long j = -ny; j <= ny; ++j)
            for (long long k = -nz; k <= nz; ++k) {
                const Vec3 off{static_cast<double>(i) * c.spacing_m, static_cast<double>(j) * c.spacing_m,
                               static_cast<double>(k) * c.spacing_m};
                const Vec3 scaled{off.x / c.radii.x, off.y / c.radii.y, off.z / c.radii.z};
                if (norm2(scaled) > 1.0) continue;
                const Vec3 grad{scaled.x / c.radii.x, scaled.y / c.radii.y, scaled.z / c.radii.z};
                const Vec3 n = norm(grad) > 0.0 ? normalized(grad) : Vec3{0.0, 0.0, 1.0};
                out.push_back({c.center + off, n, c.object_id, c.object_class});
            }
    return out;
}

inline PointCloud make_synthetic_scene(const SceneSpec& spec) {
    std::vector<ScenePoint> pts;
    for (const auto& w : spec.walls) {
        auto s = sample_wall(w, spec.spacing_m);
        pts.insert(pts.end(), s.begin(), s.end());
    }
    for (const auto& b : spec.blobs) {
        auto s = sample_blob(b);
        pts.insert(pts.end(), s.begin(), s.end());
    }
    return PointCloud(std::move(pts), spec.spacing_m);
}

/// Office floor seen from a street: a glazed facade at y = 0 facing -y, three
/// rooms along it, a corridor behind them, a parking-structure wall across
/// the street and trees in between. Side and back walls separate the floor
/// from neighbouring units and are partitions, not exterior walls.
struct ShoeboxSpec {
    double width_m = 20.0;         // along x
    double depth_m = 8.5;          // along y, facade to back wall
    double height_m = 3.0;
    double room_split_1_m = 6.0;   // x of the first interior wall
    double room_split_2_m = 13.0;  // x of the second one; the room beyond has double glazing
    double corridor_y_m = 6.0;
    double parking_y_m = -40.0;
    double parking_height_m = 8.0;
    double parking_margin_m = 10.0;  // parking wall overhang beyond the building on each side
    double spacing_m = 0.1;
    std::vector<CanopySpec> canopies{{100, {3.0, -5.0, 2.5}, {1.5, 1.5, 1.5}, 0.3},
                                     {101, {17.0, -6.0, 2.5}, {1.5, 1.5, 1.5}, 0.3}};
    bool include_clutter = true;  // a small unlabeled box ("other")
};

namespace shoebox_ids {
inline constexpr int facade_room1 = 1;
inline constexpr int facade_room2 = 2;
inline constexpr int facade_room3 = 3;
inline constexpr int side_west = 4;
inline constexpr int side_east = 5;
inline constexpr int back = 6;
inline constexpr int wall_room12 = 10;
inline constexpr int wall_room23 = 11;
inline constexpr int corridor = 12;
inline constexpr int parking = 20;
inline constexpr int clutter = 30;
}  // namespace shoebox_ids

inline SceneSpec shoebox_scene_spec(const ShoeboxSpec& s) {
    if (!(s.width_m > 0.0 && s.depth_m > 0.0 && s.height_m > 0.0 && s.spacing_m > 0.0))
        throw ValidationError("shoebox dimensions must be positive");
    if (!(s.room_split_1_m > 0.0 && s.room_split_1_m < s.room_split_2_m && s.room_split_2_m < s.width_m))
        throw ValidationError("room splits must be increasing inside the building");
    if (!(s.corridor_y_m > 0.0 && s.corridor_y_m < s.depth_m)) throw ValidationError("corridor must lie inside");
    if (!(s.parking_y_m < 0.0)) throw ValidationError("parking wall must be in front of the facade");
    namespace id = shoebox_ids;
    const double h = s.height_m;
    const Vec3 up{0.0, 0.0, h};
    SceneSpec spec;
    spec.spacing_m = s.spacing_m;
    auto& w = spec.walls;
    // edge order gives the outward normal through the cross product
    w.push_back({id::facade_room1, ObjectClass::window_triple, {0, 0, 0}, {s.room_split_1_m, 0, 0}, up});
    w.push_back({id::facade_room2, ObjectClass::window_triple, {s.room_split_1_m, 0, 0},
                 {s.room_split_2_m - s.room_split_1_m, 0, 0}, up});
    w.push_back({id::facade_room3, ObjectClass::window_double, {s.room_split_2_m, 0, 0},
                 {s.width_m - s.room_split_2_m, 0, 0}, up});
    w.push_back({id::side_west, ObjectClass::interior_wall, {0, 0, 0}, up, {0, s.depth_m, 0}});
    w.push_back({id::side_east, ObjectClass::interior_wall, {s.width_m, 0, 0}, {0, s.depth_m, 0}, up});
    w.push_back({id::back, ObjectClass::interior_wall, {0, s.depth_m, 0}, up, {s.width_m, 0, 0}});
    w.push_back({id::wall_room12, ObjectClass::interior_wall, {s.room_split_1_m, 0, 0}, {0, s.corridor_y_m, 0}, up});
    w.push_back({id::wall_room23, ObjectClass::interior_wall, {s.room_split_2_m, 0, 0}, {0, s.corridor_y_m, 0}, up});
    w.push_back({id::corridor, ObjectClass::interior_wall, {0, s.corridor_y_m, 0}, up, {s.width_m, 0, 0}});
    w.push_back({id::parking, ObjectClass::exterior_wall, {-s.parking_margin_m, s.parking_y_m, 0},
                 {0, 0, s.parking_height_m}, {s.width_m + 2 * s.parking_margin_m, 0, 0}});
    spec.blobs = s.canopies;
    if (s.include_clutter)
        spec.blobs.push_back({id::clutter, {-4.0, -3.0, 0.5}, {0.4, 0.4, 0.4}, 0.2, ObjectClass::other});
    return spec;
}

inline PointCloud make_shoebox(const ShoeboxSpec& s = {}) { return make_synthetic_scene(shoebox_scene_spec(s)); }

/// Transmitters on the far kerb in front of the parking wall, receivers in the
/// three rooms at least 1 m from every wall; all 1.5 m high.
inline LinkSet shoebox_links(double frequency_hz = 4.65e9) {
    LinkSet l;
    l.carrier_frequency_hz = frequency_hz;
    l.tx_positions = {{4.0, -36.0, 1.5}, {15.0, -36.0, 1.5}};
    l.rx_positions = {{2.0, 2.0, 1.5},  {4.5, 3.5, 1.5},  {3.0, 4.8, 1.5},  {8.0, 1.5, 1.5},
                      {10.5, 3.0, 1.5}, {12.0, 4.5, 1.5}, {15.0, 2.5, 1.5}, {17.5, 4.0, 1.5}};
    return l;
}

}  // namespace o2i
