#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "kdtree.hpp"

namespace o2i {

enum class ObjectClass { exterior_wall, interior_wall, window_triple, window_double, tree_canopy, other };

inline std::string_view to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::exterior_wall: return "exterior_wall";
        case ObjectClass::interior_wall: return "interior_wall";
        case ObjectClass::window_triple: return "window_triple";
        case ObjectClass::window_double: return "window_double";
        case ObjectClass::tree_canopy: return "tree_canopy";
        case ObjectClass::other: return "other";
    }
    return "other";
}

inline std::optional<ObjectClass> parse_object_class(std::string_view s) {
    for (auto c : {ObjectClass::exterior_wall, ObjectClass::interior_wall, ObjectClass::window_triple,
                   ObjectClass::window_double, ObjectClass::tree_canopy, ObjectClass::other})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

/// Walls and windows may act as specular reflectors; canopies and `other` never do.
inline bool is_reflector(ObjectClass c) {
    return c == ObjectClass::exterior_wall || c == ObjectClass::interior_wall ||
           c == ObjectClass::window_triple || c == ObjectClass::window_double;
}

inline bool is_window(ObjectClass c) {
    return c == ObjectClass::window_triple || c == ObjectClass::window_double;
}

struct ScenePoint {
    Vec3 position;
    Vec3 normal;
    int object_id = 0;
    ObjectClass object_class = ObjectClass::other;
};

inline constexpr double normal_tolerance = 1e-6;

/// Labeled point cloud with a k-d tree over positions. Immutable after construction.
class PointCloud {
public:
    struct Object {
        int id = 0;
        ObjectClass object_class = ObjectClass::other;
        std::vector<std::size_t> points;  // ascending
    };

    PointCloud() = default;

    PointCloud(std::vector<ScenePoint> points, double resolution_hint)
        : points_(std::move(points)), resolution_hint_(resolution_hint) {
        if (!(resolution_hint_ > 0.0) || !std::isfinite(resolution_hint_))
            throw ValidationError("resolution hint must be positive");
        std::map<int, std::size_t> slot;
        std::vector<Vec3> positions;
        positions.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const ScenePoint& p = points_[i];
            validate(p, i);
            auto [it, inserted] = slot.try_emplace(p.object_id, objects_.size());
            if (inserted) objects_.push_back({p.object_id, p.object_class, {}});
            Object& obj = objects_[it->second];
            if (obj.object_class != p.object_class)
                throw ValidationError("object " + std::to_string(p.object_id) + " mixes classes " +
                                      std::string(to_string(obj.object_class)) + " and " +
                                      std::string(to_string(p.object_class)));
            obj.points.push_back(i);
            positions.push_back(p.position);
        }
        std::sort(objects_.begin(), objects_.end(), [](const Object& a, const Object& b) { return a.id < b.id; });
        for (std::size_t k = 0; k < objects_.size(); ++k) object_slot_[objects_[k].id] = k;
        index_ = KdTree(std::move(positions));
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<ScenePoint>& points() const { return points_; }
    const ScenePoint& operator[](std::size_t i) const { return points_[i]; }
    double resolution_hint() const { return resolution_hint_; }
    const KdTree& index() const { return index_; }

    /// Objects sorted by id.
    const std::vector<Object>& objects() const { return objects_; }
    const Object& object(int id) const {
        auto it = object_slot_.find(id);
        if (it == object_slot_.end()) throw ConfigError("unknown object id " + std::to_string(id));
        return objects_[it->second];
    }
    ObjectClass class_of(int id) const { return object(id).object_class; }

    /// Copy keeping only points whose class satisfies the predicate.
    template <class Pred>
    PointCloud filtered(Pred&& keep) const {
        std::vector<ScenePoint> kept;
        for (const auto& p : points_)
            if (keep(p.object_class)) kept.push_back(p);
        return PointCloud(std::move(kept), resolution_hint_);
    }

private:
    static void validate(const ScenePoint& p, std::size_t i) {
        const auto finite = [](const Vec3& v) {
            return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
        };
        if (!finite(p.position) || !finite(p.normal))
            throw ValidationError("point " + std::to_string(i) + " has non-finite coordinates");
        if (std::fabs(norm(p.normal) - 1.0) > normal_tolerance)
            throw ValidationError("point " + std::to_string(i) + " normal is not unit length");
        if (p.object_id < 0) throw ValidationError("point " + std::to_string(i) + " has negative object id");
    }

    std::vector<ScenePoint> points_;
    double resolution_hint_ = 0.1;
    std::vector<Object> objects_;
    std::map<int, std::size_t> object_slot_;
    KdTree index_;
};

// ---------------------------------------------------------------------------
// Scene file: one point per line, `x y z nx ny nz object_id object_class`.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t b = i;
        while (i < s.size() && !(s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

inline std::vector<ScenePoint> read_points(std::istream& in) {
    std::vector<ScenePoint> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        const auto tok = detail::split_ws(view);
        if (tok.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(tok.size()), lineno);
        double v[6];
        for (int k = 0; k < 6; ++k)
            if (!detail::parse_number(tok[k], v[k]))
                throw ParseError("invalid number '" + std::string(tok[k]) + "'", lineno);
        ScenePoint p;
        p.position = {v[0], v[1], v[2]};
        p.normal = {v[3], v[4], v[5]};
        if (!detail::parse_number(tok[6], p.object_id))
            throw ParseError("invalid object id '" + std::string(tok[6]) + "'", lineno);
        const auto cls = parse_object_class(tok[7]);
        if (!cls) throw ParseError("unknown object class '" + std::string(tok[7]) + "'", lineno);
        p.object_class = *cls;
        if (std::fabs(norm(p.normal) - 1.0) > normal_tolerance)
            throw ValidationError("normal is not unit length (line " + std::to_string(lineno) + ")");
        pts.push_back(p);
    }
    return pts;
}

inline std::vector<ScenePoint> load_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scene file '" + path + "'");
    return read_points(in);
}

/// Writes points with 17 significant digits so a reload is bit-exact.
inline void write_points(std::ostream& out, const std::vector<ScenePoint>& pts) {
    out << "# x y z nx ny nz object_id object_class\n";
    char buf[512];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g %d %s\n", p.position.x, p.position.y,
                      p.position.z, p.normal.x, p.normal.y, p.normal.z, p.object_id,
                      std::string(to_string(p.object_class)).c_str());
        out << buf;
    }
}

inline void save_points(const std::string& path, const std::vector<ScenePoint>& pts) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write scene file '" + path + "'");
    write_points(out, pts);
}

// ---------------------------------------------------------------------------
// Materials and layer stacks
// ---------------------------------------------------------------------------

using Complex = std::complex<double>;

/// Complex relative permittivity per material and band, eps = eps' + j eps''
/// with eps'' >= 0. Lookup is band-exact (relative tolerance 1e-6), never interpolated.
class MaterialTable {
public:
    void set(const std::string& material, double frequency_hz, Complex eps) {
        if (!(frequency_hz > 0.0)) throw ConfigError("material frequency must be positive");
        if (eps.imag() < 0.0) throw ConfigError("material '" + material + "' has negative loss term");
        auto& bands = table_[material];
        for (auto& [f, e] : bands)
            if (same_band(f, frequency_hz)) {
                e = eps;
                return;
            }
        bands.emplace_back(frequency_hz, eps);
    }

    Complex permittivity(const std::string& material, double frequency_hz) const {
        if (material == "air") return {1.0, 0.0};
        const auto it = table_.find(material);
        if (it == table_.end()) throw ConfigError("unknown material '" + material + "'");
        for (const auto& [f, e] : it->second)
            if (same_band(f, frequency_hz)) return e;
        throw ConfigError("material '" + material + "' has no entry at " + std::to_string(frequency_hz) + " Hz");
    }

    bool contains(const std::string& material) const { return material == "air" || table_.count(material) > 0; }

    bool has_band(const std::string& material, double frequency_hz) const {
        if (material == "air") return true;
        const auto it = table_.find(material);
        if (it == table_.end()) return false;
        return std::any_of(it->second.begin(), it->second.end(),
                           [&](const auto& e) { return same_band(e.first, frequency_hz); });
    }

    const std::map<std::string, std::vector<std::pair<double, Complex>>>& entries() const { return table_; }

    static bool same_band(double a, double b) { return std::fabs(a - b) <= 1e-6 * std::fmax(a, b); }

    /// Values measured for the two sounding bands.
    static MaterialTable defaults() {
        MaterialTable t;
        t.set("concrete", 4.65e9, {5.31, 0.45});
        t.set("concrete", 14.25e9, {5.31, 0.35});
        t.set("plasterboard", 4.65e9, {2.94, 0.14});
        t.set("plasterboard", 14.25e9, {2.94, 0.09});
        t.set("glass", 4.65e9, {6.27, 0.10});
        t.set("glass", 14.25e9, {6.27, 0.13});
        t.set("metal", 4.65e9, {1.0, 4.50e8});
        t.set("metal", 14.25e9, {1.0, 1.28e8});
        return t;
    }

private:
    std::map<std::string, std::vector<std::pair<double, Complex>>> table_;
};

enum class StackRole { window_triple, window_double, interior_wall, exterior_solid };

inline std::string_view to_string(StackRole r) {
    switch (r) {
        case StackRole::window_triple: return "window_triple";
        case StackRole::window_double: return "window_double";
        case StackRole::interior_wall: return "interior_wall";
        case StackRole::exterior_solid: return "exterior_solid";
    }
    return "exterior_solid";
}

inline std::optional<StackRole> parse_stack_role(std::string_view s) {
    for (auto r : {StackRole::window_triple, StackRole::window_double, StackRole::interior_wall,
                   StackRole::exterior_solid})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

struct Layer {
    std::string material;
    double thickness_m = 0.0;
};

/// Ordered outside -> inside. When `film_after` is set, a metal film of the
/// calibrated thickness sits directly behind that layer.
struct LayerStack {
    StackRole role = StackRole::exterior_solid;
    std::vector<Layer> layers;
    std::optional<std::size_t> film_after;

    void validate() const {
        for (const auto& l : layers)
            if (!(l.thickness_m > 0.0) || !std::isfinite(l.thickness_m))
                throw ValidationError("stack " + std::string(to_string(role)) + " has a non-positive layer thickness");
        if (film_after && *film_after >= layers.size())
            throw ValidationError("stack " + std::string(to_string(role)) + " film position out of range");
    }
};

struct StackSet {
    LayerStack window_triple;
    LayerStack window_double;
    LayerStack interior_wall;
    LayerStack exterior_solid;

    const LayerStack& get(StackRole r) const {
        switch (r) {
            case StackRole::window_triple: return window_triple;
            case StackRole::window_double: return window_double;
            case StackRole::interior_wall: return interior_wall;
            case StackRole::exterior_solid: return exterior_solid;
        }
        return exterior_solid;
    }
    LayerStack& get(StackRole r) { return const_cast<LayerStack&>(std::as_const(*this).get(r)); }

    /// Stack used for an object class; tree canopies and `other` have none.
    std::optional<StackRole> role_for(ObjectClass c) const {
        switch (c) {
            case ObjectClass::window_triple: return StackRole::window_triple;
            case ObjectClass::window_double: return StackRole::window_double;
            case ObjectClass::interior_wall: return StackRole::interior_wall;
            case ObjectClass::exterior_wall: return StackRole::exterior_solid;
            default: return std::nullopt;
        }
    }

    static StackSet defaults() {
        StackSet s;
        s.window_triple = {StackRole::window_triple,
                           {{"glass", 0.004}, {"air", 0.020}, {"glass", 0.003}, {"air", 0.016}, {"glass", 0.003}},
                           0};
        s.window_double = {StackRole::window_double, {{"glass", 0.004}, {"air", 0.016}, {"glass", 0.004}}, 0};
        s.interior_wall = {StackRole::interior_wall,
                           {{"plasterboard", 0.015}, {"air", 0.070}, {"plasterboard", 0.015}},
                           std::nullopt};
        s.exterior_solid = {StackRole::exterior_solid, {{"concrete", 0.300}}, std::nullopt};
        return s;
    }
};

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

struct Link {
    std::string id;
    Vec3 tx;
    Vec3 rx;
};

struct LinkSet {
    std::vector<Vec3> tx_positions;
    std::vector<Vec3> rx_positions;
    double carrier_frequency_hz = 4.65e9;
    double bandwidth_hz = 500e6;

    void validate() const {
        if (!(carrier_frequency_hz > 0.0)) throw ValidationError("carrier frequency must be positive");
        for (const auto& t : tx_positions)
            for (const auto& r : rx_positions)
                if (t == r) throw ValidationError("a Tx and an Rx share the same position");
    }

    /// Every Tx-Rx pair, ids "Tx<i>Rx<j>" (1-based), Tx-major.
    std::vector<Link> links() const {
        std::vector<Link> out;
        for (std::size_t i = 0; i < tx_positions.size(); ++i)
            for (std::size_t j = 0; j < rx_positions.size(); ++j)
                out.push_back({"Tx" + std::to_string(i + 1) + "Rx" + std::to_string(j + 1), tx_positions[i],
                               rx_positions[j]});
        return out;
    }
};

inline double wavelength(double frequency_hz) { return speed_of_light / frequency_hz; }

}  // namespace o2i
