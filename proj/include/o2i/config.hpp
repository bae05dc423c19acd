#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "channel.hpp"
#include "errors.hpp"
#include "scene.hpp"
#include "synthetic.hpp"

namespace o2i {

using json = nlohmann::json;

struct BandCanopy {
    double frequency_hz = 0.0;
    double loss_db_per_m = 0.0;
};

/// Everything a batch run needs. Loaded from JSON; every physical key carries
/// its unit as a suffix.
struct RunConfig {
    std::string scene_path;                    // empty = built-in synthetic shoebox
    double resolution_m = 0.1;
    std::vector<double> bands_hz{4.65e9, 14.25e9};
    LinkSet links = shoebox_links();
    MaterialTable materials = MaterialTable::defaults();
    StackSet stacks = StackSet::defaults();
    FilmParameters films{nm_to_m(5.0), nm_to_m(40.0)};
    std::vector<BandCanopy> canopy{{4.65e9, 1.1}, {14.25e9, 2.1}};
    PolarizationPolicy polarization = PolarizationPolicy::te;
    int max_bounces = 4;
    double dynamic_range_db = 20.0;
    double delay_limit_ns = 350.0;
    ModelVariant variant = ModelVariant::full_floor_plan;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = hardware concurrency
    CalibrationGrids grids;
    RefineOptions refine;
    JitterOptions jitter;
    std::optional<Link> jitter_link;

    void validate() const {
        if (max_bounces < 0 || max_bounces > max_supported_bounces) throw ConfigError("max_bounces must lie in [0, 4]");
        if (!(delay_limit_ns > 0.0)) throw ConfigError("delay_limit_ns must be positive");
        if (!(dynamic_range_db >= 0.0)) throw ConfigError("dynamic_range_db must be >= 0");
        if (!(resolution_m > 0.0)) throw ConfigError("resolution_m must be positive");
        if (bands_hz.empty()) throw ConfigError("at least one band is required");
        for (double f : bands_hz) {
            if (!(f > 0.0)) throw ConfigError("band frequencies must be positive");
            for (const char* m : {"concrete", "plasterboard", "glass", "metal"})
                if (!materials.has_band(m, f))
                    throw ConfigError(std::string("material '") + m + "' has no permittivity at " +
                                      std::to_string(f) + " Hz");
            canopy_loss(f);
        }
        try {
            for (auto r : {StackRole::window_triple, StackRole::window_double, StackRole::interior_wall,
                           StackRole::exterior_solid}) {
                const auto& s = stacks.get(r);
                s.validate();
                for (const auto& l : s.layers)
                    if (!materials.contains(l.material)) throw ConfigError("unknown material '" + l.material + "'");
            }
            films.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        for (const auto& c : canopy)
            if (!(c.loss_db_per_m >= 0.0)) throw ConfigError("canopy loss must be >= 0 dB/m");
        grids.film_nm.validate("film");
        grids.canopy_db_per_m.validate("canopy loss");
        try {
            links.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        }
    }

    double canopy_loss(double band_hz) const {
        for (const auto& c : canopy)
            if (MaterialTable::same_band(c.frequency_hz, band_hz)) return c.loss_db_per_m;
        throw ConfigError("no canopy loss configured for " + std::to_string(band_hz) + " Hz");
    }

    PathGainModel gain_model(double band_hz) const {
        PathGainModel m;
        m.materials = materials;
        m.stacks = stacks;
        m.films = films;
        m.canopy_loss_db_per_m = canopy_loss(band_hz);
        m.polarization = polarization;
        return apply_variant(m, variant);
    }

    SimulationOptions simulation() const {
        SimulationOptions s;
        s.max_bounces = max_bounces;
        s.dynamic_range_db = dynamic_range_db;
        s.delay_limit_ns = delay_limit_ns;
        s.workers = workers;
        return s;
    }

    /// Band from the configured list matching a frequency given in GHz.
    std::optional<double> band_from_ghz(double ghz) const {
        for (double f : bands_hz)
            if (std::fabs(f / 1e9 - ghz) <= 5e-4) return f;
        return std::nullopt;
    }
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

inline double get_number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    return v.get<double>();
}

inline Vec3 get_vec3(const json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(what + " must be a 3-element array");
    return {get_number(v[0], what), get_number(v[1], what), get_number(v[2], what)};
}

inline std::vector<Vec3> get_vec3_list(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError(what + " must be an array of 3-vectors");
    std::vector<Vec3> out;
    for (const auto& e : v) out.push_back(get_vec3(e, what));
    return out;
}

inline Grid get_grid(const json& v, const std::string& what) {
    check_keys(v, {"start", "step", "count"}, what);
    Grid g;
    if (v.contains("start")) g.start = get_number(v["start"], what + ".start");
    if (v.contains("step")) g.step = get_number(v["step"], what + ".step");
    if (v.contains("count")) {
        if (!v["count"].is_number_unsigned()) throw ConfigError(what + ".count must be a non-negative integer");
        g.count = v["count"].get<std::size_t>();
    }
    return g;
}

inline LayerStack get_stack(const json& v, StackRole role) {
    const std::string where = "stacks." + std::string(to_string(role));
    check_keys(v, {"layers", "film_after"}, where);
    LayerStack s;
    s.role = role;
    if (!v.contains("layers") || !v["layers"].is_array()) throw ConfigError(where + ".layers must be an array");
    for (const auto& l : v["layers"]) {
        check_keys(l, {"material", "thickness_m"}, where + ".layers[]");
        if (!l.contains("material") || !l["material"].is_string()) throw ConfigError(where + " layer needs a material");
        if (!l.contains("thickness_m")) throw ConfigError(where + " layer needs thickness_m");
        s.layers.push_back({l["material"].get<std::string>(), get_number(l["thickness_m"], where + ".thickness_m")});
    }
    if (v.contains("film_after") && !v["film_after"].is_null()) {
        if (!v["film_after"].is_number_unsigned()) throw ConfigError(where + ".film_after must be a layer index");
        s.film_after = v["film_after"].get<std::size_t>();
    }
    return s;
}

}  // namespace detail

/// Parses a config document. Relative scene paths are resolved against `base_dir`.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    check_keys(j,
               {"scene_path", "resolution_m", "bands_hz", "bandwidth_hz", "links", "materials", "stacks", "gain_model",
                "max_bounces", "dynamic_range_db", "delay_limit_ns", "variant", "seed", "workers", "calibration",
                "jitter"},
               "config");
    RunConfig c;
    if (j.contains("scene_path")) {
        if (!j["scene_path"].is_string()) throw ConfigError("scene_path must be a string");
        std::filesystem::path p = j["scene_path"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        c.scene_path = p.string();
    }
    if (j.contains("resolution_m")) c.resolution_m = get_number(j["resolution_m"], "resolution_m");
    if (j.contains("bands_hz")) {
        if (!j["bands_hz"].is_array()) throw ConfigError("bands_hz must be an array");
        c.bands_hz.clear();
        for (const auto& f : j["bands_hz"]) c.bands_hz.push_back(get_number(f, "bands_hz"));
    }
    c.links.carrier_frequency_hz = c.bands_hz.empty() ? 0.0 : c.bands_hz.front();
    if (j.contains("bandwidth_hz")) c.links.bandwidth_hz = get_number(j["bandwidth_hz"], "bandwidth_hz");
    if (j.contains("links")) {
        check_keys(j["links"], {"tx_m", "rx_m"}, "links");
        c.links.tx_positions = get_vec3_list(j["links"].value("tx_m", json::array()), "links.tx_m");
        c.links.rx_positions = get_vec3_list(j["links"].value("rx_m", json::array()), "links.rx_m");
    }
    if (j.contains("materials")) {
        if (!j["materials"].is_array()) throw ConfigError("materials must be an array");
        for (const auto& m : j["materials"]) {
            check_keys(m, {"name", "frequency_hz", "eps_real", "eps_imag"}, "materials[]");
            if (!m.contains("name") || !m["name"].is_string()) throw ConfigError("material entry needs a name");
            for (const char* k : {"frequency_hz", "eps_real", "eps_imag"})
                if (!m.contains(k)) throw ConfigError(std::string("material entry needs ") + k);
            c.materials.set(m["name"].get<std::string>(), get_number(m["frequency_hz"], "frequency_hz"),
                            {get_number(m["eps_real"], "eps_real"), get_number(m["eps_imag"], "eps_imag")});
        }
    }
    if (j.contains("stacks")) {
        check_keys(j["stacks"], {"window_triple", "window_double", "interior_wall", "exterior_solid"}, "stacks");
        for (const auto& [k, v] : j["stacks"].items()) {
            const auto role = *parse_stack_role(k);
            c.stacks.get(role) = get_stack(v, role);
        }
    }
    if (j.contains("gain_model")) {
        const auto& g = j["gain_model"];
        check_keys(g, {"polarization", "triple_film_m", "double_film_m", "canopy_loss_db_per_m"}, "gain_model");
        if (g.contains("polarization")) {
            const auto p = g["polarization"].is_string()
                               ? parse_polarization_policy(g["polarization"].get<std::string>())
                               : std::nullopt;
            if (!p) throw ConfigError("polarization must be one of te, tm, average");
            c.polarization = *p;
        }
        if (g.contains("triple_film_m")) c.films.triple_film_m = get_number(g["triple_film_m"], "triple_film_m");
        if (g.contains("double_film_m")) c.films.double_film_m = get_number(g["double_film_m"], "double_film_m");
        if (g.contains("canopy_loss_db_per_m")) {
            const auto& cl = g["canopy_loss_db_per_m"];
            if (!cl.is_array()) throw ConfigError("canopy_loss_db_per_m must be an array");
            c.canopy.clear();
            for (const auto& e : cl) {
                check_keys(e, {"frequency_hz", "loss_db_per_m"}, "canopy_loss_db_per_m[]");
                if (!e.contains("frequency_hz") || !e.contains("loss_db_per_m"))
                    throw ConfigError("canopy entries need frequency_hz and loss_db_per_m");
                c.canopy.push_back({get_number(e["frequency_hz"], "frequency_hz"),
                                    get_number(e["loss_db_per_m"], "loss_db_per_m")});
            }
        }
    }
    if (j.contains("max_bounces")) {
        if (!j["max_bounces"].is_number_integer()) throw ConfigError("max_bounces must be an integer");
        c.max_bounces = j["max_bounces"].get<int>();
    }
    if (j.contains("dynamic_range_db")) c.dynamic_range_db = get_number(j["dynamic_range_db"], "dynamic_range_db");
    if (j.contains("delay_limit_ns")) c.delay_limit_ns = get_number(j["delay_limit_ns"], "delay_limit_ns");
    if (j.contains("variant")) {
        const auto v = j["variant"].is_string() ? parse_model_variant(j["variant"].get<std::string>()) : std::nullopt;
        if (!v) throw ConfigError("variant must be one of full_floor_plan, exteriors_only, no_metal_film");
        c.variant = *v;
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("workers")) {
        if (!j["workers"].is_number_unsigned()) throw ConfigError("workers must be a non-negative integer");
        c.workers = j["workers"].get<unsigned>();
    }
    if (j.contains("calibration")) {
        const auto& k = j["calibration"];
        check_keys(k, {"film_nm", "canopy_db_per_m", "delay_window_ns", "azimuth_window_deg", "noise_floor_db"},
                   "calibration");
        if (k.contains("film_nm")) c.grids.film_nm = get_grid(k["film_nm"], "calibration.film_nm");
        if (k.contains("canopy_db_per_m"))
            c.grids.canopy_db_per_m = get_grid(k["canopy_db_per_m"], "calibration.canopy_db_per_m");
        if (k.contains("delay_window_ns")) c.refine.delay_window_ns = get_number(k["delay_window_ns"], "delay_window_ns");
        if (k.contains("azimuth_window_deg"))
            c.refine.azimuth_window_deg = get_number(k["azimuth_window_deg"], "azimuth_window_deg");
        if (k.contains("noise_floor_db")) c.refine.noise_floor_db = get_number(k["noise_floor_db"], "noise_floor_db");
    }
    if (j.contains("jitter")) {
        const auto& k = j["jitter"];
        check_keys(k, {"box_m", "steps", "small_angle_change_deg", "tx_m", "rx_m"}, "jitter");
        if (k.contains("box_m")) c.jitter.box_m = get_number(k["box_m"], "jitter.box_m");
        if (k.contains("steps")) {
            if (!k["steps"].is_number_unsigned()) throw ConfigError("jitter.steps must be a positive integer");
            c.jitter.steps = k["steps"].get<std::size_t>();
        }
        if (k.contains("small_angle_change_deg"))
            c.jitter.small_angle_change_deg = get_number(k["small_angle_change_deg"], "small_angle_change_deg");
        if (k.contains("tx_m") != k.contains("rx_m")) throw ConfigError("jitter needs both tx_m and rx_m");
        if (k.contains("tx_m"))
            c.jitter_link = Link{"Jitter", get_vec3(k["tx_m"], "jitter.tx_m"), get_vec3(k["rx_m"], "jitter.rx_m")};
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
    }
    return parse_config(j, std::filesystem::path(path).parent_path());
}

/// Scene of a run: the point file when one is configured, the synthetic shoebox otherwise.
inline PointCloud load_scene(const RunConfig& c) {
    if (c.scene_path.empty()) return make_shoebox();
    return PointCloud(load_points(c.scene_path), c.resolution_m);
}

inline json to_json(const Grid& g) { return {{"start", g.start}, {"step", g.step}, {"count", g.count}}; }

}  // namespace o2i
