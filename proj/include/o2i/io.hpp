#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "channel.hpp"
#include "errors.hpp"
#include "scene.hpp"
#include "tracer.hpp"

namespace o2i::io {

using json = nlohmann::json;

/// Shortest text for a double at the given precision; nan/inf spelled out.
inline std::string num(double v, int digits = 12) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::string band_ghz(double hz) { return num(hz / 1e9, 10); }

// JSON numbers must be finite
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

struct PathRecordSet {
    std::string link_id;
    double band_hz = 0.0;
    std::vector<PropagationPath> paths;
};

inline std::string interaction_text(const Interaction& in) {
    return std::string(to_string(in.kind)) + ":" + std::to_string(in.object_id) + ":" +
           num(rad_to_deg(in.incidence_angle), 10) + ":" + num(in.fresnel_scale_q, 10) + ":" +
           num(in.penetration_length_m, 10);
}

inline void write_paths_csv(std::ostream& out, const std::vector<PathRecordSet>& sets) {
    out << "link_id,band_ghz,path_index,n_bounces,delay_ns,aoa_deg,length_m,gain_db,interactions\n";
    for (const auto& s : sets)
        for (std::size_t k = 0; k < s.paths.size(); ++k) {
            const auto& p = s.paths[k];
            out << s.link_id << ',' << band_ghz(s.band_hz) << ',' << k << ',' << p.reflection_count() << ','
                << num(p.delay_ns()) << ',' << num(p.aoa_azimuth_deg()) << ',' << num(p.geometric_length_m) << ','
                << (p.gain_db ? num(*p.gain_db) : std::string("nan")) << ',';
            for (std::size_t i = 0; i < p.interactions.size(); ++i)
                out << (i ? ";" : "") << interaction_text(p.interactions[i]);
            out << '\n';
        }
}

inline json path_json(const std::string& link_id, double band_hz, std::size_t index, const PropagationPath& p) {
    json inter = json::array();
    for (const auto& in : p.interactions)
        inter.push_back({{"kind", std::string(to_string(in.kind))},
                         {"object_id", in.object_id},
                         {"object_class", std::string(to_string(in.object_class))},
                         {"angle_deg", jnum(rad_to_deg(in.incidence_angle))},
                         {"q", jnum(in.fresnel_scale_q)},
                         {"d_m", jnum(in.penetration_length_m)},
                         {"segment", in.segment},
                         {"point_m", {jnum(in.point.x), jnum(in.point.y), jnum(in.point.z)}}});
    json verts = json::array();
    for (const auto& v : p.vertices) verts.push_back({jnum(v.x), jnum(v.y), jnum(v.z)});
    return {{"link_id", link_id},
            {"band_ghz", jnum(band_hz / 1e9)},
            {"path_index", index},
            {"n_bounces", p.reflection_count()},
            {"delay_ns", jnum(p.delay_ns())},
            {"aoa_deg", jnum(p.aoa_azimuth_deg())},
            {"length_m", jnum(p.geometric_length_m)},
            {"gain_db", p.gain_db ? jnum(*p.gain_db) : json(nullptr)},
            {"vertices_m", verts},
            {"interactions", inter}};
}

inline void write_paths_jsonl(std::ostream& out, const std::vector<PathRecordSet>& sets) {
    for (const auto& s : sets)
        for (std::size_t k = 0; k < s.paths.size(); ++k) out << path_json(s.link_id, s.band_hz, k, s.paths[k]).dump() << '\n';
}

// ---------------------------------------------------------------------------
// LSPs
// ---------------------------------------------------------------------------

inline void write_lsp_csv(std::ostream& out, const std::vector<LspRecord>& recs) {
    out << "link_id,band_ghz,incidence_deg,pl_db,ds_ns,as_deg,model_variant\n";
    for (const auto& r : recs)
        out << r.link_id << ',' << band_ghz(r.band_hz) << ',' << num(r.incidence_deg) << ','
            << num(r.lsp.path_loss_db) << ',' << num(r.lsp.delay_spread_ns) << ',' << num(r.lsp.azimuth_spread_deg)
            << ',' << to_string(r.variant) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double field_number(const std::string& s, std::size_t line, const char* what) {
    if (s == "nan") return std::nan("");
    double v = 0.0;
    if (!o2i::detail::parse_number(std::string_view(s), v))
        throw ParseError(std::string("invalid ") + what + " '" + s + "'", line);
    return v;
}

// Reads a CSV with the given header; calls row(fields, line) per data line.
template <class Row>
void read_csv(std::istream& in, const std::vector<std::string>& header, Row&& row) {
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = o2i::detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto f = split_csv(std::string(t));
        if (!seen_header) {
            if (f != header) throw ParseError("unexpected CSV header", lineno);
            seen_header = true;
            continue;
        }
        if (f.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                             lineno);
        row(f, lineno);
    }
    if (!seen_header) throw ParseError("missing CSV header", 0);
}

}  // namespace detail

inline std::vector<LspRecord> read_lsp_csv(std::istream& in) {
    std::vector<LspRecord> out;
    detail::read_csv(in, {"link_id", "band_ghz", "incidence_deg", "pl_db", "ds_ns", "as_deg", "model_variant"},
                     [&](const std::vector<std::string>& f, std::size_t line) {
                         LspRecord r;
                         r.link_id = f[0];
                         r.band_hz = detail::field_number(f[1], line, "band") * 1e9;
                         r.incidence_deg = detail::field_number(f[2], line, "incidence");
                         r.lsp.path_loss_db = detail::field_number(f[3], line, "path loss");
                         r.lsp.delay_spread_ns = detail::field_number(f[4], line, "delay spread");
                         r.lsp.azimuth_spread_deg = detail::field_number(f[5], line, "azimuth spread");
                         const auto v = parse_model_variant(f[6]);
                         if (!v) throw ParseError("unknown model variant '" + f[6] + "'", line);
                         r.variant = *v;
                         out.push_back(r);
                     });
    return out;
}

inline json comparison_json(const std::vector<BandComparison>& cmp) {
    json bands = json::array();
    for (const auto& b : cmp) {
        json metrics = json::object();
        for (const auto& m : b.metrics)
            metrics[std::string(to_string(m.metric))] = {{"mean_error", jnum(m.mean_error)},
                                                         {"rms_error", jnum(m.rms_error)},
                                                         {"mean_error_pct", jnum(m.mean_error_pct)},
                                                         {"rms_error_pct", jnum(m.rms_error_pct)},
                                                         {"simulated_mean", jnum(m.simulated.mean)},
                                                         {"simulated_std", jnum(m.simulated.stddev)},
                                                         {"reference_mean", jnum(m.reference.mean)},
                                                         {"reference_std", jnum(m.reference.stddev)}};
        bands.push_back({{"band_ghz", jnum(b.band_hz / 1e9)}, {"links", b.links}, {"metrics", metrics}});
    }
    return {{"bands", bands}};
}

/// Per-band mean / std of each LSP column.
inline json lsp_summary_json(const std::vector<LspRecord>& recs) {
    std::map<double, std::vector<const LspRecord*>> by_band;
    for (const auto& r : recs) by_band[r.band_hz].push_back(&r);
    json out = json::array();
    for (const auto& [band, rs] : by_band) {
        json metrics = json::object();
        for (const LspMetric m : all_metrics) {
            std::vector<double> v;
            for (const auto* r : rs) v.push_back(metric_of(r->lsp, m));
            const auto s = summarize(v);
            metrics[std::string(to_string(m))] = {{"mean", jnum(s.mean)}, {"std", jnum(s.stddev)}};
        }
        out.push_back({{"band_ghz", jnum(band / 1e9)}, {"links", rs.size()}, {"metrics", metrics}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// PADP
// ---------------------------------------------------------------------------

/// Dense grid: one row per delay bin, one column per azimuth bin, power in dB
/// (empty cell = no path in that bin).
inline void write_padp_header(std::ostream& out) {
    out << "link_id,band_ghz,delay_ns";
    for (std::size_t j = 0; j < Padp::azimuth_bins; ++j) out << ",az_" << num(static_cast<double>(j) * Padp::azimuth_step_deg);
    out << '\n';
}

inline void write_padp_rows(std::ostream& out, const std::string& link_id, double band_hz, const Padp& p) {
    for (std::size_t i = 0; i < p.delay_bins(); ++i) {
        out << link_id << ',' << band_ghz(band_hz) << ',' << num(p.delay_of(i));
        for (std::size_t j = 0; j < Padp::azimuth_bins; ++j) {
            out << ',';
            if (p.occupied(i, j)) out << num(p.power_db(i, j));
        }
        out << '\n';
    }
}

inline void write_discrete_jsonl(std::ostream& out, const std::string& link_id, double band_hz, const Padp& p) {
    for (const auto& d : p.discrete_paths())
        out << json{{"link_id", link_id},
                    {"band_ghz", jnum(band_hz / 1e9)},
                    {"delay_ns", jnum(d.delay_ns)},
                    {"azimuth_deg", jnum(d.azimuth_deg)},
                    {"gain_db", jnum(d.gain_db)}}
                   .dump()
            << '\n';
}

struct PadpRecord {
    std::string link_id;
    double band_ghz = 0.0;
    Padp padp;
};

/// Reads the dense grid written by write_padp_rows; one record per (link, band).
inline std::vector<PadpRecord> read_padp_csv(std::istream& in) {
    std::vector<std::string> header{"link_id", "band_ghz", "delay_ns"};
    for (std::size_t j = 0; j < Padp::azimuth_bins; ++j)
        header.push_back("az_" + num(static_cast<double>(j) * Padp::azimuth_step_deg));
    std::vector<PadpRecord> out;
    std::vector<std::vector<std::pair<double, std::vector<std::string>>>> rows;
    detail::read_csv(in, header, [&](const std::vector<std::string>& f, std::size_t line) {
        const double band = detail::field_number(f[1], line, "band");
        if (out.empty() || out.back().link_id != f[0] || out.back().band_ghz != band) {
            out.push_back({f[0], band, Padp()});
            rows.emplace_back();
        }
        rows.back().emplace_back(detail::field_number(f[2], line, "delay"),
                                 std::vector<std::string>(f.begin() + 3, f.end()));
    });
    for (std::size_t r = 0; r < out.size(); ++r) {
        double limit = 0.0;
        for (const auto& [d, cells] : rows[r]) limit = std::fmax(limit, d);
        Padp grid(limit > 0.0 ? limit : Padp::delay_step_ns);
        for (const auto& [d, cells] : rows[r])
            for (std::size_t j = 0; j < cells.size(); ++j)
                if (!cells[j].empty())
                    grid.add(d, static_cast<double>(j) * Padp::azimuth_step_deg, detail::field_number(cells[j], 0, "power"));
        out[r].padp = std::move(grid);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Direct-path observations
// ---------------------------------------------------------------------------

struct ObservationRow {
    std::string link_id;
    double band_ghz = 0.0;
    double tau_ns = 0.0;
    double phi_deg = 0.0;
    double gain_db = 0.0;
};

inline void write_observations_csv(std::ostream& out, const std::vector<ObservationRow>& rows) {
    out << "link_id,band_ghz,tau_ns,phi_deg,gain_db\n";
    for (const auto& r : rows)
        out << r.link_id << ',' << num(r.band_ghz, 10) << ',' << num(r.tau_ns, 17) << ',' << num(r.phi_deg, 17) << ','
            << num(r.gain_db, 17) << '\n';
}

inline std::vector<ObservationRow> read_observations_csv(std::istream& in) {
    std::vector<ObservationRow> out;
    detail::read_csv(in, {"link_id", "band_ghz", "tau_ns", "phi_deg", "gain_db"},
                     [&](const std::vector<std::string>& f, std::size_t line) {
                         ObservationRow r;
                         r.link_id = f[0];
                         r.band_ghz = detail::field_number(f[1], line, "band");
                         r.tau_ns = detail::field_number(f[2], line, "delay");
                         r.phi_deg = detail::field_number(f[3], line, "azimuth");
                         r.gain_db = detail::field_number(f[4], line, "gain");
                         if (!std::isfinite(r.tau_ns) || !(r.tau_ns > 0.0))
                             throw ParseError("delay must be positive", line);
                         if (!std::isfinite(r.gain_db)) throw ParseError("gain must be finite", line);
                         out.push_back(r);
                     });
    return out;
}

// ---------------------------------------------------------------------------
// Calibration result
// ---------------------------------------------------------------------------

inline json calibration_json(const CalibrationResult& r) {
    json bands = json::array();
    for (const auto& b : r.bands)
        bands.push_back({{"band_ghz", jnum(b.band_hz / 1e9)},
                         {"canopy_loss_db_per_m", jnum(b.canopy_db_per_m)},
                         {"mean_abs_error_db", jnum(b.mean_abs_error_db)},
                         {"mean_error_db", jnum(b.mean_error_db)},
                         {"observations", b.observations}});
    json res = json::array();
    for (const auto& x : r.residuals)
        res.push_back({{"link_id", x.link_id},
                       {"band_ghz", jnum(x.band_hz / 1e9)},
                       {"observed_excess_db", jnum(x.observed_db)},
                       {"simulated_excess_db", jnum(x.simulated_db)},
                       {"residual_db", jnum(x.residual_db)}});
    return {{"triple_film_nm", jnum(r.triple_film_nm)},
            {"double_film_nm", jnum(r.double_film_nm)},
            {"objective_db", jnum(r.objective_db)},
            {"bands", bands},
            {"grids",
             {{"film_nm", {{"start", r.grids.film_nm.start}, {"step", r.grids.film_nm.step}, {"count", r.grids.film_nm.count}}},
              {"canopy_db_per_m",
               {{"start", r.grids.canopy_db_per_m.start},
                {"step", r.grids.canopy_db_per_m.step},
                {"count", r.grids.canopy_db_per_m.count}}}}},
            {"residuals", res}};
}

}  // namespace o2i::io
