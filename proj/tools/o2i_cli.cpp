// o2i: batch front end for tracing, loss curves, calibration, LSP analysis and
// antenna-position sensitivity. Exit codes: 0 ok, 1 usage, 2 config, 3 parse,
// 4 domain/validation, 5 other runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "o2i/o2i.hpp"

namespace fs = std::filesystem;
using o2i::json;

namespace {

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_parse = 3, exit_domain = 4, exit_other = 5 };

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw o2i::Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Common {
    std::string config_path;
    std::string scene_path;
    std::string out_dir = "o2i_out";
    std::vector<double> bands_ghz;
    std::string variant;
    int max_bounces = -1;
    long long seed = -1;
    long long workers = -1;
};

/// Collects outputs, writes them and the manifest. Nothing is written before
/// the command has finished computing.
class Outputs {
public:
    Outputs(std::string command, const Common& c) : command_(std::move(command)), common_(c) {}

    void input(const std::string& path) { inputs_.push_back(path); }
    std::ostringstream& file(const std::string& name) { return files_[name]; }

    void commit(const o2i::RunConfig& cfg) {
        fs::create_directories(common_.out_dir);
        json outs = json::array();
        for (const auto& [name, body] : files_) {
            const std::string text = body.str();
            std::ofstream out(fs::path(common_.out_dir) / name, std::ios::binary);
            if (!out) throw o2i::Error("cannot write '" + name + "' in " + common_.out_dir);
            out << text;
            outs.push_back({{"file", name}, {"bytes", text.size()}, {"fnv1a64", hex64(fnv1a(text))}});
        }
        json ins = json::array();
        for (const auto& p : inputs_) {
            const std::string text = read_file(p);
            ins.push_back({{"path", p}, {"bytes", text.size()}, {"fnv1a64", hex64(fnv1a(text))}});
        }
        json bands = json::array();
        for (double f : cfg.bands_hz) bands.push_back(f);
        const json manifest{{"command", command_},
                            {"inputs", ins},
                            {"outputs", outs},
                            {"scene", cfg.scene_path.empty() ? "synthetic:shoebox" : cfg.scene_path},
                            {"bands_hz", bands},
                            {"variant", std::string(o2i::to_string(cfg.variant))},
                            {"max_bounces", cfg.max_bounces},
                            {"seed", cfg.seed}};
        std::ofstream m(fs::path(common_.out_dir) / "manifest.json", std::ios::binary);
        m << manifest.dump(2) << '\n';
    }

private:
    std::string command_;
    const Common& common_;
    std::vector<std::string> inputs_;
    std::map<std::string, std::ostringstream> files_;
};

o2i::RunConfig resolve_config(const Common& c, Outputs& outs) {
    o2i::RunConfig cfg;
    if (!c.config_path.empty()) {
        cfg = o2i::load_config(c.config_path);
        outs.input(c.config_path);
    }
    if (!c.scene_path.empty()) cfg.scene_path = c.scene_path == "shoebox" ? "" : c.scene_path;
    if (!cfg.scene_path.empty()) outs.input(cfg.scene_path);
    if (!c.bands_ghz.empty()) {
        std::vector<double> picked;
        for (double g : c.bands_ghz) {
            const auto f = cfg.band_from_ghz(g);
            if (!f) throw o2i::ConfigError("band " + std::to_string(g) + " GHz is not configured");
            picked.push_back(*f);
        }
        cfg.bands_hz = picked;
    }
    if (!c.variant.empty()) {
        const auto v = o2i::parse_model_variant(c.variant);
        if (!v) throw o2i::ConfigError("unknown variant '" + c.variant + "'");
        cfg.variant = *v;
    }
    if (c.max_bounces >= 0) cfg.max_bounces = c.max_bounces;
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    if (c.workers >= 0) cfg.workers = static_cast<unsigned>(c.workers);
    cfg.validate();
    return cfg;
}

struct LinkBandResult {
    o2i::LinkResult result;
    o2i::Padp padp;
};

// All links x bands, parallel over links, ordered by band then link.
std::vector<LinkBandResult> simulate_all(const o2i::RunConfig& cfg, const o2i::PointCloud& cloud) {
    const o2i::Tracer tracer(cloud);
    const auto links = cfg.links.links();
    std::vector<LinkBandResult> out(links.size() * cfg.bands_hz.size());
    auto sim = cfg.simulation();
    sim.workers = 1;
    o2i::parallel_for(out.size(), cfg.workers, [&](std::size_t k) {
        const double band = cfg.bands_hz[k / links.size()];
        const auto& link = links[k % links.size()];
        auto r = o2i::simulate_link(tracer, link, band, cfg.gain_model(band), sim);
        const auto d = o2i::as_discrete(r.paths);
        out[k] = {std::move(r), o2i::synthesize_padp(d, cfg.delay_limit_ns)};
    });
    return out;
}

int cmd_trace(const Common& c) {
    Outputs outs("trace", c);
    const auto cfg = resolve_config(c, outs);
    const auto cloud = o2i::apply_variant(o2i::load_scene(cfg), cfg.variant);
    const auto results = simulate_all(cfg, cloud);
    std::vector<o2i::io::PathRecordSet> sets;
    auto& padp_csv = outs.file("padp.csv");
    auto& padp_jsonl = outs.file("padp_paths.jsonl");
    o2i::io::write_padp_header(padp_csv);
    for (const auto& r : results) {
        sets.push_back({r.result.link.id, r.result.band_hz, r.result.paths});
        o2i::io::write_padp_rows(padp_csv, r.result.link.id, r.result.band_hz, r.padp);
        o2i::io::write_discrete_jsonl(padp_jsonl, r.result.link.id, r.result.band_hz, r.padp);
    }
    o2i::io::write_paths_csv(outs.file("paths.csv"), sets);
    o2i::io::write_paths_jsonl(outs.file("paths.jsonl"), sets);
    outs.commit(cfg);
    std::size_t n = 0;
    for (const auto& s : sets) n += s.paths.size();
    std::cout << "traced " << sets.size() << " link-bands, " << n << " paths -> " << c.out_dir << '\n';
    return exit_ok;
}

std::string band_column(double hz) { return std::to_string(static_cast<long long>(std::floor(hz / 1e9))) + "g"; }

int cmd_curves(const Common& c, const std::string& stack_name, double from_deg, double to_deg, double step_deg,
               double film_nm) {
    Outputs outs("curves", c);
    const auto cfg = resolve_config(c, outs);
    if (!(step_deg > 0.0) || !(to_deg >= from_deg) || !(from_deg >= 0.0) || !(to_deg < 90.0))
        throw o2i::ConfigError("angle sweep must satisfy 0 <= from <= to < 90 with a positive step");
    o2i::LayerStack stack;
    if (stack_name == "empty") {
        stack.role = o2i::StackRole::exterior_solid;
    } else {
        const auto role = o2i::parse_stack_role(stack_name);
        if (!role) throw o2i::ConfigError("unknown stack '" + stack_name + "'");
        stack = cfg.stacks.get(*role);
    }
    auto model = cfg.gain_model(cfg.bands_hz.front());
    double film_m = film_nm >= 0.0 ? o2i::nm_to_m(film_nm) : model.films.for_role(stack.role);
    auto& out = outs.file("curves.csv");
    out << "angle_deg";
    for (double f : cfg.bands_hz) out << ",loss_db_" << band_column(f);
    for (double f : cfg.bands_hz) out << ",loss_te_db_" << band_column(f) << ",loss_tm_db_" << band_column(f);
    out << '\n';
    const auto n = static_cast<long long>(std::floor((to_deg - from_deg) / step_deg + 1e-9));
    for (long long k = 0; k <= n; ++k) {
        const double deg = from_deg + step_deg * static_cast<double>(k);
        const double a = o2i::deg_to_rad(deg);
        out << o2i::io::num(deg);
        std::vector<o2i::SlabCoefficients> coeffs;
        for (double f : cfg.bands_hz) {
            const auto layers = o2i::resolve_stack(stack, cfg.materials, f, film_m);
            coeffs.push_back(o2i::slab_coefficients(layers, a, f));
            out << ',' << o2i::io::num(-10.0 * std::log10(coeffs.back().transmittance(cfg.polarization)));
        }
        for (const auto& s : coeffs)
            out << ',' << o2i::io::num(-10.0 * std::log10(s.transmittance(o2i::PolarizationPolicy::te))) << ','
                << o2i::io::num(-10.0 * std::log10(s.transmittance(o2i::PolarizationPolicy::tm)));
        out << '\n';
    }
    outs.commit(cfg);
    std::cout << "wrote " << n + 1 << " angles for stack " << stack_name << " -> " << c.out_dir << '\n';
    return exit_ok;
}

std::vector<o2i::LspRecord> lsp_records(const o2i::RunConfig& cfg, const std::vector<LinkBandResult>& results) {
    std::vector<o2i::LspRecord> recs;
    for (const auto& r : results) {
        if (!r.result.lsp) throw o2i::DomainError("no path reaches the receiver of link " + r.result.link.id);
        recs.push_back({r.result.link.id, r.result.band_hz, r.result.incidence_deg, *r.result.lsp, cfg.variant});
    }
    return recs;
}

int cmd_lsp(const Common& c, const std::string& reference, bool ablation) {
    Outputs outs("lsp", c);
    auto cfg = resolve_config(c, outs);
    const auto scene = o2i::load_scene(cfg);
    auto recs = lsp_records(cfg, simulate_all(cfg, o2i::apply_variant(scene, cfg.variant)));
    json summary{{"variant", std::string(o2i::to_string(cfg.variant))}, {"bands", o2i::io::lsp_summary_json(recs)}};
    if (ablation) {
        auto ext_cfg = cfg;
        ext_cfg.variant = o2i::ModelVariant::exteriors_only;
        const auto ext = lsp_records(ext_cfg, simulate_all(ext_cfg, o2i::apply_variant(scene, ext_cfg.variant)));
        auto& ab = outs.file("ablation.csv");
        ab << "link_id,band_ghz,pl_full_db,pl_ext_db,ds_full_ns,ds_ext_ns,as_full_deg,as_ext_deg,trend_holds\n";
        std::size_t holds = 0;
        for (std::size_t k = 0; k < recs.size(); ++k) {
            const auto& f = recs[k].lsp;
            const auto& e = ext[k].lsp;
            const bool ok = f.azimuth_spread_deg > e.azimuth_spread_deg && f.delay_spread_ns > e.delay_spread_ns &&
                            e.path_loss_db >= f.path_loss_db;
            holds += ok;
            using o2i::io::num;
            ab << recs[k].link_id << ',' << o2i::io::band_ghz(recs[k].band_hz) << ',' << num(f.path_loss_db) << ','
               << num(e.path_loss_db) << ',' << num(f.delay_spread_ns) << ',' << num(e.delay_spread_ns) << ','
               << num(f.azimuth_spread_deg) << ',' << num(e.azimuth_spread_deg) << ',' << (ok ? 1 : 0) << '\n';
        }
        summary["ablation"] = {{"links", recs.size()}, {"trend_holds", holds}};
        recs.insert(recs.end(), ext.begin(), ext.end());
    }
    o2i::io::write_lsp_csv(outs.file("lsp.csv"), recs);
    if (!reference.empty()) {
        std::ifstream in(reference);
        if (!in) throw o2i::ParseError("cannot open reference file '" + reference + "'");
        outs.input(reference);
        auto ref = o2i::io::read_lsp_csv(in);
        std::vector<o2i::LspRecord> sim_main(recs.begin(), recs.begin() + static_cast<long>(recs.size() / (ablation ? 2 : 1)));
        std::vector<o2i::LspRecord> ref_main;
        for (const auto& r : ref)
            if (r.variant == cfg.variant) ref_main.push_back(r);
        // a reference labelled with another variant (e.g. measurements) is used as is
        if (ref_main.empty()) ref_main = ref;
        summary["comparison"] = o2i::io::comparison_json(o2i::compare_lsps(sim_main, ref_main));
    }
    outs.file("lsp_summary.json") << summary.dump(2) << '\n';
    outs.commit(cfg);
    std::cout << "wrote LSPs for " << recs.size() << " link-bands -> " << c.out_dir << '\n';
    return exit_ok;
}

// Direct-path observations from the forward model, optionally with uniform noise.
int cmd_synth_observations(const Common& c, double noise_db) {
    Outputs outs("synth-observations", c);
    const auto cfg = resolve_config(c, outs);
    if (!(noise_db >= 0.0)) throw o2i::ConfigError("noise must be >= 0 dB");
    const auto cloud = o2i::apply_variant(o2i::load_scene(cfg), cfg.variant);
    const o2i::Tracer tracer(cloud);
    const auto links = cfg.links.links();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> noise(-noise_db, noise_db);
    std::vector<o2i::io::ObservationRow> rows;
    for (double band : cfg.bands_hz) {
        const auto model = cfg.gain_model(band);
        o2i::TraceOptions t;
        t.wavelength_m = o2i::wavelength(band);
        for (const auto& l : links) {
            const auto direct = tracer.trace_direct(l.tx, l.rx, t);
            if (direct.obstructed()) continue;
            const double excess = o2i::simulated_excess_loss(direct, model, band) + (noise_db > 0.0 ? noise(rng) : 0.0);
            const double fspl = o2i::free_space_loss_db(direct.geometric_length_m, band);
            rows.push_back({l.id, band / 1e9, direct.delay_ns(), direct.aoa_azimuth_deg(), -(excess + fspl)});
        }
    }
    o2i::io::write_observations_csv(outs.file("observations.csv"), rows);
    outs.commit(cfg);
    std::cout << "wrote " << rows.size() << " observations -> " << c.out_dir << '\n';
    return exit_ok;
}

int cmd_calibrate(const Common& c, const std::string& observations, const std::string& padp_path,
                  const std::vector<double>& film_grid, const std::vector<double>& canopy_grid) {
    Outputs outs("calibrate", c);
    auto cfg = resolve_config(c, outs);
    auto apply_grid = [](o2i::Grid& g, const std::vector<double>& v, const char* what) {
        if (v.empty()) return;
        if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2]))
            throw o2i::ConfigError(std::string(what) + " grid needs start step count");
        g = {v[0], v[1], static_cast<std::size_t>(v[2])};
        g.validate(what);
    };
    apply_grid(cfg.grids.film_nm, film_grid, "film");
    apply_grid(cfg.grids.canopy_db_per_m, canopy_grid, "canopy");

    std::ifstream in(observations);
    if (!in) throw o2i::ParseError("cannot open observations file '" + observations + "'");
    outs.input(observations);
    const auto rows = o2i::io::read_observations_csv(in);
    if (rows.empty()) throw o2i::ValidationError("observations file has no rows");

    std::map<std::pair<std::string, double>, o2i::Padp> padps;
    if (!padp_path.empty()) {
        std::ifstream pin(padp_path);
        if (!pin) throw o2i::ParseError("cannot open PADP file '" + padp_path + "'");
        outs.input(padp_path);
        for (auto& r : o2i::io::read_padp_csv(pin)) padps.emplace(std::pair{r.link_id, r.band_ghz}, std::move(r.padp));
    }

    const auto cloud = o2i::apply_variant(o2i::load_scene(cfg), cfg.variant);
    const o2i::Tracer tracer(cloud);
    std::map<std::string, o2i::Link> by_id;
    for (const auto& l : cfg.links.links()) by_id.emplace(l.id, l);

    std::vector<o2i::CalibrationSample> samples;
    for (const auto& r : rows) {
        const auto band = cfg.band_from_ghz(r.band_ghz);
        if (!band) throw o2i::ConfigError("observation band " + o2i::io::num(r.band_ghz) + " GHz is not configured");
        const auto it = by_id.find(r.link_id);
        if (it == by_id.end()) throw o2i::ConfigError("observation for unknown link '" + r.link_id + "'");
        o2i::DirectPathObservation obs;
        if (!padp_path.empty()) {
            const auto p = padps.find({r.link_id, r.band_ghz});
            if (p == padps.end())
                throw o2i::ValidationError("no PADP for link " + r.link_id + " at " + o2i::io::num(r.band_ghz) + " GHz");
            obs = o2i::refine_direct_path(p->second, r.link_id, *band, r.tau_ns, r.phi_deg, cfg.refine);
        } else {
            obs = {r.link_id, *band, r.tau_ns, r.phi_deg, r.tau_ns, r.phi_deg, r.gain_db,
                   o2i::excess_loss_from_gain(r.gain_db, r.tau_ns, *band)};
        }
        o2i::TraceOptions t;
        t.wavelength_m = o2i::wavelength(*band);
        const auto direct = tracer.trace_direct(it->second.tx, it->second.rx, t);
        samples.push_back({obs, o2i::excess_terms(direct, cfg.gain_model(*band), *band)});
    }
    const auto result = o2i::calibrate(samples, cfg.gain_model(cfg.bands_hz.front()), cfg.grids, cfg.workers);
    outs.file("calibration.json") << o2i::io::calibration_json(result).dump(2) << '\n';
    outs.commit(cfg);
    std::cout << "triple film " << result.triple_film_nm << " nm, double film " << result.double_film_nm
              << " nm, objective " << o2i::io::num(result.objective_db, 6) << " dB -> " << c.out_dir << '\n';
    return exit_ok;
}

o2i::Link default_jitter_link() { return {"Jitter", {13.7, -4.9, 1.5}, {1.5, 2.0, 1.5}}; }

int cmd_jitter(const Common& c) {
    Outputs outs("jitter", c);
    const auto cfg = resolve_config(c, outs);
    const auto cloud = o2i::apply_variant(o2i::load_scene(cfg), cfg.variant);
    const o2i::Tracer tracer(cloud);
    const auto link = cfg.jitter_link.value_or(default_jitter_link());
    json bands = json::array();
    for (double band : cfg.bands_hz) {
        const auto rep = o2i::jitter_sensitivity(tracer, link, band, cfg.gain_model(band), cfg.simulation(), cfg.jitter);
        json windows = json::array();
        for (const auto& w : rep.windows)
            windows.push_back({{"reflection_sequence", w.reflection_sequence},
                               {"crossing", w.crossing},
                               {"object_id", w.object_id},
                               {"object_class", std::string(o2i::to_string(w.object_class))},
                               {"angle_deg_min", w.min_angle_deg},
                               {"angle_deg_max", w.max_angle_deg},
                               {"loss_db_min", w.min_loss_db},
                               {"loss_db_max", w.max_loss_db},
                               {"small_angle_loss_delta_db", w.small_angle_loss_delta_db},
                               {"small_angle_angle_delta_deg", w.small_angle_angle_delta_deg},
                               {"samples", w.samples}});
        bands.push_back({{"band_ghz", band / 1e9},
                         {"positions", rep.positions},
                         {"max_loss_delta_db", rep.max_loss_delta_db},
                         {"small_angle_loss_delta_db", rep.small_angle_loss_delta_db},
                         {"azimuth_spread_deg_min", rep.min_azimuth_spread_deg},
                         {"azimuth_spread_deg_max", rep.max_azimuth_spread_deg},
                         {"windows", windows}});
    }
    const json doc{{"link", {{"tx_m", {link.tx.x, link.tx.y, link.tx.z}}, {"rx_m", {link.rx.x, link.rx.y, link.rx.z}}}},
                   {"box_m", cfg.jitter.box_m},
                   {"steps", cfg.jitter.steps},
                   {"small_angle_change_deg", cfg.jitter.small_angle_change_deg},
                   {"bands", bands}};
    outs.file("jitter.json") << doc.dump(2) << '\n';
    outs.commit(cfg);
    std::cout << "wrote sensitivity for " << cfg.bands_hz.size() << " band(s) -> " << c.out_dir << '\n';
    return exit_ok;
}

int cmd_synth_scene(const Common& c) {
    Outputs outs("synth-scene", c);
    const auto cfg = resolve_config(c, outs);
    const auto cloud = o2i::make_shoebox();
    o2i::write_points(outs.file("shoebox.xyz"), cloud.points());
    outs.commit(cfg);
    std::cout << "wrote " << cloud.size() << " points -> " << c.out_dir << '\n';
    return exit_ok;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "JSON run config")->envname("O2I_CONFIG");
    sub->add_option("--scene", c.scene_path, "point file (or 'shoebox'); overrides the config")->envname("O2I_SCENE");
    sub->add_option("--band", c.bands_ghz, "restrict to these configured bands, GHz");
    sub->add_option("--variant", c.variant, "full_floor_plan | exteriors_only | no_metal_film")->envname("O2I_VARIANT");
    sub->add_option("--max-bounces", c.max_bounces, "0..4")->envname("O2I_MAX_BOUNCES");
    sub->add_option("--out-dir", c.out_dir, "output directory")->envname("O2I_OUT_DIR");
    sub->add_option("--seed", c.seed, "seed for randomized generation")->envname("O2I_SEED");
    sub->add_option("--workers", c.workers, "worker threads, 0 = all cores")->envname("O2I_WORKERS");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-cloud outdoor-to-indoor ray optics"};
    app.require_subcommand(1);
    Common common;

    auto* trace = app.add_subcommand("trace", "trace all links and bands; write paths and PADPs");
    add_common(trace, common);

    std::string stack = "window_triple";
    double from_deg = 0.0, to_deg = 70.0, step_deg = 0.25, film_nm = -1.0;
    auto* curves = app.add_subcommand("curves", "penetration loss versus incidence angle");
    add_common(curves, common);
    curves->add_option("--stack", stack, "window_triple | window_double | interior_wall | exterior_solid | empty");
    curves->add_option("--from-deg", from_deg);
    curves->add_option("--to-deg", to_deg);
    curves->add_option("--step-deg", step_deg);
    curves->add_option("--film-nm", film_nm, "film thickness override");

    std::string observations, padp_path;
    std::vector<double> film_grid, canopy_grid;
    auto* calib = app.add_subcommand("calibrate", "fit film thicknesses and canopy losses to direct-path observations");
    add_common(calib, common);
    calib->add_option("--observations", observations, "CSV link_id,band_ghz,tau_ns,phi_deg,gain_db")->required();
    calib->add_option("--padp", padp_path, "dense PADP CSV; refines the observations' coarse delay/azimuth");
    calib->add_option("--film-grid", film_grid, "start_nm step_nm count")->expected(3);
    calib->add_option("--canopy-grid", canopy_grid, "start step count (dB/m)")->expected(3);

    std::string reference;
    bool ablation = false;
    auto* lsp = app.add_subcommand("lsp", "large-scale parameters per link and band");
    add_common(lsp, common);
    lsp->add_option("--reference", reference, "reference LSP CSV to compare against");
    lsp->add_flag("--ablation", ablation, "also run exteriors_only and report the trend per link");

    double noise_db = 0.0;
    auto* synth_obs = app.add_subcommand("synth-observations", "forward-model direct-path observations");
    add_common(synth_obs, common);
    synth_obs->add_option("--noise-db", noise_db, "uniform noise half-width, dB");

    auto* jitter = app.add_subcommand("jitter", "Tx/Rx position sensitivity of window losses");
    add_common(jitter, common);

    auto* synth_scene = app.add_subcommand("synth-scene", "write the synthetic shoebox point cloud");
    add_common(synth_scene, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*trace) return cmd_trace(common);
        if (*curves) return cmd_curves(common, stack, from_deg, to_deg, step_deg, film_nm);
        if (*calib) return cmd_calibrate(common, observations, padp_path, film_grid, canopy_grid);
        if (*lsp) return cmd_lsp(common, reference, ablation);
        if (*synth_obs) return cmd_synth_observations(common, noise_db);
        if (*jitter) return cmd_jitter(common);
        if (*synth_scene) return cmd_synth_scene(common);
    } catch (const o2i::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const o2i::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return exit_parse;
    } catch (const o2i::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return exit_domain;
    } catch (const o2i::DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return exit_domain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
    return exit_usage;
}
