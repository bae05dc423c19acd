// Acceptance run: one PASS/FAIL line per criterion, with runtime.
// Usage: acceptance <path-to-o2i-cli> [work-dir]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"

using namespace o2i;
namespace fs = std::filesystem;

namespace {

constexpr double f4 = 4.65e9;
constexpr double f14 = 14.25e9;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && secs >= budget_s) {
        o.pass = false;
        o.detail += " [over time budget " + io::num(budget_s, 4) + " s]";
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(double v, int digits = 6) { return io::num(v, digits); }

// 1 ---------------------------------------------------------------------------
Outcome energy_conservation() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<SlabLayer> layers(1 + static_cast<std::size_t>(u(rng) * 6));
        for (auto& l : layers) l = {{1.0 + 11.0 * u(rng), 0.0}, 1e-5 + 0.1 * u(rng)};
        const double angle = u(rng) * deg_to_rad(89.5);
        const double f = 0.5e9 + u(rng) * 40e9;
        const auto s = slab_coefficients(layers, angle, f);
        worst = std::max({worst, std::fabs(std::norm(s.reflection_te) + std::norm(s.transmission_te) - 1.0),
                          std::fabs(std::norm(s.reflection_tm) + std::norm(s.transmission_tm) - 1.0)});
    }
    return {worst <= 1e-9, "max | |R|^2+|T|^2-1 | = " + fmt(worst, 3) + " over 1000 stacks x 2 polarizations"};
}

// 2 ---------------------------------------------------------------------------
Outcome fresnel_oracle() {
    // closed-form air/medium interface
    auto r_te = [](Complex eps, double a) {
        const Complex root = std::sqrt(eps - std::sin(a) * std::sin(a));
        return (std::cos(a) - root) / (std::cos(a) + root);
    };
    auto r_tm = [](Complex eps, double a) {
        const Complex root = std::sqrt(eps - std::sin(a) * std::sin(a));
        return (eps * std::cos(a) - root) / (eps * std::cos(a) + root);
    };
    // slight loss over 200 m suppresses the back-face echo below 1e-30
    const Complex eps{6.27, 0.01};
    double worst = 0.0;
    for (double deg : {0.0, 15.0, 30.0, 45.0, 60.0, 75.0}) {
        const double a = deg_to_rad(deg);
        const auto s = slab_coefficients(std::vector<SlabLayer>{{eps, 200.0}}, a, f4);
        worst = std::max({worst, std::abs(s.reflection_te - r_te(eps, a)), std::abs(s.reflection_tm - r_tm(eps, a))});
    }
    const double n = std::sqrt(6.27);
    const double lossless = (1.0 - n) / (1.0 + n);
    const double recursion_normal = slab_coefficients(std::vector<SlabLayer>{{eps, 200.0}}, 0.0, f4).reflection_te.real();
    const bool ok = worst <= 1e-6 && std::fabs(lossless + 0.429) < 5e-4 && std::fabs(recursion_normal - lossless) < 5e-4;
    return {ok, "max |r_slab - r_fresnel| = " + fmt(worst, 3) + ", normal-incidence r = " + fmt(recursion_normal, 5) +
                    " (lossless closed form " + fmt(lossless, 5) + ")"};
}

// 3 ---------------------------------------------------------------------------
// Largest max-min of the loss curve inside any window of `width` degrees.
double max_window_swing(const std::vector<double>& deg, const std::vector<double>& loss, double lo, double hi,
                        double width, double* at = nullptr) {
    double best = 0.0;
    for (std::size_t i = 0; i < deg.size(); ++i) {
        if (deg[i] < lo - 1e-9 || deg[i] + width > hi + 1e-9) continue;
        double mn = loss[i], mx = loss[i];
        for (std::size_t j = i; j < deg.size() && deg[j] <= deg[i] + width + 1e-9; ++j) {
            mn = std::min(mn, loss[j]);
            mx = std::max(mx, loss[j]);
        }
        if (mx - mn > best) {
            best = mx - mn;
            if (at) *at = deg[i];
        }
    }
    return best;
}

Outcome loss_curve_character() {
    const auto table = MaterialTable::defaults();
    const auto stack = StackSet::defaults().window_triple;
    std::vector<double> deg, l4, l14;
    for (int k = 0; k <= 7000; ++k) {
        const double d = 0.01 * k;
        deg.push_back(d);
        l4.push_back(penetration_loss_db(stack, table, deg_to_rad(d), f4, 5e-9));
        l14.push_back(penetration_loss_db(stack, table, deg_to_rad(d), f14, 5e-9));
    }
    double at14 = 0.0, at4 = 0.0;
    const double s14 = max_window_swing(deg, l14, 30.0, 70.0, 2.0, &at14);
    const double s4 = max_window_swing(deg, l4, 0.0, 70.0, 2.0, &at4);
    return {s14 >= 15.0 && s4 <= 5.0, "14.25 GHz max 2-deg swing " + fmt(s14, 4) + " dB at " + fmt(at14, 4) +
                                           " deg (>= 15); 4.65 GHz max 2-deg swing " + fmt(s4, 4) + " dB (<= 5)"};
}

// 4 ---------------------------------------------------------------------------
Outcome tracer_oracle() {
    std::mt19937_64 rng(4242);
    std::size_t mismatches = 0, cases = 0, groups = 0, max_points = 0;
    for (int s = 0; s < 100; ++s) {
        const auto scene = oracle::random_scene(rng, 20000);
        max_points = std::max(max_points, scene.cloud.size());
        const Tracer tracer(scene.cloud);
        for (const auto& [tx, rx] : scene.links)
            for (double f : {f4, f14})
                for (std::size_t order = 1; order <= 2; ++order) {
                    TraceOptions opt;
                    opt.wavelength_m = wavelength(f);
                    const auto got = tracer.search_order(tx, rx, order, opt);
                    const auto want = oracle::brute_force_specular(scene.cloud, tx, rx, order, opt.wavelength_m);
                    mismatches += oracle::count_mismatches(got, want);
                    groups += want.size();
                    ++cases;
                }
    }
    return {mismatches == 0 && groups > 0, std::to_string(mismatches) + " mismatches over 100 scenes, " +
                                               std::to_string(cases) + " searches, " + std::to_string(groups) +
                                               " grouped paths, largest cloud " + std::to_string(max_points) + " pts"};
}

// 5 ---------------------------------------------------------------------------
Outcome plane_mirror() {
    SceneSpec s;
    s.walls.push_back({1, ObjectClass::interior_wall, {-1, -1, 0}, {4, 0, 0}, {0, 2, 0}});
    const auto cloud = make_synthetic_scene(s);
    TraceOptions opt;
    opt.max_bounces = 1;
    const auto paths = find_specular_paths({0, 0, 1}, {2, 0, 1}, cloud, opt);
    if (paths.size() != 1) return {false, std::to_string(paths.size()) + " paths"};
    const Vec3 v = paths[0].vertices[1];
    const double dp = distance(v, {1, 0, 0});
    const double dl = std::fabs(paths[0].geometric_length_m - 2.0 * std::sqrt(2.0));
    return {dp <= 1e-9 && dl <= 1e-9, "|p - (1,0,0)| = " + fmt(dp, 3) + ", |L - 2*sqrt2| = " + fmt(dl, 3)};
}

// 6 ---------------------------------------------------------------------------
Outcome shadowing_fixtures() {
    const double lambda = wavelength(f4);
    const PointCloud mid({{{2.5, 0, 0}, {1, 0, 0}, 9, ObjectClass::tree_canopy}}, 0.1);
    const auto a = detect_shadowing({0, 0, 0}, {5, 0, 0}, mid, lambda);
    std::vector<ScenePoint> pts;
    for (double x : {2.0, 2.1, 2.4}) pts.push_back({{x, 0.01, 0}, {1, 0, 0}, 5, ObjectClass::tree_canopy});
    const PointCloud blob(pts, 0.1);
    const auto b = detect_shadowing({0, 0, 0}, {5, 0, 0}, blob, lambda);
    const bool ok = a.size() == 1 && a[0].ray_distance_m == 0.0 && a[0].fresnel_scale_q == 1.0 && b.size() == 1 &&
                    b[0].penetration_length_m == 2.4 - 2.0 && std::fabs(b[0].penetration_length_m - 0.4) <= 1e-12;
    return {ok, "d_w=0 -> q=" + (a.empty() ? std::string("none") : fmt(a[0].fresnel_scale_q)) +
                    "; along-ray {2.0,2.1,2.4} -> d=" + (b.empty() ? std::string("none") : fmt(b[0].penetration_length_m, 15))};
}

// 7 ---------------------------------------------------------------------------
Outcome calibration_round_trip() {
    const auto cloud = make_shoebox();
    const Tracer tracer(cloud);
    const auto links = oracle::dense_calibration_links();
    const PathGainModel model{MaterialTable::defaults(), StackSet::defaults(), {0.0, 0.0}, 0.0, PolarizationPolicy::te};
    const CalibrationGrids grids;
    const oracle::ForwardTruth truth{grids.film_nm.value(5), grids.film_nm.value(40),
                                     {{f4, grids.canopy_db_per_m.value(11)}, {f14, grids.canopy_db_per_m.value(21)}}};

    const auto clean = oracle::forward_samples(tracer, links, model, truth, 0.0, 1);
    const auto r0 = calibrate(clean, model, grids, 0);
    double max_res = 0.0;
    for (const auto& r : r0.residuals) max_res = std::max(max_res, std::fabs(r.residual_db));
    const bool exact = r0.triple_film_nm == truth.triple_film_nm && r0.double_film_nm == truth.double_film_nm &&
                       r0.bands.size() == 2 && r0.bands[0].canopy_db_per_m == truth.canopy_by_band.at(f4) &&
                       r0.bands[1].canopy_db_per_m == truth.canopy_by_band.at(f14) && max_res == 0.0;

    const auto noisy = oracle::forward_samples(tracer, links, model, truth, 1.0, 7);
    const auto r1 = calibrate(noisy, model, grids, 0);
    const double film_step = grids.film_nm.step, canopy_step = grids.canopy_db_per_m.step;
    bool within = r1.bands.size() == 2 && std::fabs(r1.triple_film_nm - truth.triple_film_nm) <= film_step + 1e-12 &&
                  std::fabs(r1.double_film_nm - truth.double_film_nm) <= film_step + 1e-12;
    double worst_mae = 0.0;
    for (const auto& b : r1.bands) {
        within = within && std::fabs(b.canopy_db_per_m - truth.canopy_by_band.at(b.band_hz)) <= canopy_step + 1e-12;
        worst_mae = std::max(worst_mae, b.mean_abs_error_db);
    }
    std::size_t canopy_obs = 0, double_obs = 0;
    for (const auto& s : clean) {
        canopy_obs += s.terms.canopy_factor_m > 0.0;
        double_obs += !s.terms.double_angles.empty();
    }
    std::ostringstream d;
    d << clean.size() << " obs (" << double_obs << " double-glass, " << canopy_obs << " canopy); noise-free -> ("
      << r0.triple_film_nm << " nm, " << r0.double_film_nm << " nm, "
      << (r0.bands.size() == 2 ? fmt(r0.bands[0].canopy_db_per_m) + ", " + fmt(r0.bands[1].canopy_db_per_m) : "?")
      << " dB/m), max residual " << fmt(max_res, 3) << " dB; +-1 dB noise -> (" << r1.triple_film_nm << " nm, "
      << r1.double_film_nm << " nm, "
      << (r1.bands.size() == 2 ? fmt(r1.bands[0].canopy_db_per_m) + ", " + fmt(r1.bands[1].canopy_db_per_m) : "?")
      << " dB/m), worst band mean |error| " << fmt(worst_mae, 4) << " dB";
    return {exact && within && worst_mae <= 2.0, d.str()};
}

// 8 ---------------------------------------------------------------------------
Outcome ablation_trend() {
    const auto full = make_shoebox();
    const auto ext = apply_variant(full, ModelVariant::exteriors_only);
    const Tracer tf(full), te(ext);
    const RunConfig cfg;
    const auto sim = cfg.simulation();
    std::size_t links = 0, holds = 0;
    double min_as_gap = 1e300, min_ds_gap = 1e300, min_pl_gap = 1e300;
    for (double band : cfg.bands_hz) {
        const auto model = cfg.gain_model(band);
        for (const auto& l : cfg.links.links()) {
            ++links;
            const auto a = simulate_link(tf, l, band, model, sim);
            const auto b = simulate_link(te, l, band, model, sim);
            if (!a.lsp || !b.lsp) continue;
            const double as_gap = a.lsp->azimuth_spread_deg - b.lsp->azimuth_spread_deg;
            const double ds_gap = a.lsp->delay_spread_ns - b.lsp->delay_spread_ns;
            const double pl_gap = b.lsp->path_loss_db - a.lsp->path_loss_db;
            min_as_gap = std::min(min_as_gap, as_gap);
            min_ds_gap = std::min(min_ds_gap, ds_gap);
            min_pl_gap = std::min(min_pl_gap, pl_gap);
            holds += as_gap > 0.0 && ds_gap > 0.0 && pl_gap >= 0.0;
        }
    }
    return {holds == links, std::to_string(holds) + "/" + std::to_string(links) +
                                " link-bands hold; min gaps: AS " + fmt(min_as_gap, 4) + " deg, DS " +
                                fmt(min_ds_gap, 4) + " ns, PL(ext)-PL(full) " + fmt(min_pl_gap, 4) + " dB"};
}

// 9 ---------------------------------------------------------------------------
Outcome lsp_fixtures() {
    const DiscretePath one[] = {{120.0, 45.0, -100.0}};
    const DiscretePath delays[] = {{0.0, 30.0, -90.0}, {20.0, 30.0, -90.0}};
    const DiscretePath wrap[] = {{50.0, 350.0, -90.0}, {50.0, 10.0, -90.0}};
    const auto a = compute_lsps(one), b = compute_lsps(delays), c = compute_lsps(wrap);
    // mean direction of the wrap pair: 0 deg, not 180
    const auto pad = synthesize_padp(wrap);
    const auto merged = compute_lsps(pad);
    const bool ok = a.path_loss_db == 100.0 && a.delay_spread_ns == 0.0 && a.azimuth_spread_deg == 0.0 &&
                    std::fabs(b.delay_spread_ns - 10.0) <= 1e-12 && std::fabs(c.azimuth_spread_deg - 10.0) <= 1e-9 &&
                    std::fabs(merged.azimuth_spread_deg - 10.0) <= 1e-9;
    return {ok, "single: PL " + fmt(a.path_loss_db) + " DS " + fmt(a.delay_spread_ns) + " AS " +
                    fmt(a.azimuth_spread_deg) + "; two delays 0/20 ns -> DS " + fmt(b.delay_spread_ns, 12) +
                    "; azimuths 350/10 -> AS " + fmt(c.azimuth_spread_deg, 12) + " (via PADP " +
                    fmt(merged.azimuth_spread_deg, 12) + ")"};
}

// 10 --------------------------------------------------------------------------
Outcome sensitivity_study() {
    const auto cloud = make_shoebox();
    const Tracer tracer(cloud);
    RunConfig cfg;
    const Link link{"Jitter", {13.7, -4.9, 1.5}, {1.5, 2.0, 1.5}};
    auto sim = cfg.simulation();
    sim.max_bounces = 2;
    sim.workers = 0;
    const auto r14 = jitter_sensitivity(tracer, link, f14, cfg.gain_model(f14), sim, cfg.jitter);
    const auto r4 = jitter_sensitivity(tracer, link, f4, cfg.gain_model(f4), sim, cfg.jitter);
    const double d14 = r14.small_angle_loss_delta_db_for(ObjectClass::window_triple);
    double dang = 0.0;
    for (const auto& w : r14.windows)
        if (w.object_class == ObjectClass::window_triple && w.small_angle_loss_delta_db == d14)
            dang = w.small_angle_angle_delta_deg;
    return {d14 >= 10.0 && r4.max_loss_delta_db < r14.max_loss_delta_db,
            std::to_string(r14.positions) + " positions (20 cm box); 14.25 GHz triple-glass delta " + fmt(d14, 4) +
                " dB for " + fmt(dang, 3) + " deg change (>= 10 dB); max delta 4.65 GHz " +
                fmt(r4.max_loss_delta_db, 4) + " dB < 14.25 GHz " + fmt(r14.max_loss_delta_db, 4) + " dB"};
}

// 11 --------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const std::string& cli, const fs::path& work) {
    if (cli.empty()) return {false, "no CLI path given"};
    fs::remove_all(work);
    fs::create_directories(work);
    auto sh = [&](const std::string& args, const std::string& out) {
        const std::string cmd = "\"" + cli + "\" " + args + " --out-dir \"" + (work / out).string() + "\" > /dev/null";
        return std::system(cmd.c_str());
    };
    if (sh("synth-observations --noise-db 1 --seed 3", "obs") != 0) return {false, "synth-observations failed"};
    const std::string obs = (work / "obs" / "observations.csv").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"trace", "trace --max-bounces 3"},
        {"lsp", "lsp --ablation --max-bounces 3"},
        {"curves", "curves --stack window_triple --film-nm 5"},
        {"calibrate", "calibrate --observations \"" + obs + "\""},
        {"jitter", "jitter --max-bounces 1 --band 14.25"},
        {"synth", "synth-scene"},
    };
    std::size_t compared = 0;
    for (const auto& [name, args] : commands) {
        std::vector<fs::path> dirs;
        int run_id = 0;
        for (const char* w : {"1", "4", "4"}) {
            const std::string out = name + "_" + std::to_string(run_id++);
            if (sh(args + " --workers " + w, out) != 0) return {false, name + " failed"};
            dirs.push_back(work / out);
        }
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const auto ref = slurp(entry.path());
            for (std::size_t k = 1; k < dirs.size(); ++k) {
                if (slurp(dirs[k] / entry.path().filename()) != ref)
                    return {false, name + ": " + entry.path().filename().string() + " differs"};
                ++compared;
            }
        }
    }
    return {true, std::to_string(compared) + " output files byte-identical across workers 1/4/4 for " +
                      std::to_string(commands.size()) + " commands"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const fs::path work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "o2i_acceptance";

    run(1, "slab energy conservation", 5.0, energy_conservation);
    run(2, "Fresnel single-interface oracle", 0.0, fresnel_oracle);
    run(3, "triple-glass loss-curve oscillation", 10.0, loss_curve_character);
    run(4, "tracer vs brute-force oracle", 60.0, tracer_oracle);
    run(5, "image-method plane mirror", 0.0, plane_mirror);
    run(6, "shadowing geometry fixtures", 0.0, shadowing_fixtures);
    run(7, "calibration round trip", 120.0, calibration_round_trip);
    run(8, "ablation trend (full vs exteriors only)", 120.0, ablation_trend);
    run(9, "LSP fixtures", 0.0, lsp_fixtures);
    run(10, "antenna-position sensitivity", 120.0, sensitivity_study);
    run(11, "determinism across worker counts", 0.0, [&] { return determinism(cli, work); });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
