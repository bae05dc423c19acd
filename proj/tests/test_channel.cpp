#include <gtest/gtest.h>

#include "o2i/o2i.hpp"

using namespace o2i;

namespace {

constexpr double f4 = 4.65e9;
constexpr double f14 = 14.25e9;

PathGainModel model(double canopy = 1.1) {
    return {MaterialTable::defaults(), StackSet::defaults(), {5e-9, 40e-9}, canopy, PolarizationPolicy::te};
}

PropagationPath free_path(double length) {
    PropagationPath p;
    p.tx = {0, 0, 0};
    p.rx = {length, 0, 0};
    p.vertices = {p.tx, p.rx};
    p.geometric_length_m = length;
    p.delay_s = length / speed_of_light;
    p.annotated = true;
    return p;
}

Interaction penetration(InteractionKind k, ObjectClass c, double angle, double q, double d = 0.0) {
    Interaction in;
    in.kind = k;
    in.object_class = c;
    in.incidence_angle = angle;
    in.fresnel_scale_q = q;
    in.penetration_length_m = d;
    return in;
}

LspRecord rec(const std::string& id, double band, double pl, double ds = 0.0, double as = 0.0) {
    LspRecord r;
    r.link_id = id;
    r.band_hz = band;
    r.lsp = {pl, ds, as, 1};
    return r;
}

}  // namespace

TEST(PathGain, FreeSpace) {
    const double d = 29.98;
    const double expected = 20.0 * std::log10(4.0 * std::numbers::pi * d * f4 / speed_of_light);
    EXPECT_NEAR(free_space_loss_db(d, f4), expected, 1e-12);
    EXPECT_NEAR(path_gain(free_path(d), model(), f4), -75.3, 0.05);
    EXPECT_NEAR(free_path(d).delay_ns(), 100.0, 0.01);
}

TEST(PathGain, CanopyAddsLossPerMetre) {
    auto p = free_path(29.98);
    const double base = path_gain(p, model(), f4);
    p.interactions.push_back(penetration(InteractionKind::canopy_penetration, ObjectClass::tree_canopy, 0.0, 1.0, 2.0));
    EXPECT_NEAR(path_gain(p, model(1.1), f4) - base, -2.2, 1e-12);
}

TEST(PathGain, ZeroQLeavesWindowsOnly) {
    auto p = free_path(20.0);
    p.interactions.push_back(penetration(InteractionKind::window_penetration, ObjectClass::window_triple, 0.3, 0.0));
    p.interactions.push_back(penetration(InteractionKind::interior_wall_penetration, ObjectClass::interior_wall, 0.2, 0.0));
    p.interactions.push_back(penetration(InteractionKind::canopy_penetration, ObjectClass::tree_canopy, 0.0, 0.0, 3.0));
    const auto m = model();
    const double window = penetration_loss_db(m.stacks.window_triple, m.materials, 0.3, f14, 5e-9);
    EXPECT_NEAR(path_gain(p, m, f14), -(free_space_loss_db(20.0, f14) + window), 1e-9);
}

TEST(PathGain, ReflectionFromBackUsesReversedStack) {
    auto p = free_path(10.0);
    Interaction in;
    in.kind = InteractionKind::reflection;
    in.object_class = ObjectClass::window_triple;
    in.incidence_angle = 0.5;
    in.from_front = false;
    p.interactions.push_back(in);
    const auto m = model();
    const auto layers = reversed(resolve_stack(m.stacks.window_triple, m.materials, f14, 5e-9));
    EXPECT_NEAR(path_gain_breakdown(p, m, f14).reflection_db, reflection_loss_db(layers, 0.5, f14), 1e-12);
}

TEST(PathGain, UnannotatedPathRejected) {
    auto p = free_path(10.0);
    p.annotated = false;
    EXPECT_THROW(path_gain(p, model(), f4), ValidationError);
}

TEST(Padp, SinglePathOccupiesOneBin) {
    const DiscretePath one[] = {{100.0, 90.0, -80.0}};
    const auto g = synthesize_padp(one);
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < g.delay_bins(); ++i)
        for (std::size_t j = 0; j < Padp::azimuth_bins; ++j)
            if (g.occupied(i, j)) {
                ++occupied;
                EXPECT_EQ(g.delay_of(i), 100.0);
                EXPECT_EQ(g.azimuth_of(j), 90.0);
                EXPECT_NEAR(g.power_db(i, j), -80.0, 1e-12);
            }
    EXPECT_EQ(occupied, 1u);
}

TEST(Padp, SameBinPowersAdd) {
    const DiscretePath two[] = {{50.2, 10.4, -83.01}, {49.9, 9.8, -83.01}};
    const auto g = synthesize_padp(two);
    EXPECT_NEAR(g.max_power_db(), -83.01 + 10.0 * std::log10(2.0), 1e-12);
    EXPECT_NEAR(g.max_power_db(), -80.0, 0.01);
}

TEST(Padp, DelayLimitAndWrap) {
    Padp g(350.0);
    EXPECT_FALSE(g.add(360.0, 0.0, -90.0));
    EXPECT_TRUE(g.add(350.0, 0.0, -90.0));
    EXPECT_EQ(Padp::azimuth_bin(358.0), 0u);
    EXPECT_EQ(Padp::azimuth_bin(-5.0), 71u);
    EXPECT_THROW(g.add(10.0, 0.0, std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Padp, LocalMaximaAreDiscretePaths) {
    const DiscretePath paths[] = {{100, 0, -80}, {102, 0, -85}, {200, 180, -90}};
    const auto d = synthesize_padp(paths).discrete_paths();
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].delay_ns, 100.0);
    EXPECT_EQ(d[1].azimuth_deg, 180.0);
}

TEST(Lsp, SinglePath) {
    const DiscretePath one[] = {{120.0, 45.0, -100.0}};
    const auto l = compute_lsps(one);
    EXPECT_NEAR(l.path_loss_db, 100.0, 1e-12);
    EXPECT_EQ(l.delay_spread_ns, 0.0);
    EXPECT_EQ(l.azimuth_spread_deg, 0.0);
}

TEST(Lsp, SymmetricTwoPaths) {
    const DiscretePath delays[] = {{0.0, 0.0, -90.0}, {20.0, 0.0, -90.0}};
    EXPECT_NEAR(compute_lsps(delays).delay_spread_ns, 10.0, 1e-12);
    const DiscretePath wrap[] = {{10.0, 350.0, -90.0}, {10.0, 10.0, -90.0}};
    EXPECT_NEAR(compute_lsps(wrap).azimuth_spread_deg, 10.0, 1e-9);
    const DiscretePath plain[] = {{10.0, 170.0, -90.0}, {10.0, 190.0, -90.0}};
    EXPECT_NEAR(compute_lsps(plain).azimuth_spread_deg, 10.0, 1e-9);
}

TEST(Lsp, DynamicRangeFilter) {
    const DiscretePath paths[] = {{0.0, 0.0, -80.0}, {100.0, 90.0, -100.5}};
    const auto l = compute_lsps(paths, 20.0);
    EXPECT_EQ(l.paths_used, 1u);
    EXPECT_EQ(l.delay_spread_ns, 0.0);
    EXPECT_EQ(compute_lsps(paths, 21.0).paths_used, 2u);
    EXPECT_THROW(compute_lsps(std::span<const DiscretePath>{}), DomainError);
}

TEST(Lsp, RotationAndDelayShiftInvariance) {
    const DiscretePath base[] = {{30, 10, -80}, {45, 60, -84}, {80, 300, -88}, {120, 200, -95}};
    const auto ref = compute_lsps(base);
    std::vector<DiscretePath> moved(std::begin(base), std::end(base));
    for (auto& p : moved) {
        p.delay_ns += 17.0;
        p.azimuth_deg = Padp::wrap_deg(p.azimuth_deg + 133.0);
    }
    const auto l = compute_lsps(moved);
    EXPECT_NEAR(l.delay_spread_ns, ref.delay_spread_ns, 1e-9);
    EXPECT_NEAR(l.azimuth_spread_deg, ref.azimuth_spread_deg, 1e-9);
    EXPECT_NEAR(l.path_loss_db, ref.path_loss_db, 1e-12);
}

TEST(Compare, Examples) {
    const LspRecord sim[] = {rec("a", f4, 10), rec("b", f4, 20)};
    const LspRecord ref[] = {rec("a", f4, 12), rec("b", f4, 16)};
    const auto c = compare_lsps(sim, ref);
    ASSERT_EQ(c.size(), 1u);
    const auto& pl = c[0].metrics[0];
    EXPECT_EQ(pl.metric, LspMetric::path_loss);
    EXPECT_NEAR(pl.mean_error, 1.0, 1e-12);
    EXPECT_NEAR(pl.rms_error, std::sqrt(20.0 / 2.0), 1e-12);
    EXPECT_NEAR(pl.rms_error, 3.16, 0.005);

    const auto same = compare_lsps(sim, sim);
    for (const auto& m : same[0].metrics) {
        EXPECT_EQ(m.mean_error, 0.0);
        EXPECT_EQ(m.rms_error, 0.0);
    }
    const LspRecord shifted[] = {rec("a", f4, 12), rec("b", f4, 22)};
    const auto s = compare_lsps(shifted, sim);
    EXPECT_NEAR(s[0].metrics[0].mean_error, 2.0, 1e-12);
    EXPECT_NEAR(s[0].metrics[0].rms_error, 2.0, 1e-12);
}

TEST(Compare, MismatchedLinksRejected) {
    const LspRecord sim[] = {rec("a", f4, 10), rec("b", f4, 20)};
    const LspRecord ref[] = {rec("a", f4, 12), rec("c", f4, 16)};
    EXPECT_THROW(compare_lsps(sim, ref), ValidationError);
    const LspRecord one[] = {rec("a", f4, 12)};
    EXPECT_THROW(compare_lsps(sim, one), ValidationError);
}

TEST(Simulation, ExteriorsOnlyHasNoInteriorInteractions) {
    const auto cloud = apply_variant(make_shoebox(), ModelVariant::exteriors_only);
    const Tracer tracer(cloud);
    SimulationOptions opt;
    opt.max_bounces = 2;
    for (const auto& l : shoebox_links().links()) {
        const auto r = simulate_link(tracer, l, f4, model(), opt);
        for (const auto& p : r.paths)
            for (const auto& in : p.interactions) EXPECT_NE(in.object_class, ObjectClass::interior_wall);
    }
}

TEST(Simulation, AblationTrendOnOneLink) {
    const auto full = make_shoebox();
    const auto ext = apply_variant(full, ModelVariant::exteriors_only);
    const Tracer tf(full), te(ext);
    const auto l = shoebox_links().links()[2];
    SimulationOptions opt;
    const auto a = simulate_link(tf, l, f14, model(2.1), opt);
    const auto b = simulate_link(te, l, f14, model(2.1), opt);
    ASSERT_TRUE(a.lsp && b.lsp);
    EXPECT_GT(a.lsp->azimuth_spread_deg, b.lsp->azimuth_spread_deg);
    EXPECT_GT(a.lsp->delay_spread_ns, b.lsp->delay_spread_ns);
    EXPECT_GE(b.lsp->path_loss_db, a.lsp->path_loss_db);
}

TEST(Simulation, NoMetalFilmVariantZeroesFilms) {
    const auto m = apply_variant(model(), ModelVariant::no_metal_film);
    EXPECT_EQ(m.films.triple_film_m, 0.0);
    EXPECT_EQ(m.films.double_film_m, 0.0);
    EXPECT_EQ(parse_model_variant("exteriors_only"), ModelVariant::exteriors_only);
    EXPECT_FALSE(parse_model_variant("bogus").has_value());
}
