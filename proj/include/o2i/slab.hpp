#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "scene.hpp"

namespace o2i {

enum class Polarization { te, tm };

/// How per-polarization power coefficients are combined into one loss figure.
enum class PolarizationPolicy { te, tm, average };

inline std::string_view to_string(PolarizationPolicy p) {
    switch (p) {
        case PolarizationPolicy::te: return "te";
        case PolarizationPolicy::tm: return "tm";
        case PolarizationPolicy::average: return "average";
    }
    return "te";
}

inline std::optional<PolarizationPolicy> parse_polarization_policy(std::string_view s) {
    if (s == "te") return PolarizationPolicy::te;
    if (s == "tm") return PolarizationPolicy::tm;
    if (s == "average") return PolarizationPolicy::average;
    return std::nullopt;
}

struct SlabLayer {
    Complex permittivity{1.0, 0.0};
    double thickness_m = 0.0;
};

/// Complex amplitude coefficients of a stack embedded in air on both sides.
/// TE coefficients are for the electric field, TM for the magnetic field, so
/// |t|^2 is the power transmittance for both.
struct SlabCoefficients {
    Complex reflection_te;
    Complex reflection_tm;
    Complex transmission_te;
    Complex transmission_tm;
    double incidence_angle = 0.0;  // radians from the surface normal
    double frequency_hz = 0.0;

    Complex reflection(Polarization p) const { return p == Polarization::te ? reflection_te : reflection_tm; }
    Complex transmission(Polarization p) const { return p == Polarization::te ? transmission_te : transmission_tm; }

    double transmittance(PolarizationPolicy p) const {
        return combine(std::norm(transmission_te), std::norm(transmission_tm), p);
    }
    double reflectance(PolarizationPolicy p) const {
        return combine(std::norm(reflection_te), std::norm(reflection_tm), p);
    }

private:
    static double combine(double te, double tm, PolarizationPolicy p) {
        switch (p) {
            case PolarizationPolicy::te: return te;
            case PolarizationPolicy::tm: return tm;
            case PolarizationPolicy::average: return 0.5 * (te + tm);
        }
        return te;
    }
};

/// Metal film layer with the tabulated metal permittivity of the band.
inline SlabLayer conductive_film_layer(double thickness_m, double frequency_hz,
                                       const MaterialTable& table = MaterialTable::defaults()) {
    if (!(thickness_m >= 0.0)) throw DomainError("film thickness must be non-negative");
    return {table.permittivity("metal", frequency_hz), thickness_m};
}

/// Expands a stack into slab layers at one band, inserting the film when the
/// stack has a film slot. Zero-thickness layers are dropped.
inline std::vector<SlabLayer> resolve_stack(const LayerStack& stack, const MaterialTable& table, double frequency_hz,
                                            double film_thickness_m = 0.0) {
    if (!(film_thickness_m >= 0.0)) throw DomainError("film thickness must be non-negative");
    std::vector<SlabLayer> out;
    out.reserve(stack.layers.size() + 1);
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
        const Layer& l = stack.layers[i];
        if (l.thickness_m < 0.0) throw DomainError("negative layer thickness");
        if (l.thickness_m > 0.0) out.push_back({table.permittivity(l.material, frequency_hz), l.thickness_m});
        if (stack.film_after && *stack.film_after == i && film_thickness_m > 0.0)
            out.push_back(conductive_film_layer(film_thickness_m, frequency_hz, table));
    }
    return out;
}

inline std::vector<SlabLayer> reversed(std::span<const SlabLayer> layers) {
    return {layers.rbegin(), layers.rend()};
}

namespace detail {

// Normal wavenumber over k0 in a medium; branch with Im >= 0 so fields
// exp(+j kz z) decay in lossy media (exp(-j w t) time convention).
inline Complex normal_wavenumber(Complex eps, double sin2) {
    Complex kz = std::sqrt(eps - sin2);
    if (kz.imag() < 0.0 || (kz.imag() == 0.0 && kz.real() < 0.0)) kz = -kz;
    return kz;
}

struct Interface {
    Complex r;
    Complex t;
};

inline Interface fresnel_interface(Complex eps_a, Complex kz_a, Complex eps_b, Complex kz_b, Polarization pol) {
    if (pol == Polarization::te) {
        const Complex den = kz_a + kz_b;
        return {(kz_a - kz_b) / den, 2.0 * kz_a / den};
    }
    const Complex den = eps_b * kz_a + eps_a * kz_b;
    return {(eps_b * kz_a - eps_a * kz_b) / den, 2.0 * eps_b * kz_a / den};
}

inline void check_angle(double angle, double frequency_hz) {
    if (!(angle >= 0.0) || !(angle < std::numbers::pi / 2))
        throw DomainError("incidence angle must lie in [0, pi/2)");
    if (!(frequency_hz > 0.0)) throw DomainError("frequency must be positive");
}

// Reflection / transmission by recursion from the exit interface towards the
// entry one; every propagation factor has |exp(j kz d)| <= 1.
inline Interface stack_response(std::span<const SlabLayer> layers, double angle, double frequency_hz,
                                Polarization pol) {
    const double k0 = 2.0 * std::numbers::pi * frequency_hz / speed_of_light;
    const double s = std::sin(angle);
    const double sin2 = s * s;
    const Complex air{1.0, 0.0};
    const std::size_t n = layers.size();

    auto eps_at = [&](std::size_t m) { return (m == 0 || m == n + 1) ? air : layers[m - 1].permittivity; };
    std::vector<Complex> kz(n + 2);
    for (std::size_t m = 0; m < n + 2; ++m) kz[m] = normal_wavenumber(eps_at(m), sin2);

    Interface last = fresnel_interface(eps_at(n), kz[n], eps_at(n + 1), kz[n + 1], pol);
    Complex gamma = last.r;
    Complex tau = last.t;
    const Complex j{0.0, 1.0};
    for (std::size_t m = n; m-- > 0;) {
        const Interface f = fresnel_interface(eps_at(m), kz[m], eps_at(m + 1), kz[m + 1], pol);
        const Complex e = std::exp(j * (k0 * layers[m].thickness_m) * kz[m + 1]);
        const Complex e2 = e * e;
        const Complex den = 1.0 + f.r * gamma * e2;
        tau = f.t * tau * e / den;
        gamma = (f.r + gamma * e2) / den;
    }
    return {gamma, tau};
}

}  // namespace detail

inline SlabCoefficients slab_coefficients(std::span<const SlabLayer> layers, double angle, double frequency_hz) {
    detail::check_angle(angle, frequency_hz);
    const auto te = detail::stack_response(layers, angle, frequency_hz, Polarization::te);
    const auto tm = detail::stack_response(layers, angle, frequency_hz, Polarization::tm);
    return {te.r, tm.r, te.t, tm.t, angle, frequency_hz};
}

inline SlabCoefficients slab_coefficients(const LayerStack& stack, const MaterialTable& table, double angle,
                                          double frequency_hz, double film_thickness_m = 0.0) {
    const auto layers = resolve_stack(stack, table, frequency_hz, film_thickness_m);
    return slab_coefficients(layers, angle, frequency_hz);
}

/// Transmission loss in dB, -10 log10 |T|^2 under the polarization policy.
inline double penetration_loss_db(std::span<const SlabLayer> layers, double angle, double frequency_hz,
                                  PolarizationPolicy policy = PolarizationPolicy::te) {
    return -10.0 * std::log10(slab_coefficients(layers, angle, frequency_hz).transmittance(policy));
}

inline double penetration_loss_db(const LayerStack& stack, const MaterialTable& table, double angle,
                                  double frequency_hz, double film_thickness_m = 0.0,
                                  PolarizationPolicy policy = PolarizationPolicy::te) {
    const auto layers = resolve_stack(stack, table, frequency_hz, film_thickness_m);
    return penetration_loss_db(layers, angle, frequency_hz, policy);
}

/// Reflection loss in dB, -10 log10 |R|^2 under the polarization policy.
inline double reflection_loss_db(std::span<const SlabLayer> layers, double angle, double frequency_hz,
                                 PolarizationPolicy policy = PolarizationPolicy::te) {
    return -10.0 * std::log10(slab_coefficients(layers, angle, frequency_hz).reflectance(policy));
}

}  // namespace o2i
