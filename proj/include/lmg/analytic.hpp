#pragma once

// Closed-form results for the unperturbed model: the elliptic-integral time
// average of X, bifurcation points, and the semiclassical double-well potential
// with its finite-size critical point.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "lmg/core.hpp"

namespace lmg::analytic {

/// Complete elliptic integral of the first kind K(m), with m the *parameter*
/// (m = k^2), via the arithmetic-geometric mean. Negative m is allowed.
inline double elliptic_K(double m) {
    if (!(m < 1.0))
        throw DomainError("elliptic_K requires m < 1, got " + std::to_string(m));
    double a = 1.0;
    double b = std::sqrt(1.0 - m);
    for (int it = 0; it < 64; ++it) {
        double an = 0.5 * (a + b);
        double bn = std::sqrt(a * b);
        a = an;
        b = bn;
        if (std::abs(a - b) <= 1e-16 * a) break;
    }
    return pi / (2.0 * a);
}

inline double lambda_param(double theta0, double s) {
    double st = std::sin(theta0);
    if (!(theta0 > 0.0 && theta0 < pi) || st * st == 0.0)
        throw DomainError("lambda_param requires 0 < theta0 < pi");
    if (!(s > 0.0 && s <= 1.0))
        throw DomainError("lambda_param requires 0 < s <= 1");
    double r = (1.0 - s) / s;
    return -4.0 * (1.0 - s) / (s * st * st) * (std::cos(theta0) - r);
}

/// Onset s_c(theta0) = 1 / (1 + cos^2(theta0/2)).
inline double bifurcation_point(double theta0) {
    if (!(theta0 >= 0.0 && theta0 <= pi))
        throw DomainError("bifurcation_point requires theta0 in [0, pi]");
    double c = std::cos(0.5 * theta0);
    return 1.0 / (1.0 + c * c);
}

/// Long-time average of X from (theta0, phi0 = 0). The positive branch is
/// returned; the parity-mirrored start gives the negative one.
inline double xbar_analytic(double theta0, double s) {
    if (!(theta0 > 0.0 && theta0 < pi))
        throw DomainError("xbar_analytic requires 0 < theta0 < pi");
    if (s < bifurcation_point(theta0)) return 0.0;
    double lam = lambda_param(theta0, s);
    if (lam >= 1.0) return 0.0; // K diverges exactly at onset
    return 0.5 * pi * std::sin(theta0) / elliptic_K(lam);
}

struct ConservationValue {
    double cos2_phi;
    bool reachable;
};

/// cos^2(phi) on the energy shell through (theta0, 0) at polar angle theta.
inline ConservationValue energy_conservation_relation(double theta0, double s, double theta) {
    if (!(s > 0.0 && s <= 1.0))
        throw DomainError("energy_conservation_relation requires 0 < s <= 1");
    double st = std::sin(theta);
    if (st == 0.0 || std::abs(st) < 1e-300)
        throw DomainError("energy_conservation_relation undefined at the poles");
    double s0 = std::sin(theta0);
    double v = (2.0 * (1.0 - s) * (std::cos(theta0) - std::cos(theta)) + s * s0 * s0) / (s * st * st);
    if (v > 1.0 && v <= 1.0 + 1e-12) v = 1.0;
    if (v < 0.0 && v >= -1e-12) v = 0.0;
    return {v, v >= 0.0 && v <= 1.0};
}

// ---------------------------------------------------------------------------
// Semiclassical well. N == std::nullopt means the thermodynamic limit.

using SystemSize = std::optional<int>;

inline double semiclassical_potential(double s, double z, SystemSize N = std::nullopt) {
    if (!(std::abs(z) < 1.0))
        throw DomainError("semiclassical_potential requires |z| < 1");
    double u = 1.0 - z * z;
    double su = std::sqrt(u);
    double v = -0.5 * (1.0 - s) * su - 0.25 * s * z * z;
    if (N) {
        double n = *N;
        v -= 0.25 * (1.0 - s) * (2.0 / (n * su) - (1.0 + z * z) / (n * n * u * su));
    }
    return v;
}

/// d^2 V / dz^2, analytic.
inline double semiclassical_potential_d2(double s, double z, SystemSize N = std::nullopt) {
    if (!(std::abs(z) < 1.0))
        throw DomainError("semiclassical_potential_d2 requires |z| < 1");
    double u = 1.0 - z * z;
    double z2 = z * z;
    double v = 0.5 * (1.0 - s) * std::pow(u, -1.5) - 0.5 * s;
    if (N) {
        double n = *N;
        double g1 = (1.0 + 2.0 * z2) * std::pow(u, -2.5);
        double g2 = (5.0 + 23.0 * z2 + 2.0 * z2 * z2) * std::pow(u, -3.5);
        v -= 0.25 * (1.0 - s) * (2.0 / n * g1 - g2 / (n * n));
    }
    return v;
}

/// Location z >= 0 of the global minimum of the well on [0, 1).
inline double well_minimum(double s, SystemSize N = std::nullopt) {
    if (!N) {
        if (s <= 0.5) return 0.0;
        double r = (1.0 - s) / s;
        return std::sqrt(1.0 - r * r);
    }
    constexpr int grid = 4000;
    constexpr double zmax = 1.0 - 1e-6;
    int best = 0;
    double vbest = semiclassical_potential(s, 0.0, N);
    for (int i = 1; i <= grid; ++i) {
        double z = zmax * i / grid;
        double v = semiclassical_potential(s, z, N);
        if (v < vbest) {
            vbest = v;
            best = i;
        }
    }
    if (best == 0) return 0.0;
    // golden-section refinement inside the bracketing cells
    double lo = zmax * (best - 1) / grid;
    double hi = zmax * std::min(best + 1, grid) / grid;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - g * (hi - lo);
    double d = lo + g * (hi - lo);
    while (hi - lo > 1e-13) {
        if (semiclassical_potential(s, c, N) < semiclassical_potential(s, d, N))
            hi = d;
        else
            lo = c;
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    return 0.5 * (lo + hi);
}

struct WellDescription {
    double s;
    SystemSize N;
    double z_min;
    double barrier_height;
    std::optional<double> zero_point_energy;

    double potential(double z) const { return semiclassical_potential(s, z, N); }
};

inline double barrier_height(double s, SystemSize N = std::nullopt) {
    double zm = well_minimum(s, N);
    if (zm == 0.0) return 0.0;
    return semiclassical_potential(s, 0.0, N) - semiclassical_potential(s, zm, N);
}

/// Effective mass read off the kinetic term -(1/N^2)(1-s) d/dz sqrt(1-z^2) d/dz,
/// i.e. 1/(2m) = (1-s) sqrt(1-z^2) with hbar_eff = 1/N.
inline double effective_mass(double s, double z) {
    return 1.0 / (2.0 * (1.0 - s) * std::sqrt(1.0 - z * z));
}

/// Harmonic zero-point energy (1/N)(omega/2) at the bottom of the well.
inline double zero_point_energy(double s, int N) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("zero_point_energy requires 0 < s < 1");
    double zm = well_minimum(s, N);
    double curv = semiclassical_potential_d2(s, zm, N);
    if (!(curv > 0.0)) throw NumericSolveError("non-positive curvature at well minimum");
    double w = std::sqrt(curv / effective_mass(s, zm));
    return 0.5 * w / N;
}

inline WellDescription describe_well(double s, SystemSize N = std::nullopt) {
    WellDescription w{s, N, well_minimum(s, N), barrier_height(s, N), std::nullopt};
    if (N && s > 0.0 && s < 1.0) w.zero_point_energy = zero_point_energy(s, *N);
    return w;
}

/// Closed-form finite-size ground-state critical point 1/2 + N^(-2/3) / 2^(1/3).
inline double finite_size_critical_point(double N) {
    if (!(N >= 2.0)) throw DomainError("finite_size_critical_point requires N >= 2");
    if (std::isinf(N)) return 0.5;
    return 0.5 + std::pow(N, -2.0 / 3.0) / std::cbrt(2.0);
}

/// Solves barrier_height(s, N) == zero_point_energy(s, N) by bisection.
inline double finite_size_critical_point_numeric(int N, double tol = 1e-10) {
    if (N < 2) throw DomainError("finite_size_critical_point_numeric requires N >= 2");
    auto f = [N](double s) { return barrier_height(s, N) - zero_point_energy(s, N); };
    double lo = 0.45, hi = 0.95;
    double flo = f(lo), fhi = f(hi);
    if (!(flo < 0.0 && fhi > 0.0))
        throw NumericSolveError("barrier/zero-point bracket [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "] does not straddle a root: f = " +
                                std::to_string(flo) + ", " + std::to_string(fhi));
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace lmg::analytic
