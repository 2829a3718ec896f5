#pragma once

// Shared domain types for the scaled LMG model
//
//   H(s) = -(1-s) Jz - (s/N) Jx^2 - eps0 cos(omega t) Jy,   J = N/2, hbar = 1.
//
// In the mean-field limit the rescaled spin (X, Y, Z) = <J>/J lives on the unit
// sphere and the energy per spin quantum is
//
//   E/J = -(1-s) Z - (s/N) J X^2 = -(1-s) Z - (s/2) X^2,
//
// which generates the classical flow through {X_i, X_j} = eps_ijk X_k.
// Times are measured in inverse units of the scaled energy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmg/errors.hpp"

namespace lmg {

inline constexpr double pi = std::numbers::pi;

/// Parameters (s, N, eps0, omega) of the possibly driven model.
struct ModelParams {
    double s = 0.0;
    int N = 2;
    double eps0 = 0.0;
    double omega = 1.0;

    double J() const noexcept { return 0.5 * N; }
    bool driven() const noexcept { return eps0 > 0.0; }

    void validate() const {
        if (!(s >= 0.0 && s <= 1.0))
            throw DomainError("s must lie in [0, 1], got " + std::to_string(s));
        if (N < 2 || N % 2 != 0)
            throw DomainError("N must be a positive even integer >= 2, got " + std::to_string(N));
        if (!(eps0 >= 0.0))
            throw DomainError("eps0 must be >= 0");
        if (eps0 > 0.0 && !(omega > 0.0))
            throw DomainError("omega must be > 0 when eps0 > 0");
    }

    ModelParams with_s(double new_s) const {
        ModelParams p = *this;
        p.s = new_s;
        return p;
    }
    ModelParams with_eps0(double e) const {
        ModelParams p = *this;
        p.eps0 = e;
        return p;
    }
};

/// Point on the mean-field unit sphere.
struct BlochState {
    double X = 0.0;
    double Y = 0.0;
    double Z = 1.0;

    double norm() const noexcept { return std::sqrt(X * X + Y * Y + Z * Z); }

    double theta() const noexcept { return std::acos(std::clamp(Z, -1.0, 1.0)); }

    /// Azimuth in (-pi, pi]; 0 at the poles.
    double phi() const noexcept {
        if (std::hypot(X, Y) < 1e-12) return 0.0;
        double p = std::atan2(Y, X);
        return p == -pi ? pi : p;
    }

    BlochState normalized() const {
        double n = norm();
        return {X / n, Y / n, Z / n};
    }

    BlochState parity_mirror() const noexcept { return {-X, -Y, Z}; }
};

inline BlochState bloch_from_angles(double theta, double phi) {
    if (!(theta >= 0.0 && theta <= pi))
        throw DomainError("theta must lie in [0, pi], got " + std::to_string(theta));
    double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

/// E/J for the unperturbed model.
inline double classical_energy(const BlochState& b, double s) noexcept {
    return -(1.0 - s) * b.Z - 0.5 * s * b.X * b.X;
}

/// Amplitudes c_m over |J, m>, m = -J..J ascending.
struct DickeState {
    Eigen::VectorXcd amplitudes;

    int dim() const noexcept { return static_cast<int>(amplitudes.size()); }
    double J() const noexcept { return 0.5 * (dim() - 1); }
    double norm() const { return amplitudes.norm(); }
    /// Index of magnetic quantum number m.
    int index(double m) const noexcept { return static_cast<int>(std::lround(m + J())); }
};

enum class ProtocolKind { GSQPT, DQPT, Custom };
enum class Regime { Classical, Quantum };

/// Initial angle of the ground-state protocol in the thermodynamic limit.
inline constexpr double eps_thermodynamic = pi / 60.0;

/// Initial angle of the ground-state protocol at finite N, widened by the
/// coherent-state width.
inline double eps_finite(int N) { return pi / 60.0 + 1.0 / std::sqrt(static_cast<double>(N)); }

/// Detection threshold sin(delta / sqrt(2J)).
inline double xbar_threshold(double delta, double J) { return std::sin(delta / std::sqrt(2.0 * J)); }

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::DQPT;
    Regime regime = Regime::Classical;
    double T = 1000.0;
    double dt = 1e-3;
    double sample_dt = 0.1;
    double delta = 1.0;
    // only used for ProtocolKind::Custom
    double theta0 = pi / 2;
    double phi0 = 0.0;

    void validate() const {
        if (!(T > 0.0)) throw DomainError("T must be > 0");
        if (!(dt > 0.0 && dt <= sample_dt && sample_dt <= T))
            throw DomainError("need 0 < dt <= sample_dt <= T");
        if (!(delta > 0.0)) throw DomainError("delta must be > 0");
        if (kind == ProtocolKind::Custom && !(theta0 >= 0.0 && theta0 <= pi))
            throw DomainError("custom theta0 must lie in [0, pi]");
    }

    /// (theta0, phi0) of the protocol's initial condition for N spins.
    std::pair<double, double> initial_angles(int N) const {
        switch (kind) {
        case ProtocolKind::GSQPT:
            return {regime == Regime::Classical ? eps_thermodynamic : eps_finite(N), 0.0};
        case ProtocolKind::DQPT:
            return {pi / 2, 0.0};
        case ProtocolKind::Custom:
            break;
        }
        return {theta0, phi0};
    }
};

inline std::string to_string(ProtocolKind k) {
    switch (k) {
    case ProtocolKind::GSQPT: return "gsqpt";
    case ProtocolKind::DQPT: return "dqpt";
    case ProtocolKind::Custom: return "custom";
    }
    return "?";
}

inline std::string to_string(Regime r) { return r == Regime::Classical ? "classical" : "quantum"; }

struct CurvePoint {
    double s;
    double xbar;
    bool complete = true;
};

/// Sampled map s -> time-averaged X.
struct BifurcationCurve {
    std::vector<CurvePoint> points;
    ProtocolSpec spec;
    ModelParams params;

    bool partial() const {
        for (const auto& p : points)
            if (!p.complete) return true;
        return false;
    }

    void check_invariants() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (i > 0 && !(points[i].s > points[i - 1].s))
                throw DomainError("bifurcation curve s values must be strictly increasing");
            if (points[i].complete && !(std::abs(points[i].xbar) <= 1.0 + 1e-9))
                throw DomainError("bifurcation curve |xbar| exceeds 1");
        }
    }
};

struct ChaosDetection {
    double lambda_chaos = 0.01;
    double horizon = 2000.0;
    double renorm_interval = 1.0;
    double neighbor_offset = 1e-8;
    double dt = 1e-2;
    int ic_count = 200;
};

/// Chaotic fraction on an (omega, s) grid, stored omega-major.
struct ChaosMap {
    std::vector<double> omega_grid;
    std::vector<double> s_grid;
    std::vector<double> fraction;
    ChaosDetection detection;
    double eps0 = 0.0;

    double at(std::size_t iw, std::size_t is) const { return fraction[iw * s_grid.size() + is]; }
};

template <class Range>
bool strictly_increasing(const Range& r) {
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) return false;
    return true;
}

} // namespace lmg
