#pragma once

// Mean-field dynamics on the unit sphere: flows, fixed-step RK4 integration,
// time averages, largest Lyapunov exponent, stroboscopic sections and
// chaotic-fraction maps.

#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "lmg/core.hpp"
#include "lmg/parallel.hpp"

namespace lmg::classical {

using Vec3 = std::array<double, 3>;

inline Vec3 to_vec(const BlochState& b) { return {b.X, b.Y, b.Z}; }
inline BlochState to_bloch(const Vec3& v) { return {v[0], v[1], v[2]}; }

inline Vec3 lmg_flow(const BlochState& b, double s) {
    return {(1.0 - s) * b.Y, -(1.0 - s) * b.X + s * b.X * b.Z, -s * b.X * b.Y};
}

/// Flow of H - eps0 cos(omega t) Jy: the drive rotates the spin about y.
inline Vec3 driven_flow(const BlochState& b, double s, double eps0, double omega, double t) {
    Vec3 f = lmg_flow(b, s);
    double c = eps0 * std::cos(omega * t);
    f[0] -= c * b.Z;
    f[2] += c * b.X;
    return f;
}

/// Callable right-hand side for ModelParams; the drive vanishes for eps0 = 0.
struct Flow {
    double s;
    double eps0 = 0.0;
    double omega = 1.0;

    explicit Flow(const ModelParams& p) : s(p.s), eps0(p.eps0), omega(p.omega) {}
    Flow(double s_, double eps0_, double omega_) : s(s_), eps0(eps0_), omega(omega_) {}

    double drive(double t) const { return eps0 == 0.0 ? 0.0 : eps0 * std::cos(omega * t); }

    // c = eps0 cos(omega t), precomputed so paired trajectories share it
    Vec3 operator()(const Vec3& v, double c) const {
        const double a = 1.0 - s;
        return {a * v[1] - c * v[2], -a * v[0] + s * v[0] * v[2], -s * v[0] * v[1] + c * v[0]};
    }
};

namespace detail {

inline void renormalize(Vec3& v) {
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    v[0] /= n;
    v[1] /= n;
    v[2] /= n;
}

inline bool finite(const Vec3& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

/// cos(omega t) advanced in half steps by complex rotation, so a run of
/// steps costs no trig calls. Resynchronised at every segment start.
class DrivePhasor {
public:
    DrivePhasor(const Flow& f, double t0, double h)
        : eps0_(f.eps0), c_(std::cos(f.omega * t0)), sn_(std::sin(f.omega * t0)),
          rc_(std::cos(0.5 * f.omega * h)), rs_(std::sin(0.5 * f.omega * h)) {}

    double value() const { return eps0_ * c_; }
    void half_step() {
        double c = c_ * rc_ - sn_ * rs_;
        sn_ = sn_ * rc_ + c_ * rs_;
        c_ = c;
    }

private:
    double eps0_, c_, sn_, rc_, rs_;
};

/// One RK4 step for a group of K states sharing time; c0, ch, c1 are the
/// drive values at t, t + dt/2 and t + dt.
template <std::size_t K>
inline void rk4_step(const Flow& f, std::array<Vec3, K>& xs, double dt, double c0, double ch, double c1,
                     bool normalize = true) {
    for (auto& x : xs) {
        Vec3 k1 = f(x, c0);
        Vec3 y;
        for (int i = 0; i < 3; ++i) y[i] = x[i] + 0.5 * dt * k1[i];
        Vec3 k2 = f(y, ch);
        for (int i = 0; i < 3; ++i) y[i] = x[i] + 0.5 * dt * k2[i];
        Vec3 k3 = f(y, ch);
        for (int i = 0; i < 3; ++i) y[i] = x[i] + dt * k3[i];
        Vec3 k4 = f(y, c1);
        for (int i = 0; i < 3; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (normalize) renormalize(x);
    }
}

template <std::size_t K>
inline void rk4_step(const Flow& f, std::array<Vec3, K>& xs, double t, double dt, bool normalize = true) {
    rk4_step(f, xs, dt, f.drive(t), f.drive(t + 0.5 * dt), f.drive(t + dt), normalize);
}

/// n steps of size h from t0.
template <std::size_t K>
inline void rk4_run(const Flow& f, std::array<Vec3, K>& xs, double t0, double h, long n) {
    if (f.eps0 == 0.0) {
        for (long j = 0; j < n; ++j) rk4_step(f, xs, h, 0.0, 0.0, 0.0);
        return;
    }
    DrivePhasor ph(f, t0, h);
    double c0 = ph.value();
    for (long j = 0; j < n; ++j) {
        ph.half_step();
        double ch = ph.value();
        ph.half_step();
        double c1 = ph.value();
        rk4_step(f, xs, h, c0, ch, c1);
        c0 = c1;
    }
}

/// Integer substep count so that dt_eff = span / n <= dt.
inline long substeps(double span, double dt) {
    return std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
}

} // namespace detail

struct ClassicalTrajectory {
    std::vector<double> times;
    std::vector<BlochState> states;
    ModelParams params;
    double sample_dt = 0.0;
};

/// Fixed-step RK4 with renormalisation to the sphere after every step.
/// sample_dt is split into an integer number of steps no longer than dt.
inline ClassicalTrajectory integrate(const Flow& flow, const BlochState& initial, const ModelParams& params,
                                     double T, double dt, double sample_dt) {
    if (!(dt > 0.0 && dt <= sample_dt && sample_dt <= T))
        throw DomainError("integrate requires 0 < dt <= sample_dt <= T");
    const long n_samples = std::lround(T / sample_dt);
    const long sub = detail::substeps(sample_dt, dt);
    const double h = sample_dt / sub;

    ClassicalTrajectory traj;
    traj.params = params;
    traj.sample_dt = sample_dt;
    traj.times.reserve(n_samples + 1);
    traj.states.reserve(n_samples + 1);

    std::array<Vec3, 1> x{to_vec(initial.normalized())};
    traj.times.push_back(0.0);
    traj.states.push_back(to_bloch(x[0]));
    for (long k = 1; k <= n_samples; ++k) {
        double t0 = (k - 1) * sample_dt;
        detail::rk4_run(flow, x, t0, h, sub);
        if (!detail::finite(x[0])) throw IntegrationDivergedError(k * sample_dt, "classical integration diverged");
        traj.times.push_back(k * sample_dt);
        traj.states.push_back(to_bloch(x[0]));
    }
    return traj;
}

inline ClassicalTrajectory integrate(const BlochState& initial, const ModelParams& params, double T, double dt,
                                     double sample_dt) {
    return integrate(Flow(params), initial, params, T, dt, sample_dt);
}

/// Final state only, without storing samples.
inline BlochState propagate(const Flow& flow, const BlochState& initial, double t0, double T, double dt) {
    std::array<Vec3, 1> x{to_vec(initial.normalized())};
    const long n = detail::substeps(T, dt);
    const double h = T / n;
    detail::rk4_run(flow, x, t0, h, n);
    if (!detail::finite(x[0])) throw IntegrationDivergedError(t0 + T, "classical integration diverged");
    return to_bloch(x[0]);
}

/// Composite Simpson rule on uniform samples; an odd interval count closes
/// with the 3/8 rule on the last three intervals.
inline double simpson(const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    if (n < 3) throw InsufficientDataError("Simpson integration needs at least 3 samples");
    std::size_t intervals = n - 1;
    std::size_t simpson_end = intervals % 2 == 0 ? intervals : intervals - 3;
    double sum = 0.0;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) sum += y[i] + 4.0 * y[i + 1] + y[i + 2];
    sum *= h / 3.0;
    if (simpson_end != intervals) {
        std::size_t i = simpson_end;
        sum += 3.0 * h / 8.0 * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]);
    }
    return sum;
}

/// (1/T) integral of X over the trajectory.
inline double time_average_X(const ClassicalTrajectory& traj) {
    if (traj.states.size() < 3) throw InsufficientDataError("time average needs at least 3 samples");
    std::vector<double> x(traj.states.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = traj.states[i].X;
    double T = traj.times.back() - traj.times.front();
    return simpson(x, traj.sample_dt) / T;
}

// ---------------------------------------------------------------------------
// Lyapunov exponent

struct LyapunovResult {
    double lambda = 0.0;
    double horizon = 0.0;
    double renorm_interval = 0.0;
    double neighbor_offset = 0.0;
    bool converged = false;
};

namespace detail {

/// Unit tangent vector at x along increasing theta (x-axis at the poles).
inline Vec3 tangent_direction(const Vec3& x) {
    double r = std::hypot(x[0], x[1]);
    if (r < 1e-12) return {1.0, 0.0, 0.0};
    double c = x[2];
    Vec3 e{c * x[0] / r, c * x[1] / r, -r};
    renormalize(e);
    return e;
}

} // namespace detail

/// Benettin two-trajectory estimate of the largest exponent. The neighbour is
/// pulled back to distance neighbor_offset every renorm_interval, and the
/// logarithmic stretch factors are summed.
inline LyapunovResult lyapunov_exponent(const BlochState& initial, const ModelParams& params, double horizon,
                                        double renorm_interval = 1.0, double neighbor_offset = 1e-8,
                                        double dt = 1e-3) {
    if (!(renorm_interval > 0.0 && horizon >= 100.0 * renorm_interval))
        throw DomainError("lyapunov_exponent requires horizon >= 100 * renorm_interval");
    if (!(neighbor_offset > 0.0 && neighbor_offset <= 1e-5))
        throw DomainError("lyapunov_exponent requires 0 < neighbor_offset <= 1e-5");

    const Flow flow(params);
    const long n_renorm = std::lround(horizon / renorm_interval);
    const long sub = detail::substeps(renorm_interval, dt);
    const double h = renorm_interval / sub;

    Vec3 x0 = to_vec(initial.normalized());
    Vec3 e = detail::tangent_direction(x0);
    std::array<Vec3, 2> xs{x0, Vec3{x0[0] + neighbor_offset * e[0], x0[1] + neighbor_offset * e[1],
                                    x0[2] + neighbor_offset * e[2]}};
    detail::renormalize(xs[1]);
    auto dist = [&] {
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) d2 += (xs[1][i] - xs[0][i]) * (xs[1][i] - xs[0][i]);
        return std::sqrt(d2);
    };
    const double d0 = dist();

    double log_sum = 0.0;
    const long quarter_start = n_renorm - n_renorm / 4;
    double run_min = 0.0, run_max = 0.0;
    for (long k = 0; k < n_renorm; ++k) {
        double t0 = k * renorm_interval;
        detail::rk4_run(flow, xs, t0, h, sub);
        if (!detail::finite(xs[0]) || !detail::finite(xs[1]))
            throw IntegrationDivergedError(t0 + renorm_interval, "Lyapunov integration diverged");
        double d = dist();
        if (d == 0.0) d = 1e-300;
        log_sum += std::log(d / d0);
        for (int i = 0; i < 3; ++i) xs[1][i] = xs[0][i] + (xs[1][i] - xs[0][i]) * (d0 / d);
        detail::renormalize(xs[1]);

        double running = log_sum / ((k + 1) * renorm_interval);
        if (k == quarter_start) run_min = run_max = running;
        if (k > quarter_start) {
            run_min = std::min(run_min, running);
            run_max = std::max(run_max, running);
        }
    }
    LyapunovResult r;
    r.lambda = log_sum / (n_renorm * renorm_interval);
    r.horizon = n_renorm * renorm_interval;
    r.renorm_interval = renorm_interval;
    r.neighbor_offset = neighbor_offset;
    r.converged = (run_max - run_min) < 0.005;
    return r;
}

// ---------------------------------------------------------------------------
// Stroboscopic sections

struct SectionPoint {
    int ic_id;
    int period_index; // 1-based drive period
    double theta;
    double phi;
};

/// Samples every initial condition at t_k = k 2 pi / omega, k = 1..n_periods.
inline std::vector<SectionPoint> poincare_section(const std::vector<BlochState>& initials, const ModelParams& params,
                                                  int n_periods, double dt = 1e-2, int workers = 1) {
    if (n_periods < 1) throw DomainError("poincare_section requires n_periods >= 1");
    if (!(params.omega > 0.0)) throw DomainError("poincare_section requires omega > 0");
    if (!(params.eps0 >= 0.0)) throw DomainError("poincare_section requires eps0 >= 0");
    const double period = 2.0 * pi / params.omega;
    const Flow flow(params);
    auto per_ic = parallel_map(initials.size(), workers, [&](std::size_t id) {
        std::vector<SectionPoint> pts;
        pts.reserve(n_periods);
        BlochState b = initials[id];
        for (int k = 1; k <= n_periods; ++k) {
            try {
                b = propagate(flow, b, (k - 1) * period, period, dt);
            } catch (const IntegrationDivergedError& e) {
                throw IntegrationDivergedError(e.time(), "Poincare section diverged for initial condition " +
                                                             std::to_string(id));
            }
            pts.push_back({static_cast<int>(id), k, b.theta(), b.phi()});
        }
        return pts;
    });
    std::vector<SectionPoint> out;
    for (auto& v : per_ic) out.insert(out.end(), v.begin(), v.end());
    return out;
}

// ---------------------------------------------------------------------------
// Chaotic fraction

/// Quasi-uniform Fibonacci lattice of n points on the sphere.
inline std::vector<BlochState> fibonacci_sphere(int n) {
    std::vector<BlochState> pts;
    pts.reserve(n);
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double ph = golden * i;
        pts.push_back({r * std::cos(ph), r * std::sin(ph), z});
    }
    return pts;
}

inline double chaotic_fraction(double s, double omega, double eps0, const ChaosDetection& det) {
    if (det.ic_count < 50) throw DomainError("chaotic_fraction requires at least 50 initial conditions");
    ModelParams p;
    p.s = s;
    p.eps0 = eps0;
    p.omega = omega;
    int chaotic = 0;
    for (const auto& ic : fibonacci_sphere(det.ic_count)) {
        try {
            auto r = lyapunov_exponent(ic, p, det.horizon, det.renorm_interval, det.neighbor_offset, det.dt);
            if (r.lambda > det.lambda_chaos) ++chaotic;
        } catch (const IntegrationDivergedError& e) {
            std::fprintf(stderr, "chaotic_fraction: diverged at s=%g omega=%g: %s (counted chaotic)\n", s, omega,
                         e.what());
            ++chaotic;
        }
    }
    return static_cast<double>(chaotic) / det.ic_count;
}

inline ChaosMap chaos_map(const std::vector<double>& s_grid, const std::vector<double>& omega_grid, double eps0,
                          const ChaosDetection& det, int workers = 1) {
    if (!strictly_increasing(s_grid) || !strictly_increasing(omega_grid))
        throw DomainError("chaos_map grids must be strictly increasing");
    ChaosMap m;
    m.s_grid = s_grid;
    m.omega_grid = omega_grid;
    m.detection = det;
    m.eps0 = eps0;
    const std::size_t ns = s_grid.size();
    m.fraction = parallel_map(omega_grid.size() * ns, workers, [&](std::size_t idx) {
        return chaotic_fraction(s_grid[idx % ns], omega_grid[idx / ns], eps0, det);
    });
    return m;
}

} // namespace lmg::classical
