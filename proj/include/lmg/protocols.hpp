#pragma once

// End-to-end experiments: bifurcation curves, threshold crossing estimates of
// the critical point, and sweeps over drive amplitude, threshold and size.

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "lmg/analytic.hpp"
#include "lmg/classical.hpp"
#include "lmg/core.hpp"
#include "lmg/parallel.hpp"
#include "lmg/quantum.hpp"

namespace lmg::protocols {

/// X at a single s for the protocol's initial condition.
inline double protocol_xbar(const ProtocolSpec& spec, const ModelParams& params) {
    params.validate();
    auto [theta0, phi0] = spec.initial_angles(params.N);
    if (spec.regime == Regime::Classical) {
        auto traj = classical::integrate(bloch_from_angles(theta0, phi0), params, spec.T, spec.dt, spec.sample_dt);
        return classical::time_average_X(traj);
    }
    auto h = quantum::build_hamiltonian(params);
    auto psi = quantum::coherent_state(params.J(), theta0, phi0);
    return quantum::time_averaged_magnetization(psi, h, spec.T, spec.sample_dt, spec.dt);
}

/// One time-averaged X per s. A failing s is kept with complete = false so the
/// rest of the sweep survives.
inline BifurcationCurve run_bifurcation(const ProtocolSpec& spec, const ModelParams& params_template,
                                        const std::vector<double>& s_grid, int workers = 1) {
    spec.validate();
    if (s_grid.empty() || !strictly_increasing(s_grid)) throw DomainError("s_grid must be strictly increasing");
    for (double s : s_grid)
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("s_grid values must lie in [0, 1]");

    BifurcationCurve curve;
    curve.spec = spec;
    curve.params = params_template;
    curve.points = parallel_map(s_grid.size(), workers, [&](std::size_t i) {
        try {
            return CurvePoint{s_grid[i], protocol_xbar(spec, params_template.with_s(s_grid[i])), true};
        } catch (const Error& e) {
            std::fprintf(stderr, "run_bifurcation: s=%g failed: %s\n", s_grid[i], e.what());
            return CurvePoint{s_grid[i], std::numeric_limits<double>::quiet_NaN(), false};
        }
    });
    return curve;
}

struct CriticalPointEstimate {
    double s_hat = 0.0;
    double delta = 0.0;
    double threshold = 0.0;
    std::size_t crossing_index = 0; // first sample at or above threshold
    std::string method = "first-crossing";
};

/// Smallest s at which |X| reaches sin(delta / sqrt(2J)), refined by linear
/// interpolation with the preceding sample.
inline CriticalPointEstimate extract_critical_point(const BifurcationCurve& curve, double delta, double J) {
    if (curve.points.empty()) throw DomainError("extract_critical_point requires a non-empty curve");
    if (!(delta > 0.0)) throw DomainError("extract_critical_point requires delta > 0");
    const double thr = xbar_threshold(delta, J);
    const CurvePoint* prev = nullptr;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        if (!p.complete) continue;
        double x = std::abs(p.xbar);
        if (x >= thr) {
            CriticalPointEstimate est;
            est.delta = delta;
            est.threshold = thr;
            est.crossing_index = i;
            if (!prev) {
                est.s_hat = p.s;
            } else {
                double xp = std::abs(prev->xbar);
                est.s_hat = prev->s + (thr - xp) * (p.s - prev->s) / (x - xp);
            }
            return est;
        }
        prev = &p;
    }
    throw NoTransitionError("no sample reaches the threshold " + std::to_string(thr));
}

/// Re-checks the first-crossing postcondition against the curve.
inline bool estimate_consistent(const BifurcationCurve& curve, const CriticalPointEstimate& est) {
    if (est.s_hat < curve.points.front().s || est.s_hat > curve.points.back().s) return false;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        if (!p.complete) continue;
        if (i < est.crossing_index && std::abs(p.xbar) >= est.threshold) return false;
        if (i == est.crossing_index && (std::abs(p.xbar) < est.threshold || p.s < est.s_hat)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSeries {
    std::string label; // e.g. "xbar@s=0.8", "s_hat@eps0=0.05", "s_hat"
    std::vector<double> values;
};

struct SweepResult {
    std::string axis_name;
    std::vector<double> axis;
    std::vector<SweepSeries> series;
    ModelParams params;
    ProtocolSpec spec;
    std::vector<BifurcationCurve> curves; // supporting curves, when any
};

inline std::string format_key(const std::string& name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.17g", name.c_str(), v);
    return buf;
}

inline void check_axis(const std::vector<double>& axis, const char* what) {
    if (axis.empty() || !strictly_increasing(axis)) throw DomainError(std::string(what) + " must be strictly increasing");
}

/// X at each (s, eps0).
inline SweepResult perturbation_sweep(const ProtocolSpec& spec, const std::vector<double>& s_select,
                                      const std::vector<double>& eps0_grid, const ModelParams& params,
                                      int workers = 1) {
    check_axis(eps0_grid, "eps0_grid");
    if (eps0_grid.front() < 0.0) throw DomainError("eps0_grid must start at >= 0");
    SweepResult r;
    r.axis_name = "eps0";
    r.axis = eps0_grid;
    r.params = params;
    r.spec = spec;
    const std::size_t ne = eps0_grid.size();
    auto vals = parallel_map(s_select.size() * ne, workers, [&](std::size_t idx) {
        ModelParams p = params.with_s(s_select[idx / ne]).with_eps0(eps0_grid[idx % ne]);
        try {
            return protocol_xbar(spec, p);
        } catch (const Error& e) {
            std::fprintf(stderr, "perturbation_sweep: s=%g eps0=%g failed: %s\n", p.s, p.eps0, e.what());
            return std::numeric_limits<double>::quiet_NaN();
        }
    });
    for (std::size_t i = 0; i < s_select.size(); ++i)
        r.series.push_back({format_key("xbar@s", s_select[i]),
                            std::vector<double>(vals.begin() + i * ne, vals.begin() + (i + 1) * ne)});
    return r;
}

/// All (eps0, s) cells in one parallel map, returned as one curve per eps0.
inline std::vector<BifurcationCurve> curves_over_eps0(const ProtocolSpec& spec, const std::vector<double>& eps0_grid,
                                                      const ModelParams& params, const std::vector<double>& s_grid,
                                                      int workers) {
    std::vector<BifurcationCurve> curves;
    const std::size_t ns = s_grid.size();
    auto cells = parallel_map(eps0_grid.size() * ns, workers, [&](std::size_t idx) {
        ProtocolSpec sp = spec;
        return run_bifurcation(sp, params.with_eps0(eps0_grid[idx / ns]), {s_grid[idx % ns]}, 1).points.front();
    });
    for (std::size_t e = 0; e < eps0_grid.size(); ++e) {
        BifurcationCurve c;
        c.spec = spec;
        c.params = params.with_eps0(eps0_grid[e]);
        c.points.assign(cells.begin() + e * ns, cells.begin() + (e + 1) * ns);
        curves.push_back(std::move(c));
    }
    return curves;
}

/// s_hat per eps0. A curve without a crossing yields NaN.
inline SweepResult critical_point_vs_perturbation(const ProtocolSpec& spec, const std::vector<double>& eps0_grid,
                                                  const ModelParams& params, const std::vector<double>& s_grid,
                                                  double delta, int workers = 1) {
    check_axis(eps0_grid, "eps0_grid");
    check_axis(s_grid, "s_grid");
    SweepResult r;
    r.axis_name = "eps0";
    r.axis = eps0_grid;
    r.params = params;
    r.spec = spec;
    r.curves = curves_over_eps0(spec, eps0_grid, params, s_grid, workers);
    SweepSeries ser{"s_hat", {}};
    for (const auto& c : r.curves) {
        try {
            ser.values.push_back(extract_critical_point(c, delta, params.J()).s_hat);
        } catch (const NoTransitionError&) {
            ser.values.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    r.series.push_back(std::move(ser));
    return r;
}

/// s_hat over a threshold grid, one series per eps0, plus the spread
/// (max - min over delta) for each series.
struct ThresholdSensitivity {
    SweepResult sweep;
    std::vector<double> spread;
};

inline ThresholdSensitivity threshold_sensitivity(const ProtocolSpec& spec, const std::vector<double>& delta_grid,
                                                  const ModelParams& params, const std::vector<double>& s_grid,
                                                  const std::vector<double>& eps0_list, int workers = 1) {
    check_axis(delta_grid, "delta_grid");
    if (delta_grid.front() <= 0.0) throw DomainError("delta_grid values must be > 0");
    check_axis(s_grid, "s_grid");
    ThresholdSensitivity out;
    SweepResult& r = out.sweep;
    r.axis_name = "delta";
    r.axis = delta_grid;
    r.params = params;
    r.spec = spec;
    r.curves = curves_over_eps0(spec, eps0_list, params, s_grid, workers);
    for (std::size_t e = 0; e < eps0_list.size(); ++e) {
        SweepSeries ser{format_key("s_hat@eps0", eps0_list[e]), {}};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double d : delta_grid) {
            double v = std::numeric_limits<double>::quiet_NaN();
            try {
                v = extract_critical_point(r.curves[e], d, params.J()).s_hat;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            } catch (const NoTransitionError&) {
            }
            ser.values.push_back(v);
        }
        out.spread.push_back(hi >= lo ? hi - lo : std::numeric_limits<double>::quiet_NaN());
        r.series.push_back(std::move(ser));
    }
    return out;
}

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
    std::size_t points_used = 0;
};

/// Least-squares line through (log N, log(s_hat - 1/2)); s_hat <= 1/2 is
/// skipped with a warning.
inline PowerLawFit fit_scaling_exponent(const std::vector<double>& N, const std::vector<double>& s_hat) {
    if (N.size() != s_hat.size()) throw DomainError("fit_scaling_exponent: size mismatch");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < N.size(); ++i) {
        if (!(s_hat[i] > 0.5)) {
            std::fprintf(stderr, "finite-size fit: excluding N=%g with s_hat=%g <= 1/2\n", N[i], s_hat[i]);
            continue;
        }
        x.push_back(std::log(N[i]));
        y.push_back(std::log(s_hat[i] - 0.5));
    }
    if (x.size() < 3) throw InsufficientDataError("finite-size fit needs at least 3 usable points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    PowerLawFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / n);
    f.points_used = x.size();
    return f;
}

struct ScalingStudy {
    SweepResult sweep; // axis N, series "s_hat"
    PowerLawFit fit;
};

/// Quantum ground-state protocol at each N, then the power-law fit.
inline ScalingStudy finite_size_scaling_study(const std::vector<int>& N_list, const ProtocolSpec& spec,
                                              const ModelParams& params, const std::vector<double>& s_grid,
                                              double delta, int workers = 1) {
    if (N_list.size() < 3) throw InsufficientDataError("finite-size scaling needs at least 3 system sizes");
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        if (N_list[i] < 2 || N_list[i] % 2 != 0) throw DomainError("system sizes must be even and >= 2");
        if (i > 0 && N_list[i] <= N_list[i - 1]) throw DomainError("system sizes must be increasing");
    }
    check_axis(s_grid, "s_grid");
    ProtocolSpec sp = spec;
    sp.kind = ProtocolKind::GSQPT;
    sp.regime = Regime::Quantum;

    const std::size_t ns = s_grid.size();
    auto cells = parallel_map(N_list.size() * ns, workers, [&](std::size_t idx) {
        ModelParams p = params;
        p.N = N_list[idx / ns];
        return run_bifurcation(sp, p, {s_grid[idx % ns]}, 1).points.front();
    });

    ScalingStudy st;
    st.sweep.axis_name = "N";
    st.sweep.params = params;
    st.sweep.spec = sp;
    SweepSeries ser{"s_hat", {}};
    std::vector<double> Ns;
    for (std::size_t k = 0; k < N_list.size(); ++k) {
        BifurcationCurve c;
        c.spec = sp;
        c.params = params;
        c.params.N = N_list[k];
        c.points.assign(cells.begin() + k * ns, cells.begin() + (k + 1) * ns);
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = extract_critical_point(c, delta, 0.5 * N_list[k]).s_hat;
        } catch (const NoTransitionError&) {
        }
        st.sweep.axis.push_back(N_list[k]);
        Ns.push_back(N_list[k]);
        ser.values.push_back(v);
        st.sweep.curves.push_back(std::move(c));
    }
    st.sweep.series.push_back(ser);
    st.fit = fit_scaling_exponent(Ns, ser.values);
    return st;
}

} // namespace lmg::protocols
