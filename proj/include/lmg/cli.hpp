#pragma once

// Command-line runner: JSON run configurations are resolved against defaults
// and validated before any computation, each command emits CSV tables, and a
// manifest.json records the resolved config, timings and content hashes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lmg/analytic.hpp"
#include "lmg/classical.hpp"
#include "lmg/core.hpp"
#include "lmg/io.hpp"
#include "lmg/parallel.hpp"
#include "lmg/protocols.hpp"
#include "lmg/quantum.hpp"

namespace lmg::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

enum ExitCode { exit_ok = 0, exit_validation = 1, exit_compute = 2, exit_io = 3 };

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"bifurcation", "heatmap", "lyapunov", "poincare",
                                            "sweep",       "scaling", "spectrum"};
    return c;
}

// ---------------------------------------------------------------------------
// Config resolution

/// Reads one JSON object section, filling defaults and rejecting unknown keys.
/// Everything read is mirrored into `resolved`.
class Section {
public:
    Section(const json& src, std::string name) : name_(std::move(name)) {
        if (src.is_null()) {
            src_ = json::object();
        } else if (!src.is_object()) {
            throw ValidationError(name_ + ": expected an object");
        } else {
            src_ = src;
        }
    }

    template <class T>
    T get(const std::string& key, const T& def) {
        used_.insert(key);
        T v = def;
        if (src_.contains(key)) {
            try {
                v = src_.at(key).get<T>();
            } catch (const json::exception&) {
                throw ValidationError(name_ + "." + key + ": wrong type");
            }
        }
        resolved_[key] = v;
        return v;
    }

    /// Grid given as an array or {start, stop, step|count}.
    std::vector<double> grid(const std::string& key, json def) {
        used_.insert(key);
        json g = src_.contains(key) ? src_.at(key) : def;
        std::vector<double> out;
        std::string where = name_ + "." + key;
        try {
            if (g.is_array()) {
                out = g.get<std::vector<double>>();
            } else if (g.is_object()) {
                for (auto& [k, _] : g.items())
                    if (k != "start" && k != "stop" && k != "step" && k != "count")
                        throw ValidationError(where + ": unknown grid key '" + k + "'");
                double a = g.at("start").get<double>(), b = g.at("stop").get<double>();
                if (g.contains("count") == g.contains("step"))
                    throw ValidationError(where + ": give exactly one of step or count");
                long n;
                if (g.contains("count")) {
                    n = g.at("count").get<long>();
                    if (n < 1) throw ValidationError(where + ": count must be >= 1");
                } else {
                    double st = g.at("step").get<double>();
                    if (!(st > 0.0)) throw ValidationError(where + ": step must be > 0");
                    n = std::lround(std::floor((b - a) / st + 1e-9)) + 1;
                }
                for (long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
            } else {
                throw ValidationError(where + ": expected an array or {start, stop, step|count}");
            }
        } catch (const json::exception&) {
            throw ValidationError(where + ": malformed grid");
        }
        if (out.empty()) throw ValidationError(where + ": empty grid");
        if (!strictly_increasing(out)) throw ValidationError(where + ": grid must be strictly increasing");
        resolved_[key] = out;
        return out;
    }

    json sub(const std::string& key) {
        used_.insert(key);
        return src_.contains(key) ? src_.at(key) : json();
    }
    void put(const std::string& key, json v) { resolved_[key] = std::move(v); }

    /// Throws on keys that were never read.
    json finish() {
        for (auto& [k, _] : src_.items())
            if (!used_.count(k)) throw ValidationError(name_ + ": unknown key '" + k + "'");
        return resolved_;
    }

private:
    json src_;
    std::string name_;
    json resolved_ = json::object();
    std::set<std::string> used_;
};

inline ProtocolKind parse_kind(const std::string& s) {
    if (s == "gsqpt") return ProtocolKind::GSQPT;
    if (s == "dqpt") return ProtocolKind::DQPT;
    if (s == "custom") return ProtocolKind::Custom;
    throw ValidationError("protocol.kind must be gsqpt, dqpt or custom, got '" + s + "'");
}

inline Regime parse_regime(const std::string& s) {
    if (s == "classical") return Regime::Classical;
    if (s == "quantum") return Regime::Quantum;
    throw ValidationError("protocol.regime must be classical or quantum, got '" + s + "'");
}

inline ModelParams read_model(Section& root, double default_s = 0.5) {
    Section m(root.sub("model"), "model");
    ModelParams p;
    p.s = m.get<double>("s", default_s);
    p.N = m.get<int>("N", 200);
    p.eps0 = m.get<double>("eps0", 0.0);
    p.omega = m.get<double>("omega", 1.0);
    root.put("model", m.finish());
    try {
        p.validate();
    } catch (const DomainError& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    return p;
}

inline ProtocolSpec read_protocol(Section& root, const std::string& default_kind = "dqpt",
                                  const std::string& default_regime = "classical") {
    Section s(root.sub("protocol"), "protocol");
    ProtocolSpec spec;
    spec.kind = parse_kind(s.get<std::string>("kind", default_kind));
    spec.regime = parse_regime(s.get<std::string>("regime", default_regime));
    const bool q = spec.regime == Regime::Quantum;
    spec.T = s.get<double>("T", q ? 200.0 : 1000.0);
    spec.dt = s.get<double>("dt", 1e-3);
    spec.sample_dt = s.get<double>("sample_dt", q ? 0.1 : 0.01);
    spec.delta = s.get<double>("delta", 1.0);
    if (spec.kind == ProtocolKind::Custom) {
        spec.theta0 = s.get<double>("theta0", pi / 2);
        spec.phi0 = s.get<double>("phi0", 0.0);
    }
    root.put("protocol", s.finish());
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw ValidationError(std::string("protocol: ") + e.what());
    }
    if (q && spec.T < 100.0 * spec.sample_dt) throw ValidationError("protocol: quantum runs need T >= 100 * sample_dt");
    return spec;
}

/// Driven runs need omega > 0; classical ones also dt <= min(0.01, 0.1 * 2 pi / omega).
inline void check_classical_step(const ProtocolSpec& spec, const ModelParams& model, double max_eps0) {
    if (!(max_eps0 > 0.0)) return;
    if (!(model.omega > 0.0)) throw ValidationError("model.omega must be > 0 for driven runs");
    if (spec.regime != Regime::Classical) return;
    if (spec.dt > std::min(0.01, 0.1 * 2.0 * pi / model.omega))
        throw ValidationError("protocol.dt must be <= min(0.01, 0.1 * 2 pi / omega) for driven classical runs");
}

inline void require_unit_interval(const std::vector<double>& g, const std::string& what) {
    for (double v : g)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(what + ": values must lie in [0, 1]");
}

inline void require_positive(const std::vector<double>& g, const std::string& what) {
    for (double v : g)
        if (!(v > 0.0)) throw ValidationError(what + ": values must be > 0");
}

// ---------------------------------------------------------------------------
// Commands

struct OutputFile {
    std::string name;
    io::Table table;
};

struct CommandOutput {
    std::vector<OutputFile> files;
    json completeness = json::object();
    json results = json::object();
};

struct Prepared {
    json resolved;
    std::function<CommandOutput(int workers)> run;
};

inline io::Table curve_table(const BifurcationCurve& c) {
    io::Table t{{"s", "xbar", "completeness"}, {}};
    for (const auto& p : c.points) t.add({p.s, p.xbar, static_cast<long>(p.complete ? 1 : 0)});
    return t;
}

inline io::Table sweep_table(const protocols::SweepResult& r) {
    io::Table t{{"axis_value", "s_or_xbar", "value"}, {}};
    for (const auto& ser : r.series)
        for (std::size_t i = 0; i < r.axis.size(); ++i) t.add({r.axis[i], ser.label, ser.values[i]});
    return t;
}

inline json curve_completeness(const BifurcationCurve& c) {
    std::vector<int> mask;
    for (const auto& p : c.points) mask.push_back(p.complete ? 1 : 0);
    return {{"partial", c.partial()}, {"mask", mask}};
}

inline Prepared prepare_bifurcation(Section& root) {
    ModelParams model = read_model(root);
    ProtocolSpec spec = read_protocol(root);
    auto s_grid = root.grid("s_grid", {{"start", 0.3}, {"stop", 1.0}, {"step", 0.01}});
    require_unit_interval(s_grid, "s_grid");
    check_classical_step(spec, model, model.eps0);
    return {json(), [=](int workers) {
                CommandOutput out;
                auto curve = protocols::run_bifurcation(spec, model, s_grid, workers);
                out.files.push_back({"bifurcation.csv", curve_table(curve)});
                out.completeness["bifurcation"] = curve_completeness(curve);
                try {
                    auto est = protocols::extract_critical_point(curve, spec.delta, model.J());
                    out.results["s_hat"] = est.s_hat;
                    out.results["threshold"] = est.threshold;
                } catch (const NoTransitionError&) {
                    out.results["s_hat"] = nullptr;
                }
                return out;
            }};
}

inline ChaosDetection read_detection(Section& root, int default_ics = 200) {
    Section d(root.sub("detection"), "detection");
    ChaosDetection det;
    det.lambda_chaos = d.get<double>("lambda_chaos", det.lambda_chaos);
    det.horizon = d.get<double>("horizon", det.horizon);
    det.renorm_interval = d.get<double>("renorm_interval", det.renorm_interval);
    det.neighbor_offset = d.get<double>("neighbor_offset", det.neighbor_offset);
    det.dt = d.get<double>("dt", det.dt);
    det.ic_count = d.get<int>("ic_count", default_ics);
    root.put("detection", d.finish());
    if (det.ic_count < 50) throw ValidationError("detection.ic_count must be >= 50");
    if (!(det.renorm_interval > 0.0 && det.horizon >= 100.0 * det.renorm_interval))
        throw ValidationError("detection: horizon must be >= 100 * renorm_interval");
    if (!(det.neighbor_offset > 0.0 && det.neighbor_offset <= 1e-5))
        throw ValidationError("detection.neighbor_offset must lie in (0, 1e-5]");
    if (!(det.dt > 0.0 && det.dt <= det.renorm_interval)) throw ValidationError("detection.dt must lie in (0, renorm_interval]");
    return det;
}

inline Prepared prepare_heatmap(Section& root) {
    double eps0 = root.get<double>("eps0", 0.05);
    if (!(eps0 >= 0.0)) throw ValidationError("eps0 must be >= 0");
    auto s_grid = root.grid("s_grid", {{"start", 0.05}, {"stop", 0.95}, {"count", 10}});
    auto omega_grid = root.grid("omega_grid", {{"start", 0.1}, {"stop", 2.0}, {"count", 10}});
    require_unit_interval(s_grid, "s_grid");
    require_positive(omega_grid, "omega_grid");
    ChaosDetection det = read_detection(root);
    for (double w : omega_grid)
        if (eps0 > 0.0 && det.dt > 0.1 * 2.0 * pi / w)
            throw ValidationError("detection.dt must be <= 0.1 * 2 pi / omega for every omega");
    return {json(), [=](int workers) {
                CommandOutput out;
                auto map = classical::chaos_map(s_grid, omega_grid, eps0, det, workers);
                io::Table t{{"omega", "s", "fraction"}, {}};
                for (std::size_t iw = 0; iw < omega_grid.size(); ++iw)
                    for (std::size_t is = 0; is < s_grid.size(); ++is) t.add({omega_grid[iw], s_grid[is], map.at(iw, is)});
                out.files.push_back({"heatmap.csv", std::move(t)});
                out.completeness["heatmap"] = {{"cells", map.fraction.size()}, {"partial", false}};
                return out;
            }};
}

inline Prepared prepare_lyapunov(Section& root) {
    ModelParams model = read_model(root);
    ProtocolSpec spec = read_protocol(root, "gsqpt", "classical");
    auto s_grid = root.grid("s_grid", {{"start", 0.3}, {"stop", 0.95}, {"step", 0.05}});
    require_unit_interval(s_grid, "s_grid");
    Section l(root.sub("lyapunov"), "lyapunov");
    double horizon = l.get<double>("horizon", 2000.0);
    double renorm = l.get<double>("renorm_interval", 1.0);
    double offset = l.get<double>("neighbor_offset", 1e-8);
    double dt = l.get<double>("dt", 1e-2);
    root.put("lyapunov", l.finish());
    if (!(renorm > 0.0 && horizon >= 100.0 * renorm)) throw ValidationError("lyapunov: horizon must be >= 100 * renorm_interval");
    if (!(offset > 0.0 && offset <= 1e-5)) throw ValidationError("lyapunov.neighbor_offset must lie in (0, 1e-5]");
    if (!(dt > 0.0 && dt <= renorm)) throw ValidationError("lyapunov.dt must lie in (0, renorm_interval]");
    return {json(), [=](int workers) {
                CommandOutput out;
                auto [th, ph] = spec.initial_angles(model.N);
                auto ic = bloch_from_angles(th, ph);
                auto res = parallel_map(s_grid.size(), workers, [&](std::size_t i) {
                    return classical::lyapunov_exponent(ic, model.with_s(s_grid[i]), horizon, renorm, offset, dt);
                });
                io::Table t{{"s", "lambda", "converged"}, {}};
                for (std::size_t i = 0; i < s_grid.size(); ++i)
                    t.add({s_grid[i], res[i].lambda, static_cast<long>(res[i].converged ? 1 : 0)});
                out.files.push_back({"lyapunov.csv", std::move(t)});
                out.completeness["lyapunov"] = {{"cells", s_grid.size()}, {"partial", false}};
                return out;
            }};
}

inline Prepared prepare_poincare(Section& root) {
    ModelParams model = read_model(root, 0.8);
    if (!(model.omega > 0.0)) throw ValidationError("model.omega must be > 0");
    int n_periods = root.get<int>("n_periods", 200);
    if (n_periods < 1) throw ValidationError("n_periods must be >= 1");
    double dt = root.get<double>("dt", 1e-2);
    if (!(dt > 0.0 && dt <= 0.1 * 2.0 * pi / model.omega)) throw ValidationError("dt must lie in (0, 0.1 * 2 pi / omega]");
    std::vector<BlochState> ics;
    json resolved_ics = json::array();
    json src = root.sub("initials");
    if (src.is_null()) src = json::array({"gsqpt", "dqpt"});
    if (!src.is_array() || src.empty()) throw ValidationError("initials must be a non-empty array");
    for (const auto& e : src) {
        if (e.is_string()) {
            ProtocolSpec sp;
            sp.kind = parse_kind(e.get<std::string>());
            if (sp.kind == ProtocolKind::Custom) throw ValidationError("initials: use {theta, phi} for custom points");
            auto [th, ph] = sp.initial_angles(model.N);
            ics.push_back(bloch_from_angles(th, ph));
            resolved_ics.push_back(e);
        } else if (e.is_object() && e.contains("theta") && e.contains("phi") && e.size() == 2) {
            double th = 0, ph = 0;
            try {
                th = e.at("theta").get<double>();
                ph = e.at("phi").get<double>();
            } catch (const json::exception&) {
                throw ValidationError("initials: theta and phi must be numbers");
            }
            if (!(th >= 0.0 && th <= pi)) throw ValidationError("initials: theta must lie in [0, pi]");
            ics.push_back(bloch_from_angles(th, ph));
            resolved_ics.push_back(e);
        } else {
            throw ValidationError("initials entries must be \"gsqpt\", \"dqpt\" or {theta, phi}");
        }
    }
    root.put("initials", resolved_ics);
    return {json(), [=](int workers) {
                CommandOutput out;
                auto pts = classical::poincare_section(ics, model, n_periods, dt, workers);
                io::Table t{{"ic_id", "period_index", "theta", "phi"}, {}};
                for (const auto& p : pts)
                    t.add({static_cast<long>(p.ic_id), static_cast<long>(p.period_index), p.theta, p.phi});
                out.files.push_back({"poincare.csv", std::move(t)});
                out.completeness["poincare"] = {{"initial_conditions", ics.size()}, {"partial", false}};
                return out;
            }};
}

inline Prepared prepare_sweep(Section& root) {
    std::string mode = root.get<std::string>("mode", "perturbation");
    ModelParams model = read_model(root);
    ProtocolSpec spec = read_protocol(root, "dqpt", "quantum");
    if (mode == "perturbation") {
        auto s_select = root.grid("s_select", json::array({0.8, 0.95}));
        require_unit_interval(s_select, "s_select");
        auto eps0_grid = root.grid("eps0_grid", {{"start", 0.0}, {"stop", 0.05}, {"count", 5}});
        if (eps0_grid.front() < 0.0) throw ValidationError("eps0_grid must start at >= 0");
        check_classical_step(spec, model, eps0_grid.back());
        return {json(), [=](int workers) {
                    CommandOutput out;
                    auto r = protocols::perturbation_sweep(spec, s_select, eps0_grid, model, workers);
                    out.files.push_back({"sweep.csv", sweep_table(r)});
                    out.completeness["sweep"] = {{"cells", s_select.size() * eps0_grid.size()}};
                    return out;
                }};
    }
    auto s_grid = root.grid("s_grid", {{"start", 0.4}, {"stop", 0.8}, {"step", 0.01}});
    require_unit_interval(s_grid, "s_grid");
    if (mode == "critical_point") {
        auto eps0_grid = root.grid("eps0_grid", {{"start", 0.0}, {"stop", 0.05}, {"count", 5}});
        if (eps0_grid.front() < 0.0) throw ValidationError("eps0_grid must start at >= 0");
        check_classical_step(spec, model, eps0_grid.back());
        return {json(), [=](int workers) {
                    CommandOutput out;
                    auto r = protocols::critical_point_vs_perturbation(spec, eps0_grid, model, s_grid, spec.delta, workers);
                    out.files.push_back({"sweep.csv", sweep_table(r)});
                    json masks = json::array();
                    for (const auto& c : r.curves) masks.push_back(curve_completeness(c));
                    out.completeness["curves"] = masks;
                    return out;
                }};
    }
    if (mode == "threshold") {
        auto delta_grid = root.grid("delta_grid", {{"start", 0.5}, {"stop", 3.0}, {"count", 11}});
        require_positive(delta_grid, "delta_grid");
        auto eps0_list = root.grid("eps0_list", json::array({0.0, 0.05}));
        if (eps0_list.front() < 0.0) throw ValidationError("eps0_list must start at >= 0");
        check_classical_step(spec, model, eps0_list.back());
        return {json(), [=](int workers) {
                    CommandOutput out;
                    auto r = protocols::threshold_sensitivity(spec, delta_grid, model, s_grid, eps0_list, workers);
                    out.files.push_back({"sweep.csv", sweep_table(r.sweep)});
                    out.results["spread"] = r.spread;
                    json masks = json::array();
                    for (const auto& c : r.sweep.curves) masks.push_back(curve_completeness(c));
                    out.completeness["curves"] = masks;
                    return out;
                }};
    }
    throw ValidationError("mode must be perturbation, critical_point or threshold, got '" + mode + "'");
}

inline Prepared prepare_scaling(Section& root) {
    auto N_list = root.get<std::vector<int>>("N_list", {50, 100, 200, 400});
    if (N_list.size() < 3) throw ValidationError("N_list needs at least 3 sizes");
    for (std::size_t i = 0; i < N_list.size(); ++i)
        if (N_list[i] < 2 || N_list[i] % 2 || (i && N_list[i] <= N_list[i - 1]))
            throw ValidationError("N_list must be increasing even integers >= 2");
    ModelParams model = read_model(root);
    ProtocolSpec spec = read_protocol(root, "gsqpt", "quantum");
    if (spec.kind != ProtocolKind::GSQPT || spec.regime != Regime::Quantum)
        throw ValidationError("scaling runs the quantum gsqpt protocol");
    auto s_grid = root.grid("s_grid", {{"start", 0.4}, {"stop", 0.8}, {"step", 0.005}});
    require_unit_interval(s_grid, "s_grid");
    return {json(), [=](int workers) {
                CommandOutput out;
                auto st = protocols::finite_size_scaling_study(N_list, spec, model, s_grid, spec.delta, workers);
                out.files.push_back({"scaling.csv", sweep_table(st.sweep)});
                out.results["slope"] = st.fit.slope;
                out.results["intercept"] = st.fit.intercept;
                out.results["rms_residual"] = st.fit.rms_residual;
                out.results["points_used"] = st.fit.points_used;
                json masks = json::array();
                for (const auto& c : st.sweep.curves) masks.push_back(curve_completeness(c));
                out.completeness["curves"] = masks;
                return out;
            }};
}

inline Prepared prepare_spectrum(Section& root) {
    int N = root.get<int>("N", 20);
    if (N < 2 || N % 2) throw ValidationError("N must be an even integer >= 2");
    auto s_grid = root.grid("s_grid", {{"start", 0.0}, {"stop", 1.0}, {"step", 0.01}});
    require_unit_interval(s_grid, "s_grid");
    return {json(), [=](int workers) {
                CommandOutput out;
                auto eigs = parallel_map(s_grid.size(), workers, [&](std::size_t i) {
                    ModelParams p;
                    p.N = N;
                    p.s = s_grid[i];
                    return quantum::eigendecompose(quantum::build_hamiltonian(p));
                });
                io::Table t{{"s", "level_index", "energy", "parity"}, {}};
                for (std::size_t i = 0; i < s_grid.size(); ++i)
                    for (int n = 0; n < eigs[i].energies.size(); ++n)
                        t.add({s_grid[i], static_cast<long>(n), eigs[i].energies(n), static_cast<long>(eigs[i].parity[n])});
                out.files.push_back({"spectrum.csv", std::move(t)});
                out.completeness["spectrum"] = {{"cells", s_grid.size()}, {"partial", false}};
                return out;
            }};
}

/// Resolves and validates a config for `command`; throws ValidationError.
inline Prepared prepare(const std::string& command, const json& config) {
    if (!config.is_object()) throw ValidationError("config must be a JSON object");
    Section root(config, "config");
    std::string cmd = root.get<std::string>("command", command);
    if (cmd != command) throw ValidationError("config command '" + cmd + "' does not match '" + command + "'");
    Prepared p;
    try {
        if (command == "bifurcation") p = prepare_bifurcation(root);
        else if (command == "heatmap") p = prepare_heatmap(root);
        else if (command == "lyapunov") p = prepare_lyapunov(root);
        else if (command == "poincare") p = prepare_poincare(root);
        else if (command == "sweep") p = prepare_sweep(root);
        else if (command == "scaling") p = prepare_scaling(root);
        else if (command == "spectrum") p = prepare_spectrum(root);
        else throw ValidationError("unknown command '" + command + "'");
    } catch (const DomainError& e) {
        throw ValidationError(e.what());
    }
    p.resolved = root.finish();
    return p;
}

// ---------------------------------------------------------------------------
// Runs

enum class Overwrite { Deny, Replace };

struct RunOptions {
    std::string command;
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    int workers = 1;
    Overwrite overwrite = Overwrite::Deny;
};

/// True when every file listed in the manifest exists and matches its hash.
inline bool verify_manifest(const std::filesystem::path& dir) {
    json m = json::parse(io::read_file(dir / "manifest.json"));
    for (const auto& f : m.at("files")) {
        auto path = dir / f.at("name").get<std::string>();
        if (!std::filesystem::exists(path)) return false;
        if (io::sha256_hex(io::read_file(path)) != f.at("sha256").get<std::string>()) return false;
    }
    return true;
}

/// Full run; returns the process exit code and reports to `err`.
inline int run(const RunOptions& opt, std::ostream& err = std::cerr) {
    namespace fs = std::filesystem;
    json config;
    try {
        config = json::parse(io::read_file(opt.config_path));
    } catch (const io::IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const json::parse_error& e) {
        err << "error: config is not valid JSON: " << e.what() << "\n";
        return exit_validation;
    }

    Prepared prep;
    try {
        if (opt.workers < 1) throw ValidationError("--workers must be >= 1");
        prep = prepare(opt.command, config);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return exit_validation;
    }

    std::error_code ec;
    if (fs::exists(opt.out_dir / "manifest.json", ec) && opt.overwrite == Overwrite::Deny) {
        try {
            json old = json::parse(io::read_file(opt.out_dir / "manifest.json"));
            if (old.value("command", "") == opt.command && old.at("config") == prep.resolved)
                err << "refusing to overwrite " << opt.out_dir.string()
                    << ": existing manifest matches this config (results already present); use --overwrite replace\n";
            else
                err << "refusing to overwrite " << opt.out_dir.string()
                    << ": it holds results of a different run; use --overwrite replace\n";
        } catch (...) {
            err << "refusing to overwrite " << opt.out_dir.string() << "; use --overwrite replace\n";
        }
        return exit_validation;
    }

    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    CommandOutput out;
    try {
        out = prep.run(opt.workers);
    } catch (const std::exception& e) {
        err << "compute failure: " << e.what() << "\n";
        return exit_compute;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try {
        fs::create_directories(opt.out_dir, ec);
        if (ec) throw io::IoError("cannot create " + opt.out_dir.string() + ": " + ec.message());
        json files = json::array();
        for (const auto& f : out.files) {
            std::string text = f.table.to_csv();
            io::write_file(opt.out_dir / f.name, text);
            files.push_back({{"name", f.name}, {"sha256", io::sha256_hex(text)}, {"bytes", text.size()}});
        }
        json manifest = {{"tool", "lmg"},
                         {"version", tool_version},
                         {"command", opt.command},
                         {"config", prep.resolved},
                         {"started", io::iso8601(started)},
                         {"finished", io::iso8601(std::chrono::system_clock::now())},
                         {"wall_seconds", wall},
                         {"workers", opt.workers},
                         {"completeness", out.completeness},
                         {"results", out.results},
                         {"files", files}};
        io::write_file(opt.out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const io::IoError& e) {
        err << "io error: " << e.what() << "\n";
        return exit_io;
    }
    return exit_ok;
}

} // namespace lmg::cli
