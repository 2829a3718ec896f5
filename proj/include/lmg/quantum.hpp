#pragma once

// Exact finite-N dynamics in the symmetric Dicke sector |J, m>, m = -J..J
// ascending. Operators are stored densely; propagation applies them through
// their five non-zero diagonals.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmg/classical.hpp"
#include "lmg/core.hpp"

namespace lmg::quantum {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr int default_dimension_cap = 4097;

struct CollectiveOperators {
    double J = 0.5;
    MatrixXd jx;
    MatrixXcd jy;
    MatrixXd jz;
    MatrixXd jx2;

    int dim() const { return static_cast<int>(jz.rows()); }
};

/// Ladder element <m+1| J+ |m> for the k-th basis state (m = k - J).
inline double ladder(double J, int k) {
    double m = k - J;
    return std::sqrt(std::max(0.0, J * (J + 1.0) - m * (m + 1.0)));
}

inline CollectiveOperators build_operators(double J, int cap = default_dimension_cap) {
    double twoJ = 2.0 * J;
    if (!(twoJ >= 1.0) || std::abs(twoJ - std::round(twoJ)) > 1e-12)
        throw DomainError("build_operators requires 2J to be a positive integer");
    const int d = static_cast<int>(std::lround(twoJ)) + 1;
    if (d > cap)
        throw CapacityError("dimension " + std::to_string(d) + " exceeds dense cap " + std::to_string(cap));

    CollectiveOperators ops;
    ops.J = J;
    ops.jx = MatrixXd::Zero(d, d);
    ops.jy = MatrixXcd::Zero(d, d);
    ops.jz = MatrixXd::Zero(d, d);
    for (int k = 0; k < d; ++k) ops.jz(k, k) = k - J;
    for (int k = 0; k + 1 < d; ++k) {
        double b = ladder(J, k);
        ops.jx(k + 1, k) = ops.jx(k, k + 1) = 0.5 * b;
        // Jy = (J+ - J-) / 2i
        ops.jy(k + 1, k) = cplx(0.0, -0.5 * b);
        ops.jy(k, k + 1) = cplx(0.0, 0.5 * b);
    }
    ops.jx2 = ops.jx * ops.jx;
    return ops;
}

/// max |[jx, jy] - i jz|.
inline double commutator_residual(const CollectiveOperators& ops) {
    MatrixXcd jx = ops.jx.cast<cplx>();
    MatrixXcd c = jx * ops.jy - ops.jy * jx - cplx(0.0, 1.0) * ops.jz.cast<cplx>();
    return c.cwiseAbs().maxCoeff();
}

/// Operator with non-zero entries only on diagonals -2..2.
struct BandedOperator {
    int dim = 0;
    std::array<VectorXcd, 5> band; // band[o + 2](k) = A(k, k + o)

    static BandedOperator from_dense(const MatrixXcd& a) {
        BandedOperator b;
        b.dim = static_cast<int>(a.rows());
        for (int o = -2; o <= 2; ++o) {
            VectorXcd v = VectorXcd::Zero(b.dim);
            for (int k = 0; k < b.dim; ++k)
                if (k + o >= 0 && k + o < b.dim) v(k) = a(k, k + o);
            b.band[o + 2] = v;
        }
        return b;
    }

    /// out = A x.
    void apply(const VectorXcd& x, VectorXcd& out) const {
        const int d = dim;
        out = band[2].cwiseProduct(x);
        for (int o = 1; o <= 2 && o < d; ++o) {
            out.head(d - o) += band[o + 2].head(d - o).cwiseProduct(x.tail(d - o));
            out.tail(d - o) += band[2 - o].tail(d - o).cwiseProduct(x.head(d - o));
        }
    }

    /// this + g * other, elementwise on the bands.
    void combine(const BandedOperator& a, double g, const BandedOperator& other) {
        dim = a.dim;
        for (int i = 0; i < 5; ++i) band[i] = a.band[i] + g * other.band[i];
    }
};

/// H0 = -(1-s) Jz - (s/N) Jx^2 together with the drive operator -Jy, whose
/// runtime coefficient is eps0 cos(omega t).
struct Hamiltonian {
    ModelParams params;
    CollectiveOperators ops;
    MatrixXd h0;
    MatrixXcd drive;
    BandedOperator h0_band;
    BandedOperator drive_band;
    BandedOperator jx_band;

    double J() const { return ops.J; }
    int dim() const { return ops.dim(); }

    /// Upper bound (1-s)J + sJ/2 + eps0 J on the spectral radius of H(t).
    double norm_bound() const {
        double J = ops.J;
        return (1.0 - params.s) * J + 0.5 * params.s * J + params.eps0 * J;
    }
};

inline Hamiltonian build_hamiltonian(const ModelParams& p, int cap = default_dimension_cap) {
    p.validate();
    Hamiltonian h;
    h.params = p;
    h.ops = build_operators(p.J(), cap);
    h.h0 = -(1.0 - p.s) * h.ops.jz - (p.s / p.N) * h.ops.jx2;
    h.drive = -h.ops.jy;
    h.h0_band = BandedOperator::from_dense(h.h0.cast<cplx>());
    h.drive_band = BandedOperator::from_dense(h.drive);
    h.jx_band = BandedOperator::from_dense(h.ops.jx.cast<cplx>());
    return h;
}

/// Parity exp(i pi Jz) up to a global phase: (-1)^(J - m) on |J, m>.
inline int basis_parity(int dim, int k) { return ((dim - 1 - k) % 2 == 0) ? 1 : -1; }

// ---------------------------------------------------------------------------
// States

inline DickeState coherent_state(double J, double theta, double phi) {
    if (!(theta >= 0.0 && theta <= pi)) throw DomainError("coherent_state requires theta in [0, pi]");
    const int d = static_cast<int>(std::lround(2.0 * J)) + 1;
    const int twoJ = d - 1;
    const double c = std::cos(0.5 * theta);
    const double sn = std::sin(0.5 * theta);
    DickeState st;
    st.amplitudes = VectorXcd::Zero(d);
    for (int k = 0; k < d; ++k) {
        int up = k;          // J + m
        int down = twoJ - k; // J - m
        if ((c == 0.0 && up > 0) || (sn == 0.0 && down > 0)) continue;
        double lbin = std::lgamma(twoJ + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
        double lmag = 0.5 * lbin + (up > 0 ? up * std::log(c) : 0.0) + (down > 0 ? down * std::log(sn) : 0.0);
        st.amplitudes(k) = std::exp(lmag) * std::polar(1.0, down * phi);
    }
    st.amplitudes /= st.amplitudes.norm();
    return st;
}

inline double expectation(const BandedOperator& op, const VectorXcd& psi) {
    VectorXcd tmp;
    op.apply(psi, tmp);
    return psi.dot(tmp).real();
}

/// <J>/J as a Bloch vector.
inline BlochState mean_spin(const Hamiltonian& h, const DickeState& st) {
    const VectorXcd& a = st.amplitudes;
    double J = h.J();
    double x = a.dot(h.ops.jx.cast<cplx>() * a).real();
    double y = a.dot(h.ops.jy * a).real();
    double z = a.dot(h.ops.jz.cast<cplx>() * a).real();
    return {x / J, y / J, z / J};
}

// ---------------------------------------------------------------------------
// Spectrum

struct Eigendecomposition {
    VectorXd energies;       // ascending
    MatrixXd vectors;        // columns, Dicke basis
    std::vector<int> parity; // +1 / -1 per column
};

/// Diagonalises H0 separately in the two parity sectors, so every eigenvector
/// has definite parity even when opposite-parity levels are degenerate to
/// machine precision.
inline Eigendecomposition eigendecompose(const Hamiltonian& h) {
    const int d = h.dim();
    Eigendecomposition out;
    out.energies.resize(d);
    out.vectors = MatrixXd::Zero(d, d);
    out.parity.resize(d);

    struct Level {
        double e;
        int par;
        VectorXd v;
    };
    std::vector<Level> levels;
    levels.reserve(d);
    for (int par : {1, -1}) {
        std::vector<int> idx;
        for (int k = 0; k < d; ++k)
            if (basis_parity(d, k) == par) idx.push_back(k);
        if (idx.empty()) continue;
        const int n = static_cast<int>(idx.size());
        MatrixXd block(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) block(i, j) = h.h0(idx[i], idx[j]);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(block);
        if (es.info() != Eigen::Success)
            throw NumericSolveError("eigensolver failed for parity block of size " + std::to_string(n) +
                                    ", |H|_max = " + std::to_string(block.cwiseAbs().maxCoeff()));
        for (int c = 0; c < n; ++c) {
            VectorXd v = VectorXd::Zero(d);
            for (int i = 0; i < n; ++i) v(idx[i]) = es.eigenvectors()(i, c);
            levels.push_back({es.eigenvalues()(c), par, std::move(v)});
        }
    }
    std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) { return a.e < b.e; });
    for (int c = 0; c < d; ++c) {
        out.energies(c) = levels[c].e;
        out.vectors.col(c) = levels[c].v;
        out.parity[c] = levels[c].par;
    }

    const double scale = std::max(1.0, h.h0.cwiseAbs().maxCoeff());
    double resid = (h.h0 * out.vectors - out.vectors * out.energies.asDiagonal()).cwiseAbs().maxCoeff();
    if (resid > 1e-8 * scale)
        throw NumericSolveError("eigendecomposition residual " + std::to_string(resid) + " exceeds tolerance");
    return out;
}

/// |E(lowest even) - E(lowest odd)|.
inline double lowest_parity_gap(const Eigendecomposition& eig) {
    double e_even = NAN, e_odd = NAN;
    for (int c = 0; c < eig.energies.size(); ++c) {
        if (eig.parity[c] > 0 && std::isnan(e_even)) e_even = eig.energies(c);
        if (eig.parity[c] < 0 && std::isnan(e_odd)) e_odd = eig.energies(c);
    }
    return std::abs(e_even - e_odd);
}

// ---------------------------------------------------------------------------
// Evolution

inline DickeState evolve_autonomous(const DickeState& st, const Eigendecomposition& eig, double t) {
    const MatrixXd& U = eig.vectors;
    VectorXd re = U.transpose() * st.amplitudes.real();
    VectorXd im = U.transpose() * st.amplitudes.imag();
    VectorXcd a(re.size());
    for (int n = 0; n < a.size(); ++n) a(n) = cplx(re(n), im(n)) * std::polar(1.0, -eig.energies(n) * t);
    VectorXd ore = U * a.real();
    VectorXd oim = U * a.imag();
    DickeState out;
    out.amplitudes.resize(ore.size());
    for (int k = 0; k < ore.size(); ++k) out.amplitudes(k) = cplx(ore(k), oim(k));
    return out;
}

inline DickeState evolve_autonomous(const DickeState& st, const Hamiltonian& h, double t) {
    if (h.params.eps0 != 0.0) throw DomainError("evolve_autonomous requires eps0 = 0");
    return evolve_autonomous(st, eigendecompose(h), t);
}

namespace detail {

/// psi <- exp(-i A dt) psi by Taylor series.
inline void expm_apply(const BandedOperator& A, double dt, VectorXcd& psi, VectorXcd& term, VectorXcd& tmp) {
    term = psi;
    const double scale = psi.norm();
    for (int k = 1; k <= 40; ++k) {
        A.apply(term, tmp);
        term.noalias() = tmp * cplx(0.0, -dt / k);
        psi += term;
        if (term.norm() < 1e-17 * scale) return;
    }
}

} // namespace detail

/// Largest step allowed by dt * |H|_max <= 0.1.
inline double max_driven_step(const Hamiltonian& h) { return 0.1 / h.norm_bound(); }

/// Midpoint-exponential propagation from t0 to t0 + span: every step applies
/// exp(-i H(t_k + dt/2) dt).
inline DickeState evolve_driven(const DickeState& st, const Hamiltonian& h, double t0, double span, double dt) {
    if (!(dt > 0.0) || dt * h.norm_bound() > 0.1 + 1e-12)
        throw DomainError("evolve_driven requires dt * |H|_max <= 0.1 (max dt " +
                          std::to_string(max_driven_step(h)) + ")");
    const long n = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
    const double step = span / n;
    VectorXcd psi = st.amplitudes, term, tmp;
    BandedOperator A;
    const double n0 = psi.norm();
    for (long k = 0; k < n; ++k) {
        double tm = t0 + (k + 0.5) * step;
        A.combine(h.h0_band, h.params.eps0 * std::cos(h.params.omega * tm), h.drive_band);
        detail::expm_apply(A, step, psi, term, tmp);
    }
    if (std::abs(psi.norm() - n0) > 1e-6)
        throw StepSizeError("norm drift " + std::to_string(std::abs(psi.norm() - n0)) + "; reduce dt");
    return {psi};
}

/// Time-averaged <Jx>/J over [0, T], Simpson on samples spaced sample_dt.
/// Autonomous runs use the eigenbasis phase sum; driven runs step with the
/// midpoint exponential at a step no larger than max_step and max_driven_step.
inline double time_averaged_magnetization(const DickeState& initial, const Hamiltonian& h, double T,
                                          double sample_dt, double max_step = 1e-3) {
    if (!(sample_dt > 0.0 && T >= 100.0 * sample_dt))
        throw DomainError("time_averaged_magnetization requires T >= 100 * sample_dt");
    const long n_samples = std::lround(T / sample_dt);
    std::vector<double> jx(n_samples + 1);

    if (h.params.eps0 == 0.0) {
        auto eig = eigendecompose(h);
        const MatrixXd& U = eig.vectors;
        VectorXd re = U.transpose() * initial.amplitudes.real();
        VectorXd im = U.transpose() * initial.amplitudes.imag();
        VectorXcd c(re.size());
        for (int n = 0; n < c.size(); ++n) c(n) = cplx(re(n), im(n));
        VectorXd ar(c.size()), ai(c.size());
        VectorXcd psi(c.size());
        for (long i = 0; i <= n_samples; ++i) {
            double t = i * sample_dt;
            for (int n = 0; n < c.size(); ++n) {
                cplx a = c(n) * std::polar(1.0, -eig.energies(n) * t);
                ar(n) = a.real();
                ai(n) = a.imag();
            }
            VectorXd pr = U * ar;
            VectorXd pi_ = U * ai;
            for (int k = 0; k < psi.size(); ++k) psi(k) = cplx(pr(k), pi_(k));
            jx[i] = expectation(h.jx_band, psi);
        }
    } else {
        const double bound = std::min(max_step, max_driven_step(h));
        const long sub = std::max(1L, static_cast<long>(std::ceil(sample_dt / bound - 1e-9)));
        DickeState st = initial;
        jx[0] = expectation(h.jx_band, st.amplitudes);
        for (long i = 1; i <= n_samples; ++i) {
            st = evolve_driven(st, h, (i - 1) * sample_dt, sample_dt, sample_dt / sub);
            jx[i] = expectation(h.jx_band, st.amplitudes);
        }
    }
    return classical::simpson(jx, sample_dt) / (n_samples * sample_dt) / h.J();
}

/// T -> infinity limit sum_n |c_n|^2 <u_n|Jx|u_n> / J for non-degenerate levels.
inline double infinite_time_average(const DickeState& initial, const Hamiltonian& h, const Eigendecomposition& eig) {
    double acc = 0.0;
    const MatrixXd& U = eig.vectors;
    for (int n = 0; n < U.cols(); ++n) {
        VectorXd u = U.col(n);
        cplx c = u.cast<cplx>().dot(initial.amplitudes);
        acc += std::norm(c) * u.dot(h.ops.jx * u);
    }
    return acc / h.J();
}

} // namespace lmg::quantum
