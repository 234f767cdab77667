#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "qdyn/fft.hpp"
#include "qdyn/grid.hpp"
#include "qdyn/potential.hpp"
#include "qdyn/wavefunction.hpp"

namespace qdyn {

struct PropagateOptions {
    int frame_stride = 1;            // emit a frame every k internal steps
    double aliasing_tail = 1e-8;     // momentum mass allowed near Nyquist
    bool check_aliasing = true;
    double norm_tol = 1e-9;          // per-frame norm drift bound
};

namespace detail {

inline bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// fraction of momentum-space mass in the top 10% of |k|
inline double nyquist_tail_fraction(const std::vector<complexd>& khat) {
    int n = static_cast<int>(khat.size());
    double total = 0.0, tail = 0.0;
    for (int i = 0; i < n; ++i) {
        int kidx = i <= n / 2 ? i : n - i;
        double m = std::norm(khat[i]);
        total += m;
        if (kidx >= int(0.45 * n)) tail += m;  // |k| >= 0.9 k_nyquist
    }
    return total > 0 ? tail / total : 0.0;
}

}  // namespace detail

// Reference evolution every other engine is compared against.
// Smooth potentials: second-order (Strang) split-step spectral stepping.
// Infinite well: exact sine-eigenbasis phases, evaluated per frame.
// Frames include t = 0 and the final time; norm is checked per frame.
inline std::vector<Wavefunction> propagate_exact(const Wavefunction& psi0,
                                                 const PotentialModel& model, double duration,
                                                 double dt, const PropagateOptions& opts = {}) {
    if (!(duration > 0) || !(dt > 0)) throw config_error("propagate_exact: duration, dt > 0");
    const int nsteps = std::max(1, static_cast<int>(std::llround(duration / dt)));
    const double h = duration / nsteps;
    const Grid& g = psi0.grid;

    std::vector<Wavefunction> frames;
    frames.reserve(nsteps / opts.frame_stride + 2);
    frames.push_back(psi0);

    auto check_frame = [&](const Wavefunction& w) {
        double drift = std::abs(w.norm() - 1.0);
        if (drift > opts.norm_tol)
            throw integrator_error("propagate_exact: norm drift " + std::to_string(drift));
    };

    if (model.kind == PotentialKind::InfiniteWell) {
        // modal coefficients of psi0, exact phases per frame time
        Dst1 dst(g.n);
        std::vector<complexd> coeff = psi0.values;
        dst.transform(coeff);
        const double mode_scale = 1.0 / (2.0 * (g.n + 1));
        std::vector<double> energies(g.n);
        for (int k = 1; k <= g.n; ++k) energies[k - 1] = well_eigenvalue(model, k);

        std::vector<int> emit_steps;
        for (int step = opts.frame_stride; step < nsteps; step += opts.frame_stride)
            emit_steps.push_back(step);
        emit_steps.push_back(nsteps);

        for (int step : emit_steps) {
            double t = step * h;
            std::vector<complexd> ck(g.n);
            for (int k = 0; k < g.n; ++k)
                ck[k] = coeff[k] * std::exp(complexd(0.0, -energies[k] * t / model.hbar));
            dst.transform(ck);
            Wavefunction w(g, psi0.mass, psi0.hbar);
            w.time = psi0.time + t;
            for (int i = 0; i < g.n; ++i) w.values[i] = ck[i] * mode_scale;
            check_frame(w);
            frames.push_back(std::move(w));
        }
        return frames;
    }

    if (!detail::is_pow2(g.n) || g.n < 16)
        throw config_error("propagate_exact: spectral stepping needs N >= 16, power of two");

    Fft fft(g.n);
    auto ks = fft_wavenumbers(g);
    std::vector<complexd> kin_full(g.n), pot_half(g.n);
    for (int i = 0; i < g.n; ++i)
        kin_full[i] = std::exp(complexd(0.0, -psi0.hbar * ks[i] * ks[i] * h / (2 * psi0.mass)));
    for (int i = 0; i < g.n; ++i)
        pot_half[i] = std::exp(complexd(0.0, -model.evaluate(g.x(i)) * h / (2 * psi0.hbar)));

    std::vector<complexd> cur = psi0.values;
    for (int step = 1; step <= nsteps; ++step) {
        for (int i = 0; i < g.n; ++i) cur[i] *= pot_half[i];
        fft.forward(cur);
        for (int i = 0; i < g.n; ++i) cur[i] *= kin_full[i];
        bool emit = (step % opts.frame_stride == 0) || step == nsteps;
        if (emit && opts.check_aliasing) {
            double tail = detail::nyquist_tail_fraction(cur);
            if (tail > opts.aliasing_tail)
                throw aliasing_error("propagate_exact: momentum tail mass " +
                                     std::to_string(tail) + " at the Nyquist band");
        }
        fft.inverse(cur);
        for (int i = 0; i < g.n; ++i) cur[i] *= pot_half[i];
        if (emit) {
            Wavefunction w(g, psi0.mass, psi0.hbar);
            w.time = psi0.time + step * h;
            w.values = cur;
            check_frame(w);
            frames.push_back(std::move(w));
        }
    }
    return frames;
}

// Polar fields R, S of psi = R exp(iS/hbar). S is the phase unwrapped along
// the grid from the density maximum outward; across nodes the branch with the
// smallest |dS| is taken and the masked values are linearly interpolated.
struct PolarField {
    std::vector<double> R, S;
    std::vector<unsigned char> node_mask;
    double eps_node;
};

inline PolarField polar_decompose(const Wavefunction& psi, double eps_node_rel = 1e-8) {
    const int n = psi.grid.n;
    PolarField pf;
    pf.R.resize(n);
    pf.S.assign(n, 0.0);
    pf.node_mask.assign(n, 0);

    double rmax = 0.0;
    int imax = 0;
    for (int i = 0; i < n; ++i) {
        pf.R[i] = std::abs(psi.values[i]);
        if (pf.R[i] > rmax) {
            rmax = pf.R[i];
            imax = i;
        }
    }
    if (rmax == 0.0) throw empty_state_error("polar_decompose: all-zero state");
    pf.eps_node = eps_node_rel * rmax;
    for (int i = 0; i < n; ++i) pf.node_mask[i] = pf.R[i] < pf.eps_node ? 1 : 0;

    auto wrapped_delta = [&](int a, int b) {
        double d = std::arg(psi.values[b]) - std::arg(psi.values[a]);
        while (d > pi) d -= 2 * pi;
        while (d <= -pi) d += 2 * pi;
        return d;
    };
    pf.S[imax] = psi.hbar * std::arg(psi.values[imax]);
    for (int i = imax + 1; i < n; ++i) pf.S[i] = pf.S[i - 1] + psi.hbar * wrapped_delta(i - 1, i);
    for (int i = imax - 1; i >= 0; --i) pf.S[i] = pf.S[i + 1] - psi.hbar * wrapped_delta(i, i + 1);

    // masked runs: linear interpolation between flanking trusted values
    int i = 0;
    while (i < n) {
        if (!pf.node_mask[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j < n && pf.node_mask[j]) ++j;
        int lo = i - 1, hi = j;
        if (lo >= 0 && hi < n) {
            for (int k = i; k < j; ++k) {
                double w = double(k - lo) / double(hi - lo);
                pf.S[k] = (1 - w) * pf.S[lo] + w * pf.S[hi];
            }
        } else if (lo >= 0) {
            for (int k = i; k < j; ++k) pf.S[k] = pf.S[lo];
        } else if (hi < n) {
            for (int k = i; k < j; ++k) pf.S[k] = pf.S[hi];
        }
        i = j;
    }
    return pf;
}

// j = (hbar/m) Im(psi* dpsi/dx), fourth-order differencing.
inline std::vector<double> current_density(const Wavefunction& psi) {
    auto dpsi = derivative_o4(psi.grid, psi.values);
    std::vector<double> j(psi.grid.n);
    for (int i = 0; i < psi.grid.n; ++i)
        j[i] = psi.hbar / psi.mass * std::imag(std::conj(psi.values[i]) * dpsi[i]);
    return j;
}

// Q = -(hbar^2/2m) R''/R, fourth-order differencing; NaN inside node regions
// rather than silent extrapolation.
inline std::vector<double> quantum_potential(const Wavefunction& psi,
                                             double eps_node_rel = 1e-8) {
    auto pf = polar_decompose(psi, eps_node_rel);
    auto rpp = second_derivative_o4(psi.grid, pf.R);
    std::vector<double> q(psi.grid.n);
    for (int i = 0; i < psi.grid.n; ++i) {
        if (pf.node_mask[i]) {
            q[i] = std::numeric_limits<double>::quiet_NaN();
        } else {
            q[i] = -psi.hbar * psi.hbar / (2 * psi.mass) * rpp[i] / pf.R[i];
        }
    }
    return q;
}

namespace detail {

// second-order current density, used inside the residual operators so both
// space and time errors land at the same order
inline std::vector<double> current_density_o2(const Wavefunction& psi) {
    const Grid& g = psi.grid;
    std::vector<double> re(g.n), im(g.n), j(g.n);
    for (int i = 0; i < g.n; ++i) {
        re[i] = psi.values[i].real();
        im[i] = psi.values[i].imag();
    }
    auto dre = derivative_o2(g, re);
    auto dim = derivative_o2(g, im);
    for (int i = 0; i < g.n; ++i)
        j[i] = psi.hbar / psi.mass * (re[i] * dim[i] - im[i] * dre[i]);
    return j;
}

}  // namespace detail

// Pointwise residual of d(R^2)/dt + d(R^2 dS/dx / m)/dx = 0 between two
// consecutive frames, centered at the midpoint time; O(dt^2 + dx^2).
inline std::vector<double> continuity_residual(const Wavefunction& f1, const Wavefunction& f2) {
    require_same_grid(f1, f2);
    double tau = f2.time - f1.time;
    if (!(tau > 0)) throw config_error("continuity_residual: frames must be time-ordered");
    auto j1 = detail::current_density_o2(f1);
    auto j2 = detail::current_density_o2(f2);
    std::vector<double> jbar(f1.grid.n);
    for (int i = 0; i < f1.grid.n; ++i) jbar[i] = 0.5 * (j1[i] + j2[i]);
    auto djbar = derivative_o2(f1.grid, jbar);
    std::vector<double> r(f1.grid.n);
    for (int i = 0; i < f1.grid.n; ++i) {
        double drho_dt = (std::norm(f2.values[i]) - std::norm(f1.values[i])) / tau;
        r[i] = drho_dt + djbar[i];
    }
    return r;
}

// Pointwise residual of dS/dt + (dS/dx)^2/2m + V + Q = 0 between two frames,
// NaN inside either frame's node mask. The S branch of the second frame is
// re-anchored to the first so the time derivative carries the physical
// winding (requires tau * |dS/dt| < pi hbar).
inline std::vector<double> qhj_residual(const Wavefunction& f1, const Wavefunction& f2,
                                        const PotentialModel& model,
                                        double eps_node_rel = 1e-8) {
    require_same_grid(f1, f2);
    double tau = f2.time - f1.time;
    if (!(tau > 0)) throw config_error("qhj_residual: frames must be time-ordered");
    auto p1 = polar_decompose(f1, eps_node_rel);
    auto p2 = polar_decompose(f2, eps_node_rel);
    const Grid& g = f1.grid;

    int ia = 0;
    double best = -1.0;
    for (int i = 0; i < g.n; ++i) {
        double m = p1.R[i] * p2.R[i];
        if (m > best) {
            best = m;
            ia = i;
        }
    }
    double twopih = 2 * pi * f1.hbar;
    double shift = twopih * std::round((p1.S[ia] - p2.S[ia]) / twopih);
    for (auto& s : p2.S) s += shift;

    auto ds1 = derivative_o2(g, p1.S);
    auto ds2 = derivative_o2(g, p2.S);
    auto rpp1 = [&] {
        auto d = derivative_o2(g, p1.R);
        return derivative_o2(g, d);
    }();
    auto rpp2 = [&] {
        auto d = derivative_o2(g, p2.R);
        return derivative_o2(g, d);
    }();

    std::vector<double> r(g.n);
    for (int i = 0; i < g.n; ++i) {
        if (p1.node_mask[i] || p2.node_mask[i]) {
            r[i] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double dS_dt = (p2.S[i] - p1.S[i]) / tau;
        double grad = 0.5 * (ds1[i] + ds2[i]);
        double q1 = -f1.hbar * f1.hbar / (2 * f1.mass) * rpp1[i] / p1.R[i];
        double q2 = -f2.hbar * f2.hbar / (2 * f2.mass) * rpp2[i] / p2.R[i];
        double v = model.evaluate(g.x(i));
        r[i] = dS_dt + grad * grad / (2 * f1.mass) + v + 0.5 * (q1 + q2);
    }
    return r;
}

// L2 norm of a residual field over [x_lo, x_hi], skipping NaN (masked) points.
inline double residual_l2(const Grid& g, const std::vector<double>& r, double x_lo,
                          double x_hi) {
    double s = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double x = g.x(i);
        if (x < x_lo || x > x_hi) continue;
        if (!std::isfinite(r[i])) continue;
        s += r[i] * r[i];
    }
    return std::sqrt(s * g.dx());
}

// C(t) = |<psi0|psi(t)>|^2.
inline double autocorrelation(const Wavefunction& psi0, const Wavefunction& frame) {
    return std::norm(overlap(psi0, frame));
}

}  // namespace qdyn
