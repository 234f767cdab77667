#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qdyn/grid.hpp"
#include "qdyn/potential.hpp"

namespace qdyn {

// Complex amplitudes on a uniform grid at one time instant. Carries the mass
// and hbar of the model it belongs to.
struct Wavefunction {
    Grid grid;
    std::vector<complexd> values;
    double time = 0.0;
    double mass = 1.0;
    double hbar = 1.0;

    Wavefunction() = default;
    Wavefunction(Grid g, double m, double hb)
        : grid(g), values(g.n, complexd{0.0, 0.0}), mass(m), hbar(hb) {}

    double norm_sq() const {
        double s = 0.0;
        for (const auto& v : values) s += std::norm(v);
        return s * grid.dx();
    }
    double norm() const { return std::sqrt(norm_sq()); }

    void normalize() {
        double n = norm();
        if (n == 0.0) throw empty_state_error("normalize: zero state");
        for (auto& v : values) v /= n;
    }

    std::vector<double> density() const {
        std::vector<double> rho(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) rho[i] = std::norm(values[i]);
        return rho;
    }
};

inline void require_same_grid(const Wavefunction& a, const Wavefunction& b) {
    if (!(a.grid == b.grid)) throw grid_mismatch_error("wavefunctions live on different grids");
}

inline complexd overlap(const Wavefunction& a, const Wavefunction& b) {
    require_same_grid(a, b);
    complexd s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
    return s * a.grid.dx();
}

inline double l2_error(const Wavefunction& a, const Wavefunction& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
    return std::sqrt(s * a.grid.dx());
}

// Grid covering the interior points x_j = j L/(N+1) of a well of width L, so
// the DST-I kernel is exactly the sampled sine eigenbasis.
inline Grid well_interior_grid(double L, int n) {
    double h = L / (n + 1);
    return Grid(h, n * h, n);
}

// Normalized Gaussian packet exp(-(x-c)^2/4s^2 + i p (x-c)/hbar).
inline Wavefunction gaussian_packet(const Grid& g, double sigma0, double center, double p0,
                                    double mass, double hbar) {
    if (!(sigma0 > 0)) throw config_error("gaussian: sigma0 must be > 0");
    Wavefunction w(g, mass, hbar);
    for (int i = 0; i < g.n; ++i) {
        double dxc = g.x(i) - center;
        w.values[i] = std::exp(complexd(-dxc * dxc / (4 * sigma0 * sigma0), p0 * dxc / hbar));
    }
    w.normalize();
    return w;
}

// Minimum-uncertainty coherent state of the oscillator, displaced by x_c.
inline Wavefunction coherent_state(const Grid& g, const PotentialModel& model, double x_c) {
    if (model.kind != PotentialKind::HarmonicOscillator)
        throw config_error("coherent_state: needs a harmonic model");
    double sigma = std::sqrt(model.hbar / (2 * model.mass * model.omega));
    return gaussian_packet(g, sigma, x_c, 0.0, model.mass, model.hbar);
}

inline Wavefunction well_eigenstate(const PotentialModel& model, int n, int npts) {
    if (model.kind != PotentialKind::InfiniteWell)
        throw config_error("well_eigenstate: needs an infinite well");
    if (n < 1) throw config_error("well_eigenstate: n >= 1");
    Grid g = well_interior_grid(model.length, npts);
    Wavefunction w(g, model.mass, model.hbar);
    for (int i = 0; i < g.n; ++i)
        w.values[i] = std::sqrt(2.0 / model.length) * std::sin(n * pi * g.x(i) / model.length);
    w.normalize();
    return w;
}

inline double well_eigenvalue(const PotentialModel& model, int n) {
    double L = model.length;
    return n * n * pi * pi * model.hbar * model.hbar / (2 * model.mass * L * L);
}

// One WKB component of an initial state: a field with a declared local
// momentum p0(x) = dS0/dx. Branches of the semiclassical decomposition are
// anchored to these components.
struct WkbComponent {
    std::vector<complexd> field;
    std::vector<double> momentum;
    double mean_momentum = 0.0;
};

// Initial data for the semiclassical engine: the wavefunction plus its
// declared decomposition into single-momentum-sheet components. The fields
// sum to psi.
struct InitialState {
    Wavefunction psi;
    std::vector<WkbComponent> components;
};

inline InitialState initial_gaussian(const Grid& g, double sigma0, double center, double p0,
                                     double mass, double hbar) {
    InitialState st;
    st.psi = gaussian_packet(g, sigma0, center, p0, mass, hbar);
    WkbComponent c;
    c.field = st.psi.values;
    c.momentum.assign(g.n, p0);
    c.mean_momentum = p0;
    st.components.push_back(std::move(c));
    return st;
}

inline InitialState initial_coherent(const Grid& g, const PotentialModel& model, double x_c) {
    InitialState st;
    st.psi = coherent_state(g, model, x_c);
    WkbComponent c;
    c.field = st.psi.values;
    c.momentum.assign(g.n, 0.0);
    st.components.push_back(std::move(c));
    return st;
}

// Eigenstate as two counter-propagating sheets:
// sin(kx) = (e^{ikx} - e^{-ikx}) / 2i.
inline InitialState initial_well_eigenstate(const PotentialModel& model, int n, int npts) {
    InitialState st;
    st.psi = well_eigenstate(model, n, npts);
    double L = model.length;
    double k = n * pi / L;
    double p_n = model.hbar * k;
    const Grid& g = st.psi.grid;
    const complexd inv2i = complexd(0.0, -0.5);  // 1/(2i)
    for (int dir : {+1, -1}) {
        WkbComponent c;
        c.field.resize(g.n);
        c.momentum.assign(g.n, dir * p_n);
        c.mean_momentum = dir * p_n;
        for (int i = 0; i < g.n; ++i) {
            complexd plane = std::exp(complexd(0.0, dir * k * g.x(i)));
            c.field[i] = double(dir) * inv2i * std::sqrt(2.0 / L) * plane;
        }
        st.components.push_back(std::move(c));
    }
    return st;
}

// Superposition of Gaussian packets, one component per packet; weights are
// applied before the overall normalization.
struct PacketSpec {
    double sigma0, center, p0;
    complexd weight;
};

inline InitialState initial_packet_sum(const Grid& g, const std::vector<PacketSpec>& specs,
                                       double mass, double hbar) {
    InitialState st;
    st.psi = Wavefunction(g, mass, hbar);
    for (const auto& sp : specs) {
        auto pk = gaussian_packet(g, sp.sigma0, sp.center, sp.p0, mass, hbar);
        WkbComponent c;
        c.field.resize(g.n);
        c.momentum.assign(g.n, sp.p0);
        c.mean_momentum = sp.p0;
        for (int i = 0; i < g.n; ++i) {
            c.field[i] = sp.weight * pk.values[i];
            st.psi.values[i] += c.field[i];
        }
        st.components.push_back(std::move(c));
    }
    double nrm = st.psi.norm();
    if (nrm == 0.0) throw empty_state_error("initial_packet_sum: zero state");
    for (auto& c : st.components)
        for (auto& v : c.field) v /= nrm;
    for (auto& v : st.psi.values) v /= nrm;
    return st;
}

}  // namespace qdyn
