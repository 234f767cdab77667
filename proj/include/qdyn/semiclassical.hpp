#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <tuple>
#include <vector>

#include "qdyn/classical.hpp"
#include "qdyn/exact.hpp"
#include "qdyn/grid.hpp"
#include "qdyn/potential.hpp"
#include "qdyn/wavefunction.hpp"

namespace qdyn {

// |A1 e^{iS1/hbar} + A2 e^{iS2/hbar}|^2 for two periodic-orbit contributions
// with a common period.
inline double recurrence_strength(double a1, double s1, double a2, double s2, double hbar) {
    return a1 * a1 + a2 * a2 + 2 * a1 * a2 * std::cos((s1 - s2) / hbar);
}

// (2 pi i hbar)^(-1/2), principal branch.
inline complexd van_vleck_prefactor(double hbar) {
    return 1.0 / std::sqrt(complexd(0.0, 2 * pi * hbar));
}

struct VanVleckResult {
    complexd value{0.0, 0.0};
    int path_count = 0;
    bool empty() const { return path_count == 0; }
};

// Semiclassical propagator K(x0, x, t) as a coherent sum over the classical
// paths found in the momentum window. Caustic errors propagate; an empty path
// set yields value 0 with path_count == 0 as the warning flag.
inline VanVleckResult van_vleck_kernel(const PotentialModel& model, double x0, double x,
                                       double duration, double p_min, double p_max,
                                       int p_samples, const PathSearchOptions& opts = {}) {
    auto paths = find_paths(model, x0, x, duration, p_min, p_max, p_samples, opts);
    VanVleckResult res;
    res.path_count = static_cast<int>(paths.size());
    const complexd pref = van_vleck_prefactor(model.hbar);
    for (const auto& traj : paths) {
        double amp = jacobi_determinant_factor(traj, duration);
        double phase = traj.final_action() / model.hbar +
                       semiclassical_phase(traj.maslov_index(), traj.reflection_count());
        res.value += pref * amp * std::exp(complexd(0.0, phase));
    }
    return res;
}

// One branch of the semiclassically propagated state: the contributions of a
// single classical path class, assembled on the grid. `field` is the branch's
// share of the propagated wavefunction; `weight` is the pointwise product
// psi0(x0_k) |d2S/dx dx0|^(1/2) at the branch's stationary origin.
struct Branch {
    int component = 0;    // index of the initial WKB component the branch rides on
    int reflections = 0;  // hard-wall bounces of its paths
    int maslov = 0;       // conjugate points of its paths
    int tag = 0;          // image index (well) or fold index (smooth scan)
    std::vector<complexd> field;
    std::vector<complexd> weight;
    std::vector<double> x0, p0, action;
    std::vector<unsigned char> valid;
    double mass = 0.0;  // integrated |field|^2

    double mean_p0() const {
        double s = 0.0, w = 0.0;
        for (std::size_t i = 0; i < p0.size(); ++i) {
            if (!valid[i]) continue;
            double a = std::abs(field[i]);
            s += a * p0[i];
            w += a;
        }
        return w > 0 ? s / w : 0.0;
    }
};

struct SemiclassicalState {
    Grid grid;
    double time = 0.0;
    std::vector<Branch> branches;
    std::vector<complexd> total;
    std::vector<unsigned char> caustic_mask;
    std::vector<unsigned char> ambiguous;
    double masked_fraction = 0.0;

    Wavefunction to_wavefunction(double mass, double hbar) const {
        Wavefunction w(grid, mass, hbar);
        w.time = time;
        w.values = total;
        return w;
    }
};

struct SweepOptions {
    double p_min = -10.0, p_max = 10.0;  // initial-momentum window of the path sum
    int p_samples = 65;                  // scan density (smooth models)
    double dt = 1e-3;                    // classical step for the scan trajectories
    double caustic_eps = 1e-8;           // |J| floor, relative to the scan scale
    double mask_fail_fraction = 0.05;
    double support_rel = 1e-12;          // component support cut
    double branch_mass_floor = 1e-12;    // drop branches below this relative mass
    double p0_jump_tol = 0.0;            // 0: auto from window width
    // Smooth shoulder width of the momentum window; 0 keeps the hard cut.
    // States with no momentum-space envelope decay at the cut (plane-wave
    // sheets) need a taper wider than the Fresnel scale sqrt(hbar m / t) or
    // the truncation rings at O(1).
    double p_taper = 0.0;

    // weight of a path with initial momentum p under the (tapered) window
    double window_weight(double p) const {
        if (p < p_min || p > p_max) return 0.0;
        if (p_taper <= 0.0) return 1.0;
        auto shoulder = [&](double d) { return 0.5 * (1.0 + std::erf(4.0 * d / p_taper - 2.0)); };
        return shoulder(p - p_min) * shoulder(p_max - p);
    }
};

namespace detail {

struct BranchKey {
    int component, reflections, maslov, tag;
    bool operator<(const BranchKey& o) const {
        return std::tie(component, reflections, maslov, tag) <
               std::tie(o.component, o.reflections, o.maslov, o.tag);
    }
};

struct BranchAccum {
    std::vector<complexd> field, weight;
    std::vector<double> x0, p0, action, rep_score;
    std::vector<unsigned char> valid;
    explicit BranchAccum(int n)
        : field(n, complexd{0, 0}),
          weight(n, complexd{0, 0}),
          x0(n, 0.0),
          p0(n, 0.0),
          action(n, 0.0),
          rep_score(n, std::numeric_limits<double>::infinity()),
          valid(n, 0) {}
};

struct SweepContribution {
    int f;              // final grid index
    complexd value;     // quadrature contribution to psi(x_f)
    complexd weight;    // pointwise paper-form weight of this path
    double x0, p0, action, rep_score;
};

// cubic Hermite on [0,1]
inline double hermite(double f0, double f1, double d0, double d1, double u) {
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * f1 +
           (u3 - u2) * d1;
}
inline double hermite_d(double f0, double f1, double d0, double d1, double u) {
    double u2 = u * u;
    return (6 * u2 - 6 * u) * f0 + (3 * u2 - 4 * u + 1) * d0 + (6 * u - 6 * u2) * f1 +
           (3 * u2 - 2 * u) * d1;
}

inline int well_reflection_count(int sign, int shift) {
    return sign > 0 ? 2 * std::abs(shift) : std::abs(2 * shift - 1);
}

}  // namespace detail

// Semiclassical propagation of an initial state decomposed into WKB
// components, with the branch structure kept. For each final grid point the
// path sum runs over the classical trajectories whose initial momentum lies
// in the window; branch identity is (component, reflections, maslov, image or
// fold) plus p0 continuity across the grid.
inline SemiclassicalState semiclassical_sweep(const InitialState& initial,
                                              const PotentialModel& model, double duration,
                                              const SweepOptions& opts = {}) {
    if (!(duration > 0)) throw config_error("semiclassical: duration > 0");
    const Grid& g = initial.psi.grid;
    const double hbar = initial.psi.hbar;
    const double m = model.mass;
    const double h = g.dx();
    const complexd pref = van_vleck_prefactor(hbar);

    SemiclassicalState state;
    state.grid = g;
    state.time = initial.psi.time + duration;
    state.total.assign(g.n, complexd{0, 0});
    state.caustic_mask.assign(g.n, 0);
    state.ambiguous.assign(g.n, 0);

    std::map<detail::BranchKey, detail::BranchAccum> accum;
    auto deposit = [&](const detail::BranchKey& key, const detail::SweepContribution& c) {
        auto it = accum.find(key);
        if (it == accum.end()) it = accum.emplace(key, detail::BranchAccum(g.n)).first;
        auto& b = it->second;
        b.field[c.f] += c.value;
        b.valid[c.f] = 1;
        if (c.rep_score < b.rep_score[c.f]) {
            b.rep_score[c.f] = c.rep_score;
            b.x0[c.f] = c.x0;
            b.p0[c.f] = c.p0;
            b.action[c.f] = c.action;
            b.weight[c.f] = c.weight;
        }
        state.total[c.f] += c.value;
    };

    for (int ci = 0; ci < static_cast<int>(initial.components.size()); ++ci) {
        const auto& comp = initial.components[ci];
        double fmax = 0.0;
        for (const auto& v : comp.field) fmax = std::max(fmax, std::abs(v));
        if (fmax == 0.0) continue;
        std::vector<int> support;
        for (int i = 0; i < g.n; ++i)
            if (std::abs(comp.field[i]) > opts.support_rel * fmax) support.push_back(i);
        if (support.empty()) continue;

        if (model.kind == PotentialKind::InfiniteWell) {
            // image method: per image class the path data is closed-form
            const double L = model.length;
            const double jconst = duration / m;
            const double amp = 1.0 / std::sqrt(jconst);
            for (int f = 0; f < g.n; ++f) {
                double xf = g.x(f);
                for (int sign : {+1, -1}) {
                    double base = sign * xf;
                    // images reachable with momenta inside the window
                    double lo = g.x(support.front()) + opts.p_min * duration / m;
                    double hi = g.x(support.back()) + opts.p_max * duration / m;
                    int n_lo = static_cast<int>(std::floor((lo - base) / (2 * L))) - 1;
                    int n_hi = static_cast<int>(std::ceil((hi - base) / (2 * L))) + 1;
                    for (int n = n_lo; n <= n_hi; ++n) {
                        double xt = base + 2.0 * n * L;
                        int r = detail::well_reflection_count(sign, n);
                        double phase_refl = semiclassical_phase(0, r);
                        detail::BranchKey key{ci, r, 0, sign > 0 ? 2 * n : 2 * n - 1};
                        for (int i : support) {
                            double x0 = g.x(i);
                            double p0 = m * (xt - x0) / duration;
                            double chi = opts.window_weight(p0);
                            if (chi == 0.0) continue;
                            double action = m * (xt - x0) * (xt - x0) / (2 * duration);
                            complexd kern =
                                pref * amp *
                                std::exp(complexd(0.0, action / hbar + phase_refl));
                            detail::SweepContribution c;
                            c.f = f;
                            c.value = kern * comp.field[i] * h * chi;
                            c.weight = comp.field[i] * amp;
                            c.x0 = x0;
                            c.p0 = p0;
                            c.action = action;
                            c.rep_score = std::abs(p0 - comp.momentum[i]);
                            deposit(key, c);
                        }
                    }
                }
            }
            continue;
        }

        // smooth models: scan initial momenta, integrate once per (x0, p0),
        // then read off every final grid point crossed between scan nodes
        const int np = opts.p_samples;
        if (np < 2) throw config_error("semiclassical: p_samples >= 2");
        std::vector<double> ps(np);
        for (int j = 0; j < np; ++j)
            ps[j] = opts.p_min + (opts.p_max - opts.p_min) * j / (np - 1);
        const double dp = ps[1] - ps[0];

        std::vector<std::vector<EndpointShot>> shots(support.size(),
                                                     std::vector<EndpointShot>(np));
        parallel_for(support.size(), [&](std::size_t si) {
            double x0 = g.x(support[si]);
            for (int j = 0; j < np; ++j)
                shots[si][j] = shoot_endpoint(model, {x0, ps[j]}, duration, opts.dt);
        });

        double jscale = 1.0;
        for (const auto& row : shots)
            for (const auto& s : row) jscale = std::max(jscale, std::abs(s.jacobi));
        const double jfloor = opts.caustic_eps * jscale;

        for (std::size_t si = 0; si < support.size(); ++si) {
            int i = support[si];
            double x0 = g.x(i);
            complexd f0 = comp.field[i];
            int fold = 0;
            for (int j = 0; j + 1 < np; ++j) {
                const auto& a = shots[si][j];
                const auto& b = shots[si][j + 1];
                if (a.jacobi * b.jacobi < 0.0) ++fold;  // caustic between scan nodes
                if (a.maslov != b.maslov || a.reflections != b.reflections) {
                    // label changes inside the interval: the covered final points
                    // sit against a caustic; mark instead of mixing classes
                    double lo = std::min(a.x, b.x), hi = std::max(a.x, b.x);
                    int f_lo = static_cast<int>(std::ceil((lo - g.x_min) / h));
                    int f_hi = static_cast<int>(std::floor((hi - g.x_min) / h));
                    for (int f = std::max(0, f_lo); f <= std::min(g.n - 1, f_hi); ++f)
                        state.caustic_mask[f] = 1;
                    continue;
                }
                double lo = std::min(a.x, b.x), hi = std::max(a.x, b.x);
                if (hi - lo <= 0.0) continue;
                int f_lo = static_cast<int>(std::ceil((lo - g.x_min) / h));
                int f_hi = static_cast<int>(std::floor((hi - g.x_min) / h));
                double da = a.jacobi * dp, db = b.jacobi * dp;  // dX/du at the ends
                double sa = a.p * a.jacobi * dp, sb = b.p * b.jacobi * dp;  // dS/du
                for (int f = std::max(0, f_lo); f <= std::min(g.n - 1, f_hi); ++f) {
                    double xf = g.x(f);
                    // half-open convention to avoid double counting at nodes
                    if (xf == hi && j + 2 < np) continue;
                    double u = (b.x != a.x) ? (xf - a.x) / (b.x - a.x) : 0.5;
                    for (int it = 0; it < 8; ++it) {
                        double fx = detail::hermite(a.x, b.x, da, db, u) - xf;
                        double dfx = detail::hermite_d(a.x, b.x, da, db, u);
                        if (dfx == 0.0) break;
                        double step = fx / dfx;
                        u -= step;
                        if (u < 0.0) u = 0.0;
                        if (u > 1.0) u = 1.0;
                        if (std::abs(step) < 1e-15) break;
                    }
                    double jroot = (1.0 - u) * a.jacobi + u * b.jacobi;
                    if (std::abs(jroot) < jfloor) {
                        state.caustic_mask[f] = 1;
                        continue;
                    }
                    double sroot = detail::hermite(a.action, b.action, sa, sb, u);
                    double proot = ps[j] + u * dp;
                    double chi = opts.window_weight(proot);
                    if (chi == 0.0) continue;
                    double amp = 1.0 / std::sqrt(std::abs(jroot));
                    double phase = sroot / hbar + semiclassical_phase(a.maslov, a.reflections);
                    complexd kern = pref * amp * std::exp(complexd(0.0, phase));
                    detail::SweepContribution c;
                    c.f = f;
                    c.value = kern * f0 * h * chi;
                    c.weight = f0 * amp;
                    c.x0 = x0;
                    c.p0 = proot;
                    c.action = sroot;
                    c.rep_score = std::abs(proot - comp.momentum[i]);
                    deposit({ci, a.reflections, a.maslov, fold}, c);
                }
            }
        }
    }

    // assemble branches, largest first; drop negligible ones
    double total_mass = 0.0;
    for (const auto& v : state.total) total_mass += std::norm(v);
    total_mass *= h;
    for (auto& [key, acc] : accum) {
        Branch br;
        br.component = key.component;
        br.reflections = key.reflections;
        br.maslov = key.maslov;
        br.tag = key.tag;
        br.field = std::move(acc.field);
        br.weight = std::move(acc.weight);
        br.x0 = std::move(acc.x0);
        br.p0 = std::move(acc.p0);
        br.action = std::move(acc.action);
        br.valid = std::move(acc.valid);
        for (const auto& v : br.field) br.mass += std::norm(v);
        br.mass *= h;
        if (total_mass > 0 && br.mass < opts.branch_mass_floor * total_mass) continue;
        state.branches.push_back(std::move(br));
    }
    std::sort(state.branches.begin(), state.branches.end(),
              [](const Branch& a, const Branch& b) { return a.mass > b.mass; });

    // p0 continuity audit inside each branch
    double jump_tol = opts.p0_jump_tol > 0 ? opts.p0_jump_tol
                                           : 0.05 * (opts.p_max - opts.p_min);
    for (const auto& br : state.branches) {
        for (int f = 0; f + 1 < g.n; ++f) {
            if (!br.valid[f] || !br.valid[f + 1]) continue;
            if (std::abs(br.p0[f + 1] - br.p0[f]) > jump_tol) state.ambiguous[f] = 1;
        }
    }

    int masked = 0;
    for (int f = 0; f < g.n; ++f)
        if (state.caustic_mask[f]) {
            ++masked;
            state.total[f] = complexd{0, 0};
            for (auto& br : state.branches) {
                br.field[f] = complexd{0, 0};
                br.valid[f] = 0;
            }
        }
    state.masked_fraction = double(masked) / g.n;
    return state;
}

// Quadrature of the Van Vleck kernel against psi0 over the initial grid, one
// value per final grid point; caustic-masked points are zeroed. Fails when
// more than the allowed fraction of points is masked.
inline Wavefunction propagate_semiclassical(const InitialState& initial,
                                            const PotentialModel& model, double duration,
                                            const SweepOptions& opts = {}) {
    auto state = semiclassical_sweep(initial, model, duration, opts);
    if (state.masked_fraction > opts.mask_fail_fraction)
        throw caustic_error("propagate_semiclassical: " +
                            std::to_string(100 * state.masked_fraction) +
                            "% of grid points hit caustics");
    return state.to_wavefunction(initial.psi.mass, initial.psi.hbar);
}

// The same sweep, returned with its branch structure.
inline SemiclassicalState branch_decompose(const InitialState& initial,
                                           const PotentialModel& model, double duration,
                                           const SweepOptions& opts = {}) {
    return semiclassical_sweep(initial, model, duration, opts);
}

// Branch view of the initial data itself (t = 0): one branch per component.
inline SemiclassicalState initial_semiclassical_state(const InitialState& initial) {
    const Grid& g = initial.psi.grid;
    SemiclassicalState st;
    st.grid = g;
    st.time = initial.psi.time;
    st.total = initial.psi.values;
    st.caustic_mask.assign(g.n, 0);
    st.ambiguous.assign(g.n, 0);
    for (int ci = 0; ci < static_cast<int>(initial.components.size()); ++ci) {
        const auto& comp = initial.components[ci];
        Branch br;
        br.component = ci;
        br.tag = 0;
        br.field = comp.field;
        br.weight = comp.field;
        br.x0.resize(g.n);
        br.p0 = comp.momentum;
        br.action.assign(g.n, 0.0);
        br.valid.assign(g.n, 1);
        for (int i = 0; i < g.n; ++i) br.x0[i] = g.x(i);
        for (const auto& v : br.field) br.mass += std::norm(v);
        br.mass *= g.dx();
        st.branches.push_back(std::move(br));
    }
    return st;
}

// Generic single-component initial data: the local momentum comes from the
// unwrapped phase of psi0.
inline InitialState initial_from_wavefunction(const Wavefunction& psi) {
    InitialState st;
    st.psi = psi;
    auto pf = polar_decompose(psi);
    WkbComponent c;
    c.field = psi.values;
    c.momentum = derivative_o4(psi.grid, pf.S);
    double wsum = 0.0, msum = 0.0;
    auto rho = psi.density();
    for (int i = 0; i < psi.grid.n; ++i) {
        msum += rho[i] * c.momentum[i];
        wsum += rho[i];
    }
    c.mean_momentum = wsum > 0 ? msum / wsum : 0.0;
    st.components.push_back(std::move(c));
    return st;
}

}  // namespace qdyn
