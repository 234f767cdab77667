#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/potential.hpp"

namespace qdyn {

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;
};

// A phase-space path with accumulated action, Jacobi field J(t) = dx(t)/dp0,
// conjugate-point (Maslov) count and hard-wall bounce count, sampled on an
// (irregular near events) time grid.
struct ClassicalTrajectory {
    std::vector<double> t, x, p, action, jacobi;
    std::vector<int> maslov, reflections;
    double energy = 0.0;        // H at t = 0
    double energy_drift = 0.0;  // max |H(t) - H(0)| seen while integrating
    double path_length = 0.0;
    double jacobi_momentum = 1.0;  // dp(t_final)/dp0, kept for monodromy checks

    std::size_t size() const { return t.size(); }
    double duration() const { return t.empty() ? 0.0 : t.back(); }

    double final_x() const { return x.back(); }
    double final_p() const { return p.back(); }
    double final_action() const { return action.back(); }
    double final_jacobi() const { return jacobi.back(); }
    int maslov_index() const { return maslov.back(); }
    int reflection_count() const { return reflections.back(); }

    // Linear interpolation between samples. Bounce samples are recorded, so
    // this is exact for billiard segments.
    double position_at(double tau) const { return interp(x, tau); }
    double momentum_at(double tau) const { return interp(p, tau); }
    double jacobi_at(double tau) const { return interp(jacobi, tau); }
    double action_at(double tau) const { return interp(action, tau); }
    int maslov_at(double tau) const { return maslov[step_index(tau)]; }
    int reflections_at(double tau) const { return reflections[step_index(tau)]; }

  private:
    std::size_t step_index(double tau) const {
        auto it = std::upper_bound(t.begin(), t.end(), tau);
        return it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin() - 1);
    }
    double interp(const std::vector<double>& f, double tau) const {
        if (t.empty()) throw integrator_error("empty trajectory");
        if (tau <= t.front()) return f.front();
        if (tau >= t.back()) return f.back();
        std::size_t i = step_index(tau);
        if (i + 1 >= t.size()) return f.back();
        double w = (tau - t[i]) / (t[i + 1] - t[i]);
        return (1.0 - w) * f[i] + w * f[i + 1];
    }
};

struct IntegrateOptions {
    double energy_tol = 1e-6;  // relative drift bound; exceeding it rejects the run
    int record_every = 1;      // sample every k-th step (bounces always recorded)
};

namespace detail {

// Yoshida 4th-order composition of kick-drift-kick leapfrog.
struct Yoshida4 {
    static constexpr double w1 = 1.0 / (2.0 - 1.2599210498948731648);  // 2^(1/3)
    static constexpr double w0 = 1.0 - 2.0 * w1;
    // merged kick weights and drift weights for one full step
    static constexpr double kicks[4] = {w1 / 2, (w1 + w0) / 2, (w0 + w1) / 2, w1 / 2};
    static constexpr double drifts[3] = {w1, w0, w1};
};

struct AugmentedState {
    double x, p, dx, dp;  // phase point and tangent vector (dx(0)=0, dp(0)=1)
    double action = 0.0;
    double length = 0.0;
};

// One Yoshida-4 step for a smooth potential. The action accumulates the
// discrete Lagrangian of the splitting: kinetic along drifts, potential at
// kicks, which tracks Hamilton's principal function to the method's order.
inline void yoshida_step(const PotentialModel& m, AugmentedState& s, double dt) {
    using Y = Yoshida4;
    for (int stage = 0; stage < 3; ++stage) {
        {
            double w = Y::kicks[stage] * dt;
            s.p -= m.gradient(s.x) * w;
            s.dp -= m.curvature(s.x) * s.dx * w;
            s.action -= m.evaluate(s.x) * w;
        }
        {
            double w = Y::drifts[stage] * dt;
            s.x += s.p / m.mass * w;
            s.dx += s.dp / m.mass * w;
            s.action += s.p * s.p / (2 * m.mass) * w;
        }
    }
    double w = Y::kicks[3] * dt;
    s.p -= m.gradient(s.x) * w;
    s.dp -= m.curvature(s.x) * s.dx * w;
    s.action -= m.evaluate(s.x) * w;
}

// Tracks conjugate points as sign changes of the reflection-unfolded Jacobi
// field (wall bounces flip J without creating a conjugate point).
struct MaslovCounter {
    int sign = 0;
    int count = 0;
    void feed(double j_unfolded) {
        if (j_unfolded == 0.0) return;
        int s = j_unfolded > 0 ? 1 : -1;
        if (sign != 0 && s != sign) ++count;
        sign = s;
    }
};

}  // namespace detail

// Integrates Hamilton's equations with the tangent (variational) flow and
// action accumulation. Smooth models use a Yoshida-4 symplectic composition;
// the infinite well uses exact ballistic flight with event-exact reflections
// (x -> x_wall, p -> -p, J -> -J). Throws integrator_error on energy drift
// beyond the bound or on a non-finite state.
inline ClassicalTrajectory integrate_hamilton(const PotentialModel& model, PhasePoint start,
                                              double duration, double dt,
                                              const IntegrateOptions& opts = {}) {
    if (!(dt > 0) || !(duration > 0)) throw integrator_error("integrate: need dt, duration > 0");
    if (!model.in_domain(start.x)) throw domain_error("integrate: start outside domain");

    const int nsteps = std::max(1, static_cast<int>(std::llround(duration / dt)));
    const double h = duration / nsteps;

    ClassicalTrajectory traj;
    traj.t.reserve(nsteps / opts.record_every + 2);

    detail::AugmentedState s{start.x, start.p, 0.0, 1.0};
    int nrefl = 0;
    detail::MaslovCounter maslov;

    const double e0 = s.p * s.p / (2 * model.mass) + model.evaluate(s.x);
    traj.energy = e0;
    const double escale = std::max(std::abs(e0), 1.0);

    auto record = [&](double tnow) {
        traj.t.push_back(tnow);
        traj.x.push_back(s.x);
        traj.p.push_back(s.p);
        traj.action.push_back(s.action);
        traj.jacobi.push_back(s.dx);
        traj.maslov.push_back(maslov.count);
        traj.reflections.push_back(nrefl);
    };
    record(0.0);

    if (model.has_walls()) {
        const double L = model.length;
        for (int step = 0; step < nsteps; ++step) {
            double remaining = h;
            double tnow = step * h;
            while (remaining > 0.0) {
                double v = s.p / model.mass;
                double x_next = s.x + v * remaining;
                if (x_next > 0.0 && x_next < L) {
                    s.action += s.p * s.p / (2 * model.mass) * remaining;
                    s.length += std::abs(v) * remaining;
                    s.x = x_next;
                    s.dx += s.dp / model.mass * remaining;
                    tnow += remaining;
                    remaining = 0.0;
                } else {
                    double wall = (v > 0) ? L : 0.0;
                    double t_hit = (wall - s.x) / v;  // exact event time
                    s.action += s.p * s.p / (2 * model.mass) * t_hit;
                    s.length += std::abs(v) * t_hit;
                    s.dx += s.dp / model.mass * t_hit;
                    s.x = wall;
                    s.p = -s.p;
                    s.dx = -s.dx;
                    s.dp = -s.dp;
                    ++nrefl;
                    tnow += t_hit;
                    remaining -= t_hit;
                    record(tnow);
                }
            }
            maslov.feed(s.dx * ((nrefl % 2) ? -1.0 : 1.0));
            if ((step + 1) % opts.record_every == 0 || step + 1 == nsteps) record(tnow);
        }
        traj.energy_drift = 0.0;  // ballistic flight conserves H exactly
    } else {
        for (int step = 0; step < nsteps; ++step) {
            double x_prev = s.x;
            detail::yoshida_step(model, s, h);
            if (!std::isfinite(s.x) || !std::isfinite(s.p))
                throw integrator_error("integrate: state became non-finite");
            s.length += std::abs(s.x - x_prev);  // per-step: composition substages zigzag
            maslov.feed(s.dx);
            double e = s.p * s.p / (2 * model.mass) + model.evaluate(s.x);
            traj.energy_drift = std::max(traj.energy_drift, std::abs(e - e0));
            if ((step + 1) % opts.record_every == 0 || step + 1 == nsteps)
                record((step + 1) * h);
        }
        if (traj.energy_drift > opts.energy_tol * escale)
            throw integrator_error("integrate: energy drift " +
                                   std::to_string(traj.energy_drift) + " exceeds bound");
    }

    traj.path_length = s.length;
    traj.jacobi_momentum = s.dp;
    return traj;
}

// Endpoint-only integration for shooting scans; no sample recording.
struct EndpointShot {
    double x, p, action, jacobi;
    int maslov, reflections;
};

inline EndpointShot shoot_endpoint(const PotentialModel& model, PhasePoint start,
                                   double duration, double dt) {
    if (!(dt > 0) || !(duration > 0)) throw integrator_error("shoot: need dt, duration > 0");
    if (!model.in_domain(start.x)) throw domain_error("shoot: start outside domain");
    const int nsteps = std::max(1, static_cast<int>(std::llround(duration / dt)));
    const double h = duration / nsteps;
    detail::AugmentedState s{start.x, start.p, 0.0, 1.0};
    int nrefl = 0;
    detail::MaslovCounter maslov;

    if (model.has_walls()) {
        const double L = model.length;
        double v = s.p / model.mass;
        if (v == 0.0) {
            return {s.x, s.p, 0.0, duration / model.mass, 0, 0};
        }
        double remaining = duration;
        while (remaining > 0.0) {
            v = s.p / model.mass;
            double x_next = s.x + v * remaining;
            if (x_next > 0.0 && x_next < L) {
                s.action += s.p * s.p / (2 * model.mass) * remaining;
                s.x = x_next;
                s.dx += s.dp / model.mass * remaining;
                remaining = 0.0;
            } else {
                double wall = (v > 0) ? L : 0.0;
                double t_hit = (wall - s.x) / v;
                s.action += s.p * s.p / (2 * model.mass) * t_hit;
                s.dx += s.dp / model.mass * t_hit;
                s.x = wall;
                s.p = -s.p;
                s.dx = -s.dx;
                s.dp = -s.dp;
                ++nrefl;
                remaining -= t_hit;
            }
        }
    } else {
        for (int step = 0; step < nsteps; ++step) {
            detail::yoshida_step(model, s, h);
            maslov.feed(s.dx);
        }
        if (!std::isfinite(s.x) || !std::isfinite(s.p))
            throw integrator_error("shoot: state became non-finite");
    }
    return {s.x, s.p, s.action, s.dx, maslov.count, nrefl};
}

// |d2S/dx dx0|^(1/2) = |J(t)|^(-1/2), the Van Vleck amplitude factor.
// Throws caustic_error at (or numerically near) a conjugate point.
inline double jacobi_determinant_factor(const ClassicalTrajectory& traj, double t,
                                        double eps_caustic = 1e-8) {
    double j = traj.jacobi_at(t);
    double scale = 1.0;
    for (double v : traj.jacobi) scale = std::max(scale, std::abs(v));
    if (std::abs(j) < eps_caustic * scale)
        throw caustic_error("jacobi factor requested at a conjugate point, |J|=" +
                            std::to_string(std::abs(j)));
    return 1.0 / std::sqrt(std::abs(j));
}

inline int maslov_count(const ClassicalTrajectory& traj) { return traj.maslov_index(); }

// Maslov/reflection phase, phi_k = -mu*pi/2 - r*pi. The reflection term
// reproduces the (-1)^r image signs of the Dirichlet propagator exactly.
inline double semiclassical_phase(int maslov_index, int reflection_count) {
    return -maslov_index * pi / 2.0 - reflection_count * pi;
}

struct PathSearchOptions {
    double dt = 1e-3;
    double eps_bvp = 1e-10;     // |x(T) - x_target| tolerance
    int max_bisect = 200;
    double degeneracy_eps = 1e-9;
};

// Shooting + bisection over an initial-momentum window. Works for every
// model (the well's billiard map is continuous and piecewise linear in p0).
// Bisection rather than Newton: J -> 0 at caustics breaks Newton.
inline std::vector<ClassicalTrajectory> find_paths_shooting(
    const PotentialModel& model, double x0, double x_target, double duration, double p_min,
    double p_max, int p_samples, const PathSearchOptions& opts = {}) {
    if (p_samples < 2) throw config_error("find_paths: p_samples >= 2");
    if (!(duration > 0)) throw config_error("find_paths: duration > 0");
    if (!(p_max > p_min)) throw config_error("find_paths: need p_max > p_min");

    const double span = std::max(std::abs(x_target), std::abs(x0)) + 1.0;
    std::vector<double> ps(p_samples), fs(p_samples);
    int near_zero = 0;
    for (int i = 0; i < p_samples; ++i) {
        ps[i] = p_min + (p_max - p_min) * i / (p_samples - 1);
        fs[i] = shoot_endpoint(model, {x0, ps[i]}, duration, opts.dt).x - x_target;
        if (std::abs(fs[i]) < opts.degeneracy_eps * span) ++near_zero;
    }
    if (near_zero > p_samples / 2)
        throw caustic_error("find_paths: degenerate path family (every p0 reaches the target)");

    std::vector<double> roots;
    auto push_root = [&](double p) {
        for (double r : roots)
            if (std::abs(r - p) < 1e-9 * (p_max - p_min)) return;
        roots.push_back(p);
    };

    for (int i = 0; i + 1 < p_samples; ++i) {
        if (fs[i] == 0.0) push_root(ps[i]);
        if (fs[i] * fs[i + 1] < 0.0) {
            double a = ps[i], b = ps[i + 1], fa = fs[i];
            for (int it = 0; it < opts.max_bisect; ++it) {
                double mid = 0.5 * (a + b);
                double fm = shoot_endpoint(model, {x0, mid}, duration, opts.dt).x - x_target;
                if (std::abs(fm) < opts.eps_bvp || 0.5 * (b - a) < 1e-15 * (1 + std::abs(mid))) {
                    a = b = mid;
                    break;
                }
                if (fa * fm <= 0.0)
                    b = mid;
                else {
                    a = mid;
                    fa = fm;
                }
            }
            push_root(0.5 * (a + b));
        }
    }
    if (fs[p_samples - 1] == 0.0) push_root(ps[p_samples - 1]);

    std::sort(roots.begin(), roots.end());
    std::vector<ClassicalTrajectory> out;
    out.reserve(roots.size());
    for (double p : roots)
        out.push_back(integrate_hamilton(model, {x0, p}, duration, opts.dt));
    return out;
}

// Image of the target point after unfolding the well r times. Enumerates
// x_n = s*x_target + 2nL with initial momentum p0 = m(x_n - x0)/T.
struct WellImage {
    double unfolded_x;
    double p0;
    int sign;   // +1 images carry even bounce counts, -1 odd
    int shift;  // n
};

inline std::vector<WellImage> enumerate_well_images(const PotentialModel& model, double x0,
                                                    double x_target, double duration,
                                                    double p_min, double p_max) {
    if (model.kind != PotentialKind::InfiniteWell)
        throw config_error("well images: model is not an infinite well");
    const double L = model.length, m = model.mass;
    double lo = x0 + p_min * duration / m;
    double hi = x0 + p_max * duration / m;
    std::vector<WellImage> images;
    for (int s : {+1, -1}) {
        double base = s * x_target;
        int n_lo = static_cast<int>(std::floor((lo - base) / (2 * L))) - 1;
        int n_hi = static_cast<int>(std::ceil((hi - base) / (2 * L))) + 1;
        for (int n = n_lo; n <= n_hi; ++n) {
            double xt = base + 2.0 * n * L;
            double p0 = m * (xt - x0) / duration;
            if (p0 >= p_min && p0 <= p_max) images.push_back({xt, p0, s, n});
        }
    }
    std::sort(images.begin(), images.end(),
              [](const WellImage& a, const WellImage& b) { return a.p0 < b.p0; });
    return images;
}

// All classical paths x0 -> x_target in time `duration` with initial momentum
// inside the window. The infinite well uses the exact image enumeration; the
// shooting scan above reproduces it (tested) but costs far more.
inline std::vector<ClassicalTrajectory> find_paths(const PotentialModel& model, double x0,
                                                   double x_target, double duration,
                                                   double p_min, double p_max, int p_samples,
                                                   const PathSearchOptions& opts = {}) {
    if (model.kind == PotentialKind::InfiniteWell) {
        auto images = enumerate_well_images(model, x0, x_target, duration, p_min, p_max);
        std::vector<ClassicalTrajectory> out;
        out.reserve(images.size());
        for (const auto& im : images) {
            if (im.p0 == 0.0 && x0 != x_target) continue;
            out.push_back(integrate_hamilton(model, {x0, im.p0}, duration, opts.dt));
        }
        return out;
    }
    return find_paths_shooting(model, x0, x_target, duration, p_min, p_max, p_samples, opts);
}

struct PeriodicOrbit {
    ClassicalTrajectory trajectory;
    double period = 0.0;
    double amplitude = 0.0;  // |J(T)|^(-1/2) over one period; 0 if degenerate
    bool degenerate = false;
    double action = 0.0;  // loop action, integral of p dx over the closed path
    int repetitions = 1;
};

// Closed orbits through x0 with period inside the window, one entry per
// repetition count r of the primitive orbit. The well's orbit energy is fixed
// by the requested period (T = 2L/v per primitive traversal); the harmonic
// oscillator is isochronous so r alone labels the entries.
inline std::vector<PeriodicOrbit> find_periodic_orbits(const PotentialModel& model, double x0,
                                                       double t_lo, double t_hi,
                                                       int max_repetitions = 8,
                                                       double dt = 1e-3) {
    std::vector<PeriodicOrbit> out;
    if (!(t_hi > t_lo) || !(t_lo > 0)) throw config_error("periodic orbits: bad window");

    auto finish = [&](PhasePoint start, double T, int r) {
        PeriodicOrbit orb;
        orb.trajectory = integrate_hamilton(model, start, T, dt);
        orb.period = T;
        orb.repetitions = r;
        // loop action = Lagrangian action + E*T
        orb.action = orb.trajectory.final_action() + orb.trajectory.energy * T;
        double j = orb.trajectory.final_jacobi();
        double scale = 1.0;
        for (double v : orb.trajectory.jacobi) scale = std::max(scale, std::abs(v));
        if (std::abs(j) < 1e-8 * scale) {
            orb.degenerate = true;
            orb.amplitude = 0.0;
        } else {
            orb.amplitude = 1.0 / std::sqrt(std::abs(j));
        }
        return orb;
    };

    switch (model.kind) {
        case PotentialKind::FreeParticle:
            return out;  // no bounded motion
        case PotentialKind::HarmonicOscillator: {
            double T0 = 2 * pi / model.omega;
            for (int r = 1; r <= max_repetitions; ++r) {
                double T = r * T0;
                if (T < t_lo || T > t_hi) continue;
                double p0 = model.mass * model.omega * std::max(std::abs(x0), 1.0);
                out.push_back(finish({x0, p0}, T, r));
            }
            return out;
        }
        case PotentialKind::InfiniteWell: {
            double Tc = 0.5 * (t_lo + t_hi);
            for (int r = 1; r <= max_repetitions; ++r) {
                double v = 2.0 * model.length * r / Tc;  // r primitive traversals in Tc
                double p0 = model.mass * v;
                out.push_back(finish({x0, p0}, Tc, r));
            }
            return out;
        }
        case PotentialKind::PolynomialWell: {
            // Return-map search: the first-return period T(p0) of the orbit
            // through (x0, p0) is located by bisection on p0 against the
            // window center. Covers bounded smooth wells.
            double Tc = 0.5 * (t_lo + t_hi);
            auto first_return = [&](double p0) -> double {
                PhasePoint st{x0, p0};
                auto traj = integrate_hamilton(model, st, t_hi * 2.5, dt,
                                               IntegrateOptions{1e-6, 1});
                for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
                    bool crossed = (traj.x[i] - x0) * (traj.x[i + 1] - x0) <= 0.0;
                    if (crossed && traj.p[i] * p0 > 0 && traj.t[i] > dt * 4) {
                        double w = (x0 - traj.x[i]) /
                                   (traj.x[i + 1] - traj.x[i] + 1e-300);
                        return traj.t[i] + w * (traj.t[i + 1] - traj.t[i]);
                    }
                }
                return std::numeric_limits<double>::quiet_NaN();
            };
            double p_lo = 1e-3, p_hi = 10.0;
            double f_lo = first_return(p_lo), f_hi = first_return(p_hi);
            if (!std::isfinite(f_lo) || !std::isfinite(f_hi)) return out;
            if ((f_lo - Tc) * (f_hi - Tc) > 0) return out;
            for (int it = 0; it < 80; ++it) {
                double pm = 0.5 * (p_lo + p_hi);
                double fm = first_return(pm);
                if (!std::isfinite(fm)) return out;
                if ((f_lo - Tc) * (fm - Tc) <= 0) {
                    p_hi = pm;
                } else {
                    p_lo = pm;
                    f_lo = fm;
                }
            }
            double p0 = 0.5 * (p_lo + p_hi);
            double T = first_return(p0);
            if (std::isfinite(T) && T >= t_lo && T <= t_hi)
                out.push_back(finish({x0, p0}, T, 1));
            return out;
        }
    }
    return out;
}

}  // namespace qdyn
