#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qdyn/classical.hpp"
#include "qdyn/exact.hpp"
#include "qdyn/grid.hpp"
#include "qdyn/wavefunction.hpp"

namespace qdyn {

// A configuration-space path integrated along the guiding field v = j/rho.
struct BohmTrajectory {
    double x0 = 0.0;
    std::vector<double> t, x, v;

    std::size_t size() const { return t.size(); }
    double final_x() const { return x.back(); }
    double path_length() const {
        double s = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) s += std::abs(x[i] - x[i - 1]);
        return s;
    }
    double position_at(double tau) const {
        if (tau <= t.front()) return x.front();
        if (tau >= t.back()) return x.back();
        auto it = std::upper_bound(t.begin(), t.end(), tau);
        std::size_t i = it - t.begin() - 1;
        double w = (tau - t[i]) / (t[i + 1] - t[i]);
        return (1 - w) * x[i] + w * x[i + 1];
    }
};

struct GuidingOptions {
    double eps_node_rel = 1e-8;  // node floor relative to max density
    double v_max = 0.0;          // velocity cap; 0 = 10 grid cells per substep
    int substeps = 4;            // RK4 substeps per frame interval
    int node_extra_substeps = 16;
};

inline double clamp_to(const Grid& g, double x) { return std::clamp(x, g.x_min, g.x_max); }

// Precomputed guiding data (j, rho per frame), shared read-only by any number
// of trajectory integrations.
class GuidingField {
  public:
    explicit GuidingField(const std::vector<Wavefunction>& frames) {
        if (frames.size() < 2) throw config_error("guiding field: need at least two frames");
        grid_ = frames.front().grid;
        for (const auto& f : frames) {
            require_same_grid(frames.front(), f);
            times_.push_back(f.time);
            j_.push_back(current_density(f));
            rho_.push_back(f.density());
            double m = 0.0;
            for (double r : rho_.back()) m = std::max(m, r);
            rho_max_.push_back(m);
        }
        for (std::size_t k = 0; k + 1 < times_.size(); ++k)
            if (!(times_[k + 1] > times_[k]))
                throw config_error("guiding field: frames not time-ordered");
    }

    const Grid& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    std::size_t intervals() const { return times_.size() - 1; }

    // v(x, t) inside interval k at fraction theta, linear in the field data
    // between frames; node regions cap the speed and set the flag.
    double velocity(std::size_t k, double theta, double x, double v_cap, bool& node) const {
        double jx =
            (1 - theta) * interp_cubic(grid_, j_[k], x) + theta * interp_cubic(grid_, j_[k + 1], x);
        double rx = (1 - theta) * interp_cubic(grid_, rho_[k], x) +
                    theta * interp_cubic(grid_, rho_[k + 1], x);
        double rmax = std::max(rho_max_[k], rho_max_[k + 1]);
        if (rx < eps_node_rel * rmax) {
            node = true;
            return std::clamp(rx > 0 ? jx / rx : 0.0, -v_cap, v_cap);
        }
        return std::clamp(jx / rx, -v_cap, v_cap);
    }

    double eps_node_rel = 1e-8;

  private:
    Grid grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> j_, rho_;
    std::vector<double> rho_max_;
};

// v = j(x)/|psi(x)|^2 at one point of one frame, cubic interpolation between
// grid points; capped and flagged inside node regions.
struct GuidingVelocity {
    double v = 0.0;
    bool node_region = false;
};

inline GuidingVelocity guiding_velocity(const Wavefunction& psi, double x,
                                        const GuidingOptions& opts = {}) {
    if (!psi.grid.contains(x)) throw domain_error("guiding_velocity: x outside grid");
    auto j = current_density(psi);
    auto rho = psi.density();
    double rmax = 0.0;
    for (double r : rho) rmax = std::max(rmax, r);
    double jx = interp_cubic(psi.grid, j, x);
    double rx = interp_cubic(psi.grid, rho, x);
    GuidingVelocity out;
    double vmax = opts.v_max > 0 ? opts.v_max : 10.0 * psi.grid.dx() * psi.grid.n;
    if (rx < opts.eps_node_rel * rmax) {
        out.node_region = true;
        out.v = std::clamp(rx > 0 ? jx / rx : 0.0, -vmax, vmax);
    } else {
        out.v = jx / rx;
    }
    return out;
}

// Integrates dx/dt = v(x, t) over a precomputed guiding field: RK4 in time,
// halving into extra substeps when the path touches a flagged node region.
// Leaving the grid is a hard error.
inline BohmTrajectory integrate_bohm(const GuidingField& field, double x0,
                                     const GuidingOptions& opts = {}) {
    const Grid& g = field.grid();
    if (!g.contains(x0)) throw domain_error("integrate_bohm: x0 outside grid");

    BohmTrajectory traj;
    traj.x0 = x0;

    double stride = field.times()[1] - field.times()[0];
    const double vmax = opts.v_max > 0 ? opts.v_max : 10.0 * g.dx() / (stride / opts.substeps);

    double x = x0;
    traj.t.push_back(field.times().front());
    traj.x.push_back(x);
    {
        bool node = false;
        traj.v.push_back(field.velocity(0, 0.0, x, vmax, node));
    }

    for (std::size_t k = 0; k < field.intervals(); ++k) {
        double span = field.times()[k + 1] - field.times()[k];
        bool node_here = false;
        field.velocity(k, 0.0, x, vmax, node_here);
        int nsub = node_here ? opts.node_extra_substeps : opts.substeps;
        double h = span / nsub;
        for (int s = 0; s < nsub; ++s) {
            double th0 = double(s) / nsub;
            double th_half = (s + 0.5) / nsub;
            double th1 = double(s + 1) / nsub;
            bool node = false;
            double k1 = field.velocity(k, th0, x, vmax, node);
            double k2 = field.velocity(k, th_half, clamp_to(g, x + 0.5 * h * k1), vmax, node);
            double k3 = field.velocity(k, th_half, clamp_to(g, x + 0.5 * h * k2), vmax, node);
            double k4 = field.velocity(k, th1, clamp_to(g, x + h * k3), vmax, node);
            x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            if (!g.contains(x)) throw domain_error("integrate_bohm: trajectory left the grid");
        }
        bool node = false;
        double v_end = field.velocity(k, 1.0, x, vmax, node);
        traj.t.push_back(field.times()[k + 1]);
        traj.x.push_back(x);
        traj.v.push_back(v_end);
    }
    return traj;
}

inline BohmTrajectory integrate_bohm(const std::vector<Wavefunction>& frames, double x0,
                                     const GuidingOptions& opts = {}) {
    return integrate_bohm(GuidingField(frames), x0, opts);
}

// Inverse-CDF sampling from |psi0|^2; deterministic for a given seed.
inline std::vector<double> sample_initial(const Wavefunction& psi0, int n, std::uint64_t seed) {
    if (n < 1) throw config_error("sample_initial: n >= 1");
    const Grid& g = psi0.grid;
    auto rho = psi0.density();
    std::vector<double> cdf(g.n, 0.0);
    double acc = 0.0;
    for (int i = 1; i < g.n; ++i) {
        acc += 0.5 * (rho[i - 1] + rho[i]) * g.dx();
        cdf[i] = acc;
    }
    if (!(acc > 0)) throw empty_state_error("sample_initial: zero density");
    for (auto& c : cdf) c /= acc;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> xs(n);
    for (int k = 0; k < n; ++k) {
        double u = uni(rng);
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        int i = std::clamp<int>(int(it - cdf.begin()), 1, g.n - 1);
        double c0 = cdf[i - 1], c1 = cdf[i];
        double w = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.5;
        xs[k] = g.x(i - 1) + w * g.dx();
    }
    return xs;
}

// An ensemble of guided trajectories with |psi0|^2-distributed starts.
struct TrajectoryEnsemble {
    std::vector<BohmTrajectory> trajectories;
    std::uint64_t seed = 0;
    int size() const { return static_cast<int>(trajectories.size()); }
};

inline TrajectoryEnsemble integrate_ensemble(const std::vector<Wavefunction>& frames, int n,
                                             std::uint64_t seed,
                                             const GuidingOptions& opts = {}) {
    TrajectoryEnsemble ens;
    ens.seed = seed;
    GuidingField field(frames);
    auto starts = sample_initial(frames.front(), n, seed);
    ens.trajectories.resize(n);
    parallel_for(n, [&](std::size_t k) {
        ens.trajectories[k] = integrate_bohm(field, starts[k], opts);
    });
    return ens;
}

// Total-variation distance between the binned ensemble positions at a frame's
// time and the binned |psi|^2 of that frame.
inline double equivariance_distance(const TrajectoryEnsemble& ens, const Wavefunction& frame,
                                    int bins) {
    if (bins < 2) throw config_error("equivariance_distance: bins >= 2");
    const Grid& g = frame.grid;
    std::vector<double> p(bins, 0.0), q(bins, 0.0);
    double t = frame.time;
    for (const auto& traj : ens.trajectories) {
        double x = traj.position_at(t);
        int b = std::clamp(int((x - g.x_min) / (g.x_max - g.x_min) * bins), 0, bins - 1);
        p[b] += 1.0 / ens.trajectories.size();
    }
    auto rho = frame.density();
    double mass = 0.0;
    for (int i = 0; i < g.n; ++i) {
        int b = std::clamp(int((g.x(i) - g.x_min) / (g.x_max - g.x_min) * bins), 0, bins - 1);
        q[b] += rho[i] * g.dx();
        mass += rho[i] * g.dx();
    }
    for (auto& v : q) v /= mass;
    double tv = 0.0;
    for (int b = 0; b < bins; ++b) tv += std::abs(p[b] - q[b]);
    return 0.5 * tv;
}

// Order-preservation audit of a guided 1D ensemble: trajectories must never
// cross. Returns the number of adjacent-order violations over all samples.
inline int no_crossing_violations(const TrajectoryEnsemble& ens) {
    if (ens.trajectories.empty()) return 0;
    std::vector<int> order(ens.trajectories.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return ens.trajectories[a].x0 < ens.trajectories[b].x0;
    });
    int violations = 0;
    std::size_t nt = ens.trajectories.front().t.size();
    for (std::size_t s = 0; s < nt; ++s) {
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            if (ens.trajectories[order[i]].x[s] > ens.trajectories[order[i + 1]].x[s])
                ++violations;
        }
    }
    return violations;
}

// Dynamical-mismatch metrics between a guided and a classical path sharing a
// time span.
struct MismatchReport {
    double sup_deviation = 0.0;
    double bohm_path_length = 0.0;
    double classical_path_length = 0.0;
    double length_ratio = 0.0;  // bohm / classical, 0 when classical length is 0
};

inline MismatchReport mismatch_report(const BohmTrajectory& bohm,
                                      const ClassicalTrajectory& classical) {
    MismatchReport rep;
    for (std::size_t i = 0; i < bohm.t.size(); ++i) {
        double xc = classical.position_at(bohm.t[i] - bohm.t.front());
        rep.sup_deviation = std::max(rep.sup_deviation, std::abs(bohm.x[i] - xc));
    }
    rep.bohm_path_length = bohm.path_length();
    rep.classical_path_length = classical.path_length;
    rep.length_ratio = rep.classical_path_length > 0
                           ? rep.bohm_path_length / rep.classical_path_length
                           : 0.0;
    return rep;
}

}  // namespace qdyn
