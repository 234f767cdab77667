#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qdyn/exact.hpp"

using namespace qdyn;
using oracle::I;

namespace {

Wavefunction from_values(const Grid& g, std::vector<complexd> vals, double t, double m,
                         double hb) {
    Wavefunction w(g, m, hb);
    w.values = std::move(vals);
    w.time = t;
    return w;
}

Wavefunction plane_wave(const Grid& g, double p, double m, double hb, double t = 0.0,
                        double energy = 0.0) {
    Wavefunction w(g, m, hb);
    w.time = t;
    for (int i = 0; i < g.n; ++i)
        w.values[i] = std::exp(I * (p * g.x(i) - energy * t) / hb);
    return w;
}

}  // namespace

TEST_CASE("oracle self-check: free Gaussian closed form starts right and stays normalized") {
    oracle::GaussianPacket pk{1.0, 0.0, 2.0, 1.0, 1.0};
    Grid g(-14.0, 14.0, 1024);
    double n0 = 0.0, n1 = 0.0;
    for (int i = 0; i < g.n; ++i) {
        n0 += std::norm(pk.evolved(g.x(i), 0.0));
        n1 += std::norm(pk.evolved(g.x(i), 1.7));
        CHECK(std::abs(pk.evolved(g.x(i), 0.0) - pk.initial(g.x(i))) < 1e-12);
    }
    CHECK(n0 * g.dx() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(n1 * g.dx() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("propagate_exact: free Gaussian matches the closed form to 1e-8") {
    Grid g(-14.0, 18.0, 1024);
    oracle::GaussianPacket pk{1.0, 0.0, 2.0, 1.0, 1.0};
    auto psi0 = gaussian_packet(g, 1.0, 0.0, 2.0, 1.0, 1.0);
    auto model = PotentialModel::free_particle(1.0, 1.0);
    auto frames = propagate_exact(psi0, model, 2.0, 1e-3, {200, 1e-8, true, 1e-9});
    for (const auto& f : frames) {
        std::vector<complexd> ref(g.n);
        for (int i = 0; i < g.n; ++i) ref[i] = pk.evolved(g.x(i), f.time);
        CHECK(oracle::l2_distance(f.values, ref, g.dx()) < 1e-8);
        CHECK(std::abs(f.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("propagate_exact: coherent state revives after one period") {
    auto model = PotentialModel::harmonic(1.0, 1.0, 1.0);
    Grid g(-10.0, 10.0, 1024);
    auto st = initial_coherent(g, model, 2.0);
    auto frames = propagate_exact(st.psi, model, 2 * pi, 1e-4, {15708, 1e-8, true, 1e-9});
    double fid = std::abs(overlap(st.psi, frames.back()));
    CHECK(fid > 1.0 - 1e-8);

    // mid-evolution check against the coherent-state closed form
    oracle::CoherentState cs{1.0, 1.0, 1.0, 2.0};
    const auto& mid = frames[1];
    std::vector<complexd> ref(g.n);
    for (int i = 0; i < g.n; ++i) ref[i] = cs.value(g.x(i), mid.time);
    CHECK(oracle::l2_distance(mid.values, ref, g.dx()) < 1e-7);
}

TEST_CASE("propagate_exact: well eigenstate is stationary, packet matches direct sum") {
    auto model = PotentialModel::infinite_well(1.0, 1.0, 1.0);
    SUBCASE("eigenstate modulus is time-independent") {
        auto psi0 = well_eigenstate(model, 3, 512);
        auto frames = propagate_exact(psi0, model, 0.37, 1e-3, {370});
        const auto& f = frames.back();
        for (int i = 0; i < f.grid.n; ++i)
            CHECK(std::abs(f.values[i]) ==
                  doctest::Approx(std::abs(psi0.values[i])).epsilon(1e-10));
    }
    SUBCASE("packet against the independent sine-sum oracle") {
        Grid g = well_interior_grid(1.0, 512);
        auto psi0 = gaussian_packet(g, 0.05, 0.4, 20.0, 1.0, 1.0);
        auto frames = propagate_exact(psi0, model, 0.02, 1e-4, {200});
        auto ref = oracle::well_evolve_direct(g.points(), psi0.values, 1.0, 1.0, 1.0,
                                              frames.back().time, 512);
        CHECK(oracle::l2_distance(frames.back().values, ref, g.dx()) < 1e-9);
    }
}

TEST_CASE("propagate_exact: aliasing at the Nyquist band is detected") {
    Grid g(-6.0, 6.0, 64);
    double k_nyq = pi / g.dx();
    auto psi0 = gaussian_packet(g, 0.8, 0.0, 0.97 * k_nyq, 1.0, 1.0);
    auto model = PotentialModel::free_particle();
    CHECK_THROWS_AS(propagate_exact(psi0, model, 0.5, 1e-3), aliasing_error);
}

TEST_CASE("propagate_exact: guards") {
    Grid g(-6.0, 6.0, 100);  // not a power of two
    auto psi0 = gaussian_packet(g, 0.8, 0.0, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(propagate_exact(psi0, PotentialModel::free_particle(), 1.0, 1e-2),
                    config_error);
}

TEST_CASE("polar_decompose") {
    SUBCASE("plane wave: R = 1, S = p x + const") {
        Grid g(-5.0, 5.0, 256);
        double p = 2.0 * (2 * pi / ((g.n) * g.dx())) * 10;  // grid-commensurate
        auto w = plane_wave(g, p, 1.0, 1.0);
        auto pf = polar_decompose(w);
        for (int i = 0; i < g.n; ++i) CHECK(pf.R[i] == doctest::Approx(1.0));
        for (int i = 1; i < g.n; ++i)
            CHECK(pf.S[i] - pf.S[i - 1] == doctest::Approx(p * g.dx()).epsilon(1e-10));
    }
    SUBCASE("sign changes of a real state step the phase by pi*hbar") {
        Grid g(0.0, 1.0, 128);
        double hb = 0.7;
        Wavefunction w(g, 1.0, hb);
        for (int i = 0; i < g.n; ++i) w.values[i] = std::sin(2 * pi * g.x(i));  // two nodes inside
        auto pf = polar_decompose(w);
        // phase difference across the node at x=0.5
        int left = static_cast<int>(0.45 / g.dx());
        int right = static_cast<int>(0.55 / g.dx());
        CHECK(std::abs(std::abs(pf.S[right] - pf.S[left]) - pi * hb) < 1e-9);
    }
    SUBCASE("free Gaussian phase matches the closed form") {
        Grid g(-12.0, 12.0, 1024);
        oracle::GaussianPacket pk{1.0, 0.0, 0.0, 1.0, 1.0};
        double t = 1.3;
        std::vector<complexd> vals(g.n);
        for (int i = 0; i < g.n; ++i) vals[i] = pk.evolved(g.x(i), t);
        auto w = from_values(g, vals, t, 1.0, 1.0);
        auto pf = polar_decompose(w);
        // compare S to hbar*arg(psi) unwrapped analytically near the center
        for (double x : {-1.0, 0.5, 2.0}) {
            int i = static_cast<int>((x - g.x_min) / g.dx());
            double s_ref = std::arg(pk.evolved(g.x(i), t));
            double diff = pf.S[i] - s_ref;
            double wrapped = std::remainder(diff, 2 * pi);
            CHECK(std::abs(wrapped) < 1e-9);
        }
    }
    SUBCASE("reconstruction is the identity off the node mask") {
        Grid g(0.0, 1.0, 256);
        Wavefunction w(g, 1.0, 0.5);
        for (int i = 0; i < g.n; ++i)
            w.values[i] = std::sin(3 * pi * g.x(i)) * std::exp(I * 1.7 * g.x(i));
        auto pf = polar_decompose(w);
        for (int i = 0; i < g.n; ++i) {
            if (pf.node_mask[i]) continue;
            complexd rec = pf.R[i] * std::exp(I * pf.S[i] / w.hbar);
            CHECK(std::abs(rec - w.values[i]) < 1e-10);
        }
    }
    SUBCASE("all-zero state throws") {
        Grid g(0.0, 1.0, 64);
        Wavefunction w(g, 1.0, 1.0);
        CHECK_THROWS_AS(polar_decompose(w), empty_state_error);
    }
}

TEST_CASE("current_density") {
    SUBCASE("plane wave: j = (p/m) |psi|^2") {
        Grid g(-5.0, 5.0, 512);
        double p = 4 * 2 * pi / (g.n * g.dx());  // gentle wavenumber: O(h^4 p^4) error
        auto w = plane_wave(g, p, 2.0, 1.0);
        auto j = current_density(w);
        for (int i = 5; i < g.n - 5; ++i)
            CHECK(j[i] == doctest::Approx(p / 2.0).epsilon(1e-6));
        double p2 = 16 * 2 * pi / (g.n * g.dx());
        auto j2 = current_density(plane_wave(g, p2, 2.0, 1.0));
        for (int i = 5; i < g.n - 5; ++i)
            CHECK(j2[i] == doctest::Approx(p2 / 2.0).epsilon(1e-4));
    }
    SUBCASE("real eigenstate: static current") {
        auto model = PotentialModel::infinite_well(1.0);
        auto w = well_eigenstate(model, 4, 256);
        auto j = current_density(w);
        for (double v : j) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("symmetric counter-propagating packets: j(0) = 0") {
        Grid g(-10.0, 10.0, 1025);  // odd count so x = 0 is on the grid
        Wavefunction w(g, 1.0, 1.0);
        oracle::GaussianPacket a{1.0, 0.0, 3.0, 1.0, 1.0}, b{1.0, 0.0, -3.0, 1.0, 1.0};
        for (int i = 0; i < g.n; ++i) w.values[i] = a.initial(g.x(i)) + b.initial(g.x(i));
        auto j = current_density(w);
        int i0 = static_cast<int>(std::round((0.0 - g.x_min) / g.dx()));
        CHECK(std::abs(g.x(i0)) < 1e-12);  // x = 0 is a grid point
        CHECK(std::abs(j[i0]) < 1e-10);
    }
    SUBCASE("consistency with R^2 dS/dx / m off nodes") {
        Grid g(-8.0, 8.0, 512);
        auto w = gaussian_packet(g, 1.2, 0.3, 1.1, 1.3, 0.9);
        auto j = current_density(w);
        auto pf = polar_decompose(w);
        auto ds = derivative_o4(g, pf.S);
        for (int i = 4; i < g.n - 4; ++i) {
            if (pf.node_mask[i] || pf.R[i] < 1e-6) continue;
            CHECK(j[i] == doctest::Approx(pf.R[i] * pf.R[i] * ds[i] / 1.3).epsilon(1e-5));
        }
    }
}

TEST_CASE("quantum_potential") {
    SUBCASE("plane wave: Q = 0") {
        Grid g(-5.0, 5.0, 256);
        double p = 8 * 2 * pi / (g.n * g.dx());
        auto w = plane_wave(g, p, 1.0, 1.0);
        auto q = quantum_potential(w);
        for (int i = 4; i < g.n - 4; ++i) CHECK(std::abs(q[i]) < 1e-8);
    }
    SUBCASE("harmonic ground state: Q = hbar w/2 - V, Q(0) = 0.5") {
        Grid g(-8.0, 8.0, 1025);  // odd count so x = 0 is a grid point
        Wavefunction w(g, 1.0, 1.0);
        for (int i = 0; i < g.n; ++i) w.values[i] = std::exp(-g.x(i) * g.x(i) / 2.0);
        w.normalize();
        auto q = quantum_potential(w);
        CHECK(q[g.n / 2] == doctest::Approx(0.5).epsilon(1e-8));
        for (double x : {-1.5, 0.8, 2.0}) {
            int i = static_cast<int>(std::round((x - g.x_min) / g.dx()));
            CHECK(q[i] == doctest::Approx(0.5 - 0.5 * g.x(i) * g.x(i)).epsilon(1e-6));
        }
    }
    SUBCASE("free Gaussian at rest: Q(0) = 1/4") {
        Grid g(-10.0, 10.0, 1025);
        auto w = gaussian_packet(g, 1.0, 0.0, 0.0, 1.0, 1.0);
        auto q = quantum_potential(w);
        CHECK(std::abs(g.x(g.n / 2)) < 1e-12);
        CHECK(q[g.n / 2] == doctest::Approx(0.25).epsilon(1e-8));
    }
    SUBCASE("node regions are flagged NaN, not extrapolated") {
        auto model = PotentialModel::infinite_well(1.0);
        auto w = well_eigenstate(model, 2, 255);  // node at the center point
        auto q = quantum_potential(w);
        int mid = w.grid.n / 2;
        CHECK(!std::isfinite(q[mid]));
    }
}

TEST_CASE("continuity and quantum-HJ residuals") {
    SUBCASE("plane wave frames: both residuals at round-off") {
        Grid g(-5.0, 5.0, 256);
        double p = 8 * 2 * pi / (g.n * g.dx());
        double E = p * p / 2.0;
        auto f1 = plane_wave(g, p, 1.0, 1.0, 0.0, E);
        auto f2 = plane_wave(g, p, 1.0, 1.0, 0.01, E);
        auto rc = continuity_residual(f1, f2);
        auto rq = qhj_residual(f1, f2, PotentialModel::free_particle());
        CHECK(residual_l2(g, rc, -4.0, 4.0) < 1e-8);
        CHECK(residual_l2(g, rq, -4.0, 4.0) < 1e-6);
    }
    SUBCASE("stationary eigenstate: continuity residual vanishes") {
        auto model = PotentialModel::infinite_well(1.0);
        auto psi0 = well_eigenstate(model, 3, 256);
        auto frames = propagate_exact(psi0, model, 0.02, 1e-3, {10});
        auto rc = continuity_residual(frames[0], frames[1]);
        CHECK(residual_l2(psi0.grid, rc, 0.1, 0.9) < 1e-9);
    }
    SUBCASE("harmonic ground state: dS/dt = -hbar w / 2 balances V + Q") {
        auto model = PotentialModel::harmonic(1.0, 1.0, 1.0);
        auto run = [&](int n) {
            Grid g(-8.0, 8.0, n);
            auto mk = [&](double t) {
                Wavefunction w(g, 1.0, 1.0);
                for (int i = 0; i < g.n; ++i)
                    w.values[i] = std::exp(-g.x(i) * g.x(i) / 2.0) * std::exp(-I * t / 2.0);
                double nn = w.norm();
                for (auto& v : w.values) v /= nn;
                w.time = t;
                return w;
            };
            auto rq = qhj_residual(mk(0.0), mk(0.05), model);
            return residual_l2(g, rq, -3.0, 3.0);
        };
        double r512 = run(512), r1024 = run(1024);
        CHECK(r512 < 5e-3);  // the pointwise balance holds to discretization error
        CHECK(r512 / r1024 == doctest::Approx(4.0).epsilon(0.2));  // and is O(h^2)
    }
    SUBCASE("free Gaussian: halving dt and dx cuts both residuals ~4x") {
        auto run = [](int n, double tau) {
            Grid g(-16.0, 16.0, n);
            oracle::GaussianPacket pk{1.0, 0.0, 1.0, 1.0, 1.0};
            double t1 = 0.5 - tau / 2, t2 = 0.5 + tau / 2;
            std::vector<complexd> v1(g.n), v2(g.n);
            for (int i = 0; i < g.n; ++i) {
                v1[i] = pk.evolved(g.x(i), t1);
                v2[i] = pk.evolved(g.x(i), t2);
            }
            auto f1 = from_values(g, v1, t1, 1.0, 1.0);
            auto f2 = from_values(g, v2, t2, 1.0, 1.0);
            auto rc = continuity_residual(f1, f2);
            auto rq = qhj_residual(f1, f2, PotentialModel::free_particle());
            return std::pair<double, double>{residual_l2(g, rc, -4.0, 5.0),
                                             residual_l2(g, rq, -4.0, 5.0)};
        };
        auto [rc1, rq1] = run(512, 0.04);
        auto [rc2, rq2] = run(1024, 0.02);
        CHECK(rc1 / rc2 == doctest::Approx(4.0).epsilon(0.15));
        CHECK(rq1 / rq2 == doctest::Approx(4.0).epsilon(0.15));
    }
}

TEST_CASE("autocorrelation") {
    auto model = PotentialModel::infinite_well(1.0);
    auto e2 = well_eigenstate(model, 2, 256);
    auto e3 = well_eigenstate(model, 3, 256);
    CHECK(autocorrelation(e2, e2) == doctest::Approx(1.0));
    CHECK(autocorrelation(e2, e3) == doctest::Approx(0.0).epsilon(1e-12));

    auto ho = PotentialModel::harmonic(1.0, 1.0, 1.0);
    Grid g(-10.0, 10.0, 512);
    auto st = initial_coherent(g, ho, 2.0);
    auto frames = propagate_exact(st.psi, ho, 2 * pi, 2e-4, {31416});
    CHECK(autocorrelation(st.psi, frames.back()) == doctest::Approx(1.0).epsilon(1e-8));

    Grid g2(-5.0, 5.0, 128);
    auto other = gaussian_packet(g2, 1.0, 0.0, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(autocorrelation(st.psi, other), grid_mismatch_error);
}
