#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qdyn/common.hpp"

namespace qdyn {

enum class PotentialKind { FreeParticle, HarmonicOscillator, InfiniteWell, PolynomialWell };

// A physical system: potential shape, mass, and hbar. hbar is a tunable model
// parameter so one scenario can be swept across the semiclassical regime.
// Immutable after construction; safe to share across workers.
struct PotentialModel {
    PotentialKind kind = PotentialKind::FreeParticle;
    double mass = 1.0;
    double hbar = 1.0;
    double omega = 0.0;                // HarmonicOscillator
    double length = 0.0;               // InfiniteWell
    std::vector<double> coefficients;  // PolynomialWell, V = sum c_k x^k

    static PotentialModel free_particle(double m = 1.0, double hb = 1.0) {
        PotentialModel p;
        p.kind = PotentialKind::FreeParticle;
        p.set_scales(m, hb);
        return p;
    }

    static PotentialModel harmonic(double om, double m = 1.0, double hb = 1.0) {
        if (!(om > 0)) throw config_error("harmonic: omega must be > 0");
        PotentialModel p;
        p.kind = PotentialKind::HarmonicOscillator;
        p.omega = om;
        p.set_scales(m, hb);
        return p;
    }

    static PotentialModel infinite_well(double L, double m = 1.0, double hb = 1.0) {
        if (!(L > 0)) throw config_error("infinite_well: L must be > 0");
        PotentialModel p;
        p.kind = PotentialKind::InfiniteWell;
        p.length = L;
        p.set_scales(m, hb);
        return p;
    }

    static PotentialModel polynomial_well(std::vector<double> coeffs, double m = 1.0,
                                          double hb = 1.0) {
        PotentialModel p;
        p.kind = PotentialKind::PolynomialWell;
        p.coefficients = std::move(coeffs);
        p.set_scales(m, hb);
        return p;
    }

    bool has_walls() const { return kind == PotentialKind::InfiniteWell; }

    bool in_domain(double x) const {
        if (kind == PotentialKind::InfiniteWell) return x > 0.0 && x < length;
        return true;
    }

    double evaluate(double x) const {
        switch (kind) {
            case PotentialKind::FreeParticle:
                return 0.0;
            case PotentialKind::HarmonicOscillator:
                return 0.5 * mass * omega * omega * x * x;
            case PotentialKind::InfiniteWell:
                if (!in_domain(x))
                    throw domain_error("infinite_well: V evaluated at or beyond a wall, x=" +
                                       std::to_string(x));
                return 0.0;
            case PotentialKind::PolynomialWell: {
                double v = 0.0;
                for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
                    v = v * x + *it;
                return v;
            }
        }
        return 0.0;
    }

    // dV/dx, analytic.
    double gradient(double x) const {
        switch (kind) {
            case PotentialKind::FreeParticle:
                return 0.0;
            case PotentialKind::HarmonicOscillator:
                return mass * omega * omega * x;
            case PotentialKind::InfiniteWell:
                if (!in_domain(x)) throw domain_error("infinite_well: dV/dx beyond a wall");
                return 0.0;
            case PotentialKind::PolynomialWell: {
                if (coefficients.size() < 2) return 0.0;
                double v = 0.0;
                for (std::size_t k = coefficients.size() - 1; k >= 1; --k)
                    v = v * x + k * coefficients[k];
                return v;
            }
        }
        return 0.0;
    }

    // d2V/dx2, analytic; drives the tangent (variational) equations.
    double curvature(double x) const {
        switch (kind) {
            case PotentialKind::FreeParticle:
                return 0.0;
            case PotentialKind::HarmonicOscillator:
                return mass * omega * omega;
            case PotentialKind::InfiniteWell:
                if (!in_domain(x)) throw domain_error("infinite_well: d2V/dx2 beyond a wall");
                return 0.0;
            case PotentialKind::PolynomialWell: {
                if (coefficients.size() < 3) return 0.0;
                double v = 0.0;
                for (std::size_t k = coefficients.size() - 1; k >= 2; --k)
                    v = v * x + k * (k - 1) * coefficients[k];
                return v;
            }
        }
        return 0.0;
    }

    std::string kind_name() const {
        switch (kind) {
            case PotentialKind::FreeParticle: return "free";
            case PotentialKind::HarmonicOscillator: return "harmonic";
            case PotentialKind::InfiniteWell: return "infinite_well";
            case PotentialKind::PolynomialWell: return "polynomial_well";
        }
        return "?";
    }

  private:
    void set_scales(double m, double hb) {
        if (!(m > 0)) throw config_error("model: mass must be > 0");
        if (!(hb > 0)) throw config_error("model: hbar must be > 0");
        mass = m;
        hbar = hb;
    }
};

}  // namespace qdyn
