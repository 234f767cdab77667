#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "qdyn/common.hpp"

namespace qdyn {

using complexd = std::complex<double>;

// Uniform spatial grid, endpoints inclusive.
struct Grid {
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 0;

    Grid() = default;
    Grid(double lo, double hi, int npts) : x_min(lo), x_max(hi), n(npts) {
        if (!(hi > lo) || npts < 2) throw config_error("grid: need x_max > x_min and n >= 2");
    }

    double dx() const { return (x_max - x_min) / (n - 1); }
    double x(int i) const { return x_min + i * dx(); }
    bool contains(double xv) const { return xv >= x_min && xv <= x_max; }

    std::vector<double> points() const {
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = x(i);
        return xs;
    }

    bool operator==(const Grid& o) const {
        return x_min == o.x_min && x_max == o.x_max && n == o.n;
    }
};

// l2-style quadrature: h * sum. For states decaying at the edges (all states
// this library propagates) this matches the trapezoid rule to round-off and
// is exactly conserved by both propagators.
inline double quad_sum(const Grid& g, const std::vector<double>& f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * g.dx();
}

inline complexd quad_sum(const Grid& g, const std::vector<complexd>& f) {
    complexd s = 0.0;
    for (const complexd& v : f) s += v;
    return s * g.dx();
}

// Cubic 4-point Lagrange interpolation on a uniform grid. Clamps the stencil
// at the edges (degrades to one-sided cubic there).
template <typename T>
T interp_cubic(const Grid& g, const std::vector<T>& f, double xv) {
    if (!g.contains(xv)) throw domain_error("interp_cubic: x outside grid");
    double s = (xv - g.x_min) / g.dx();
    int i1 = static_cast<int>(std::floor(s));
    if (i1 < 1) i1 = 1;
    if (i1 > g.n - 3) i1 = g.n - 3;
    double u = s - i1;  // in [-1, 2] near edges, [0, 1] inside
    double c0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    double c1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    double c2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    double c3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return c0 * f[i1 - 1] + c1 * f[i1] + c2 * f[i1 + 1] + c3 * f[i1 + 2];
}

template <typename T>
T interp_linear(const Grid& g, const std::vector<T>& f, double xv) {
    if (!g.contains(xv)) throw domain_error("interp_linear: x outside grid");
    double s = (xv - g.x_min) / g.dx();
    int i = static_cast<int>(std::floor(s));
    if (i < 0) i = 0;
    if (i > g.n - 2) i = g.n - 2;
    double u = s - i;
    return (1.0 - u) * f[i] + u * f[i + 1];
}

// Second-order centered first derivative (one-sided second order at edges).
inline std::vector<double> derivative_o2(const Grid& g, const std::vector<double>& f) {
    int n = g.n;
    double h = g.dx();
    std::vector<double> d(n);
    for (int i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2 * h);
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    d[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
    return d;
}

// Fourth-order centered first derivative; falls back to lower order in the
// two cells adjacent to each edge.
template <typename T>
std::vector<T> derivative_o4(const Grid& g, const std::vector<T>& f) {
    int n = g.n;
    double h = g.dx();
    std::vector<T> d(n);
    for (int i = 2; i + 2 < n; ++i)
        d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12 * h);
    d[1] = (f[2] - f[0]) / (2 * h);
    d[n - 2] = (f[n - 1] - f[n - 3]) / (2 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2 * h);
    return d;
}

// Fourth-order centered second derivative with O(h^2) edge fallback.
inline std::vector<double> second_derivative_o4(const Grid& g, const std::vector<double>& f) {
    int n = g.n;
    double h2 = g.dx() * g.dx();
    std::vector<double> d(n);
    for (int i = 2; i + 2 < n; ++i)
        d[i] = (-f[i + 2] + 16 * f[i + 1] - 30 * f[i] + 16 * f[i - 1] - f[i - 2]) / (12 * h2);
    for (int i : {1, n - 2}) d[i] = (f[i + 1] - 2 * f[i] + f[i - 1]) / h2;
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2;
    d[n - 1] = (2 * f[n - 1] - 5 * f[n - 2] + 4 * f[n - 3] - f[n - 4]) / h2;
    return d;
}

}  // namespace qdyn
