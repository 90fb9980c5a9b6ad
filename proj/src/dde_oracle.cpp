#include "delayfb/dde_oracle.hpp"

#include <cmath>
#include <cstddef>

namespace delayfb {

namespace {

double hermite(double z0, double d0, double z1, double d1, double h, double s) {
    // s in [0,1] across a cell of width h
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * z0 + (s3 - 2 * s2 + s) * h * d0 +
           (-2 * s3 + 3 * s2) * z1 + (s3 - s2) * h * d1;
}

} // namespace

double DdeSolution::at(double x) const {
    if (xi.empty()) return 0.0;
    if (x <= xi.front()) return z.front();
    if (x >= xi.back()) return z.back();
    std::size_t i = static_cast<std::size_t>((x - xi.front()) / dx);
    if (i >= xi.size() - 1) i = xi.size() - 2;
    double s = (x - xi[i]) / dx;
    return hermite(z[i], zdot[i], z[i + 1], zdot_left[i + 1], dx, s);
}

DdeSolution dde_oracle(double z0, double k, double y, double xi_max, double dx,
                       DelayInterp interp) {
    if (!(dx > 0.0)) throw Error(Error::Code::domain, "dx must be positive");
    if (!(y >= 0.0)) throw Error(Error::Code::domain, "y must be non-negative");
    if (!(xi_max > 0.0)) throw Error(Error::Code::domain, "xi_max must be positive");
    if (y > 0.0 && dx > y / 4.0)
        throw Error(Error::Code::step_too_large,
                    "dx must not exceed y/4 so the delay is resolved");

    DdeSolution sol;
    sol.z0 = z0;
    sol.k = k;
    sol.y = y;

    long m = 0; // steps per delay
    double h;
    if (y > 0.0) {
        m = std::lround(y / dx);
        if (m < 4) m = 4;
        h = y / static_cast<double>(m);
    } else {
        h = dx;
    }
    sol.dx = h;

    const long n_total = static_cast<long>(std::ceil(xi_max / h - 1e-12));
    const std::size_t n = static_cast<std::size_t>(n_total) + 1;
    sol.xi.resize(n);
    sol.z.resize(n);
    sol.zdot.resize(n);
    sol.zdot_left.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.xi[i] = h * static_cast<double>(i);

    // delayed value Z(xi - y) for xi = grid node `i` plus `frac` cells
    auto delayed = [&](std::size_t i, double frac) -> double {
        if (y == 0.0) return 0.0; // unused; the y = 0 branch folds the term in
        long j = static_cast<long>(i) - m;
        if (frac == 0.0) return j >= 0 ? sol.z[static_cast<std::size_t>(j)] : 0.0;
        if (j < 0) return 0.0;
        std::size_t jj = static_cast<std::size_t>(j);
        if (interp == DelayInterp::Linear)
            return (1.0 - frac) * sol.z[jj] + frac * sol.z[jj + 1];
        return hermite(sol.z[jj], sol.zdot[jj], sol.z[jj + 1],
                       sol.zdot_left[jj + 1], h, frac);
    };

    if (y == 0.0) {
        // No delay: dZ/dxi = (2k - 1) Z, plain RK4.
        const double a = 2.0 * k - 1.0;
        sol.z[0] = z0;
        sol.zdot[0] = a * z0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double zi = sol.z[i];
            double k1 = a * zi;
            double k2 = a * (zi + 0.5 * h * k1);
            double k3 = a * (zi + 0.5 * h * k2);
            double k4 = a * (zi + h * k3);
            sol.z[i + 1] = zi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            sol.zdot[i + 1] = a * sol.z[i + 1];
        }
        sol.zdot_left = sol.zdot;
        return sol;
    }

    // History segment [0, y]: the delay term is off, Z = z0 exp(-xi) exactly.
    const std::size_t hist_end = static_cast<std::size_t>(m) < n - 1
                                     ? static_cast<std::size_t>(m)
                                     : n - 1;
    for (std::size_t i = 0; i <= hist_end; ++i) {
        sol.z[i] = z0 * std::exp(-sol.xi[i]);
        sol.zdot[i] = -sol.z[i];
        sol.zdot_left[i] = sol.zdot[i];
    }
    // Right-limit derivative at the first kink (the delay term switches on);
    // the left limit, needed by the Hermite cell ending there, is pure decay.
    if (hist_end == static_cast<std::size_t>(m))
        sol.zdot[hist_end] += 2.0 * k * sol.z[0];

    for (std::size_t i = hist_end; i + 1 < n; ++i) {
        double zi = sol.z[i];
        double zd0 = delayed(i, 0.0);
        double zdm = delayed(i, 0.5);
        double zd1 = delayed(i + 1, 0.0);
        double k1 = -zi + 2.0 * k * zd0;
        double k2 = -(zi + 0.5 * h * k1) + 2.0 * k * zdm;
        double k3 = -(zi + 0.5 * h * k2) + 2.0 * k * zdm;
        double k4 = -(zi + h * k3) + 2.0 * k * zd1;
        sol.z[i + 1] = zi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        sol.zdot[i + 1] = -sol.z[i + 1] + 2.0 * k * zd1;
        sol.zdot_left[i + 1] = sol.zdot[i + 1];
    }
    return sol;
}

} // namespace delayfb
