#pragma once

#include <vector>

#include "delayfb/errors.hpp"

namespace delayfb {

// Numerical solution of the dimensionless delay equation
//
//   dZ/dxi = -Z(xi) + 2k Z(xi - y) Theta(xi - y),   Z(0) = z0,
//
// by the method of steps: the history on [0, y] is the pure decay
// z0 exp(-xi), after which classical RK4 marches with the delayed value
// reconstructed from the stored solution. The requested dx is snapped to
// divide y exactly so every kink p*y is a grid node.
//
// Maps onto the quadrature mean via xi = gamma t / 2, y = gamma tau / 2,
// k = g sin(theta - phi): Z(xi)/z0 = chi(2 xi / gamma).
//
// The delayed value at RK4 midpoints falls between grid nodes; `interp`
// selects how it is reconstructed. Hermite (cubic, using the stored
// derivatives) keeps the solver at full fourth order and is the default;
// Linear is retained for diagnostics but degrades the global order.
enum class DelayInterp { Linear, Hermite };

struct DdeSolution {
    double z0 = 0.0;
    double k = 0.0;
    double y = 0.0;
    double dx = 0.0; // resolved step after snapping
    std::vector<double> xi;
    std::vector<double> z;

    // Piecewise-cubic (Hermite) evaluation at an arbitrary point of the grid.
    double at(double x) const;

private:
    friend DdeSolution dde_oracle(double, double, double, double, double, DelayInterp);
    std::vector<double> zdot;
    std::vector<double> zdot_left;
};

DdeSolution dde_oracle(double z0, double k, double y, double xi_max, double dx,
                       DelayInterp interp = DelayInterp::Hermite);

} // namespace delayfb
