#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "delayfb/errors.hpp"

namespace delayfb::quad {

// Adaptive composite Simpson with Richardson acceptance, pre-split at the
// supplied interior break points (chi and the noise kernels have derivative
// kinks at multiples of tau; Simpson loses its order across them).
//
// The tolerance is absolute and distributed over the pre-split segments in
// proportion to their length. Exceeding max_depth raises quadrature_failure.

namespace detail {

template <typename T, typename F>
T simpson_rec(const F& f, double a, double b, T fa, T fm, T fb, T whole, double tol,
              int depth, int max_depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    T flm = f(lm);
    T frm = f(rm);
    T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    T s2 = left + right;
    if (std::abs(s2 - whole) <= 15.0 * tol || (b - a) < 1e-14 * (std::abs(a) + 1.0))
        return s2 + (s2 - whole) / 15.0;
    if (depth >= max_depth)
        throw Error(Error::Code::quadrature_failure,
                    "adaptive Simpson did not reach tolerance");
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

template <typename T, typename F>
T segment(const F& f, double a, double b, double tol, int max_depth) {
    if (!(b > a)) return T{};
    // Endpoints are sampled a hair inside the segment: split points sit on
    // Theta-function jumps, and the segment must see its own side's limit.
    double eps = 1e-12 * (b - a);
    T fa = f(a + eps);
    T fb = f(b - eps);
    T fm = f(0.5 * (a + b));
    T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0, max_depth);
}

} // namespace detail

template <typename T, typename F>
T integrate(const F& f, double a, double b, const std::vector<double>& splits,
            double abs_tol = 1e-11, int max_depth = 40) {
    if (!(b > a)) return T{};
    std::vector<double> pts;
    pts.push_back(a);
    for (double s : splits)
        if (s > a && s < b) pts.push_back(s);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    T total{};
    double len = b - a;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double tol = abs_tol * std::max((pts[i + 1] - pts[i]) / len, 0.02);
        total += detail::segment<T>(f, pts[i], pts[i + 1], tol, max_depth);
    }
    return total;
}

template <typename F>
double integrate_real(const F& f, double a, double b, const std::vector<double>& splits,
                      double abs_tol = 1e-11, int max_depth = 40) {
    return integrate<double>(f, a, b, splits, abs_tol, max_depth);
}

template <typename F>
std::complex<double> integrate_complex(const F& f, double a, double b,
                                       const std::vector<double>& splits,
                                       double abs_tol = 1e-11, int max_depth = 40) {
    return integrate<std::complex<double>>(f, a, b, splits, abs_tol, max_depth);
}

// Composite Simpson on n uniform cells (n rounded up to even), non-adaptive.
// Used where the integrand is already sampled or known to be smooth.
template <typename T, typename F>
T fixed_simpson(const F& f, double a, double b, int n) {
    if (!(b > a)) return T{};
    if (n < 2) n = 2;
    if (n % 2) ++n;
    double h = (b - a) / n;
    T acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * (h / 3.0);
}

} // namespace delayfb::quad
