#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "delayfb/errors.hpp"

namespace delayfb {

using Complex = std::complex<double>;

// Physical parameter set of the feedback loop:
//   gamma  cavity damping rate (> 0)
//   g      feedback gain
//   theta  feedback phase (radians)
//   phi    homodyne measurement phase (radians)
//   tau    feedback loop delay (>= 0)
//   eta    homodyne detection efficiency, (0, 1]
//
// The combination k = g*sin(theta - phi) drives every decay formula and is
// cached at construction. Angles are used as given, no wrapping.
class FeedbackConfig {
public:
    FeedbackConfig(double gamma, double g, double theta, double phi, double tau,
                   double eta = 1.0);

    double gamma() const { return gamma_; }
    double g() const { return g_; }
    double theta() const { return theta_; }
    double phi() const { return phi_; }
    double tau() const { return tau_; }
    double eta() const { return eta_; }

    // g * sin(theta - phi), cached.
    double k() const { return k_; }

private:
    double gamma_, g_, theta_, phi_, tau_, eta_;
    double k_;
};

// Coherent-state inner product <beta|alpha> and its exact logarithm.
Complex overlap(Complex beta, Complex alpha);
Complex log_overlap(Complex beta, Complex alpha);

enum class NormMode { AsGiven, Renormalize };

// Initial cavity state as a weighted sum of coherent amplitudes,
// rho(0) = sum_ij c_i c_j^* |alpha_i><alpha_j|.
class CoherentSuperposition {
public:
    struct Term {
        Complex alpha;
        Complex coeff;
    };

    CoherentSuperposition(std::vector<Term> terms, NormMode mode);

    const std::vector<Term>& terms() const { return terms_; }
    NormMode norm_mode() const { return mode_; }

    // Density-matrix weight N_ij = c_i c_j^*.
    Complex weight(std::size_t i, std::size_t j) const;

    // sum_ij c_i c_j^* <alpha_j|alpha_i>; equals 1 after renormalization.
    double norm_squared() const;

private:
    std::vector<Term> terms_;
    NormMode mode_;
};

// Even cat state N(|alpha0> + |-alpha0>), stored with renormalized
// coefficients so that norm_squared() == 1.
CoherentSuperposition cat_state(Complex alpha0);

// Time axis carrying the kink positions n*tau where the delay series loses
// smoothness; quadrature must split there.
struct TimeGrid {
    double t_start;
    double t_end;
    int n_points;
    std::vector<double> knots;

    TimeGrid(double t_start, double t_end, int n_points, double tau);

    std::vector<double> points() const;
};

// Multiples of tau inside (t0, t1), ascending. Empty when tau == 0.
std::vector<double> tau_knots(double t0, double t1, double tau);

} // namespace delayfb
