#pragma once

#include "delayfb/chi.hpp"
#include "delayfb/model.hpp"

namespace delayfb {

// Second-moment machinery of the measured quadrature: the two-time noise
// integral G(t,t'), the correlation C(t,t'), the doubled variance
// sigma2(t) (1/2 for a coherent state in this convention), and the Gaussian
// central-moment ladder.
//
// All quadrature is adaptive Simpson pre-split at multiples of tau, absolute
// tolerance 1e-11.

// The four-integral noise term of the correlation function. Symmetric in
// (t, t2); zero when either argument is zero.
double g_function(double t, double t2, const FeedbackConfig& config);

// Initial second moment <beta| X_phi^2 |alpha> for a coherent pair,
// <beta|alpha> [ ((alpha e^{-i phi} + beta^* e^{i phi})/2)^2 + 1/4 ].
Complex initial_second_moment(Complex alpha, Complex beta, double phi);

// C(t,t') = C(0,0) chi(t) chi(t') + <beta|alpha> G(t,t').
Complex correlation(double t, double t2, Complex alpha, Complex beta,
                    const FeedbackConfig& config);

// sigma2(t) = 1/2 + (gamma k^2 / 2 eta) Theta(t - tau) Int_0^{t-tau} chi^2.
// Equals 1/2 exactly for t <= tau.
double sigma2(double t, const FeedbackConfig& config);

// First order in gamma*tau (valid t > tau; exact at tau = 0).
double sigma2_first_order(double t, const FeedbackConfig& config);

// Central moment about the scaled initial mean:
//   0 for odd n, <beta|alpha> (n-1)!!/2^{n/2} [sigma2(t)]^{n/2} for even n.
Complex central_moment(int n, double t, Complex alpha, Complex beta,
                       const FeedbackConfig& config);

} // namespace delayfb
