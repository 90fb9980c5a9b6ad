#pragma once

#include "delayfb/model.hpp"

namespace delayfb {

// Marginal probability distribution of the measured quadrature and the
// cat-state interference analysis built on it.
//
// Convention note: the Gaussian weight is exp(-[..]^2 / sigma2) / sqrt(pi
// sigma2) with sigma2 the doubled variance (1/2 for a coherent
// state), i.e. sigma2 is TWICE the usual Gaussian variance.

// P(x, t) for a general coherent superposition; the imaginary parts of the
// cross terms cancel pairwise. Throws if the residual imaginary part
// exceeds 1e-10.
double marginal_pdf(double x, double t, const CoherentSuperposition& state,
                    const FeedbackConfig& config);

// Fringe-visibility exponent 1 - chi(t)^2 / (2 sigma2(t)); multiplies the
// log-overlap in the cat interference term. Distinct from the detection
// efficiency, which conventionally shares the same Greek letter.
double visibility_exponent(double t, const FeedbackConfig& config);

// Snapshot of the cat-state decomposition at one time: the two Gaussian
// envelopes, the fringe frequency and the visibility suppression factor.
struct CatFringeReport {
    double t;
    double chi;
    double sigma2;
    double envelope_offset;       // Re{alpha0 e^{-i phi}} chi(t)
    double omega_slope;           // fringe phase per unit x
    double visibility_exponent;   // the exponent eta(t) above
    double overlap_factor;        // <alpha0|-alpha0>^eta(t)
    double norm2;                 // squared normalization of the cat weights

    double p_plus(double x) const;  // Gaussian envelope of |+alpha0>
    double p_minus(double x) const; // Gaussian envelope of |-alpha0>
};

CatFringeReport cat_fringe_report(double t, Complex alpha0,
                                  const FeedbackConfig& config);

// Closed-form cat marginal: norm2 {p+^2 + p-^2 + 2 p+ p- cos(Omega x)
// * overlap_factor}. Equals marginal_pdf on cat_state(alpha0).
double cat_pdf(double x, double t, Complex alpha0, const FeedbackConfig& config);
double cat_pdf(double x, const CatFringeReport& report);

struct DecoherenceTime {
    double value;          // 1 / (2 gamma |alpha0|^2 (1-k)^2); +inf at k = 1
    bool regime_mismatch;  // formula derived for tau = 0, eta = 1 only
};

DecoherenceTime decoherence_time(const FeedbackConfig& config, Complex alpha0);

// (P_max - P_min)/(P_max + P_min) over the central lobe |x| <= 1, sampled on
// a uniform grid fine enough for the fringe period. Artifact-level metric.
double fringe_contrast(double t, Complex alpha0, const FeedbackConfig& config,
                       int n_samples = 4001);

} // namespace delayfb
