#pragma once

#include <memory>
#include <vector>

#include "delayfb/chi.hpp"
#include "delayfb/kernels.hpp"
#include "delayfb/model.hpp"

namespace delayfb {

// Symmetrically ordered characteristic function <D(lambda,t)> between
// coherent matrix elements <beta| ... |alpha>.
//
// Exponents are accumulated in log space and only exponentiated on output;
// results whose magnitude falls below the double range are reported as zero
// with the underflow flag set.

enum class CharFnBranch { Exact, SmallTau, EarlyTime };

struct CharFnResult {
    Complex value;
    Complex log_value;
    CharFnBranch branch;
    bool underflowed = false;
};

// <beta| D(lambda) |alpha> at t = 0: <beta|alpha> exp(-|l|^2/2 + l b* - l* a).
Complex displacement_matrix_element(Complex lambda, Complex alpha, Complex beta);
Complex log_displacement_matrix_element(Complex lambda, Complex alpha, Complex beta);

// lambda-parameterized displacement response kernels. Everything here is
// evaluated by direct adaptive quadrature; the per-config lattice cache in
// CharFnEvaluator is the fast path and is cross-checked against these.
//
//   v(t)          [D(lambda,t), a(0)] / D            "V_lambda"
//   r(t)          [D(lambda,t), dB(t')] / (D dt')    "R_lambda"
//   rf(t)         feedback-noise analogue            "R_lambda^f"
//   w(u, t)       the W_lambda(u, t) double integral
//   cross(t, t2)  the Lambda_lambda(t, t2) integral
class CharFnKernels {
public:
    CharFnKernels(const FeedbackConfig& config, Complex lambda);

    Complex v(double t) const;
    Complex r(double t) const;
    Complex rf(double t) const;
    Complex w(double u, double t) const;
    Complex cross(double t, double t2) const;

    const FeedbackConfig& config() const { return cfg_; }
    Complex lambda() const { return lambda_; }

private:
    FeedbackConfig cfg_;
    Complex lambda_;
    KernelSet kernels_;

    double cumulative_growth(double x) const; // Int_0^x e^{gamma u/2} chi(u) du
    friend Complex hamiltonian_exponent_direct(const CharFnKernels&, double, Complex,
                                               Complex);
};

// H(t): the exact log-derivative of <D(lambda,t)>, evaluated by direct
// quadrature of the nested kernel integrals.
Complex hamiltonian_exponent(double t, Complex lambda, Complex alpha, Complex beta,
                             const FeedbackConfig& config);

// Caches chi, the noise kernels and the cumulative growth integral on a
// kink-aligned lattice (step <= min(tau/16, 1/(64 gamma))) so that the
// triple-nested W integrals reduce to O(n^2) lattice sums per evaluation.
// Safe to share across threads once constructed.
class CharFnEvaluator {
public:
    CharFnEvaluator(const FeedbackConfig& config, double t_max);
    ~CharFnEvaluator();
    CharFnEvaluator(CharFnEvaluator&&) noexcept;
    CharFnEvaluator& operator=(CharFnEvaluator&&) noexcept;

    // Exact solution exp[Int_0^t H] times the initial matrix element.
    CharFnResult exact(Complex lambda, double t, Complex alpha, Complex beta) const;

    // Int_0^t H(s) ds alone.
    Complex exponent_integral(Complex lambda, double t, Complex alpha,
                              Complex beta) const;

    const FeedbackConfig& config() const;
    double t_max() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CharFnResult charfn_exact(Complex lambda, double t, Complex alpha, Complex beta,
                          const FeedbackConfig& config);

// First order in gamma*tau, phi = 0, valid t >= 2 tau:
// <beta|alpha> exp{-A|l|^2 + B1 l^2 + B2 l*^2 + C l + D l*}.
struct SmallTauCoefficients {
    Complex a;  // A(t)
    Complex b1; // B1(t) = conj(B2)
    Complex b2;
    Complex c;
    Complex d;
    double f0; // (1 - e^{-(1-2k) gamma t}) / (1-2k)
    double f1; // (1 + gamma t k) e^{-(1-2k) gamma t} + k f0
};

SmallTauCoefficients small_tau_coefficients(double t, Complex alpha, Complex beta,
                                            const FeedbackConfig& config);

CharFnResult charfn_small_tau(Complex lambda, double t, Complex alpha, Complex beta,
                              const FeedbackConfig& config);

// Exact closed-form exponent on 0 <= t <= 2 tau (no quadrature): the
// feedback terms are off below tau and involve only single-delay kernel
// segments below 2 tau, where every nested integral is elementary.
CharFnResult charfn_early(Complex lambda, double t, Complex alpha, Complex beta,
                          const FeedbackConfig& config);

// Cat coherence <D(2 alpha0, t)> in the small-delay limit (phi = 0,
// Re alpha0 = 0). Real-valued; decays on the feedback-stretched
// decoherence time.
Complex coherence_function(double t, Complex alpha0, const FeedbackConfig& config);

// Log of the coherence function (the bracket is O(|alpha0|^2) and routinely
// drives the value below the double range).
double log_coherence_function(double t, Complex alpha0, const FeedbackConfig& config);

} // namespace delayfb
