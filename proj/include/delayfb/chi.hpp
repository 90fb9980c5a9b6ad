#pragma once

#include <complex>

#include "delayfb/model.hpp"

namespace delayfb {

enum class SummationMode {
    DirectKahan,     // naive term evaluation; overflows near n ~ 170
    LogDomainSigned, // sign(k)^n * exp(log-magnitude), Kahan-summed (default)
};

// Normalized mean decay chi(t) of the measured quadrature: the delay series
//
//   chi(t) = sum_{n=0}^{floor(t/tau)} k^n/n! * exp(-gamma(t-n tau)/2)
//            * (gamma(t-n tau))^n,            k = g sin(theta - phi),
//
// together with its termwise derivative and the companion "shifted" series
//
//   shifted(t) = (chi(t) - exp(-gamma t/2)) / k
//              = sum_{n>=1} k^(n-1)/n! * exp(-gamma(t-n tau)/2) * (gamma(t-n tau))^n,
//
// which is the analytic continuation of the (chi - decay)/k ratios appearing
// in the noise kernels; it stays finite as k -> 0. For tau = 0 the closed
// forms exp(-gamma(1-2k)t/2) etc. are used.
//
// chi has a kink (discontinuous p-th derivative) at every t = p*tau.
class ChiEvaluator {
public:
    explicit ChiEvaluator(const FeedbackConfig& config, long term_cap = 4000,
                          SummationMode mode = SummationMode::LogDomainSigned)
        : config_(config), term_cap_(term_cap), mode_(mode) {}

    struct Derivative {
        double value;
        bool at_kink; // true when t sits on a kink; value is the right limit
    };

    double value(double t) const;
    Derivative derivative(double t) const;
    double shifted(double t) const;
    double shifted_derivative(double t) const;

    const FeedbackConfig& config() const { return config_; }
    long term_cap() const { return term_cap_; }
    SummationMode mode() const { return mode_; }

private:
    FeedbackConfig config_;
    long term_cap_;
    SummationMode mode_;

    double series(double t, int power_shift, bool derivative) const;
};

// Convenience wrappers over a default-configured evaluator.
double chi(double t, const FeedbackConfig& config);
double chi_derivative(double t, const FeedbackConfig& config);

// First order in gamma*tau (intended for gamma*tau << 1, t > tau):
//   {1 - (k/2)(2 - gamma t (1-2k)) gamma tau} * exp(-(1-2k) gamma t / 2).
double chi_first_order(double t, const FeedbackConfig& config);

// <X_phi(t)> = x0 * chi(t).
Complex mean_quadrature(double t, Complex x0, const FeedbackConfig& config);

// Initial matrix element <beta| X_phi |alpha> = <beta|alpha>(alpha e^{-i phi}
// + beta^* e^{i phi})/2, the x0 used for coherent-state pairs.
Complex coherent_mean_element(Complex alpha, Complex beta, double phi);

} // namespace delayfb
