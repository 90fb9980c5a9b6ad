#include "delayfb/chi.hpp"

#include <cmath>
#include <limits>

namespace delayfb {

namespace {

// (e^x - 1)/x, finite at x = 0.
double phi1(double x) {
    if (x == 0.0) return 1.0;
    if (std::abs(x) < 1e-300) return 1.0;
    return std::expm1(x) / x;
}

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

bool near_kink(double t, double tau) {
    if (tau <= 0.0) return false;
    double r = t / tau;
    double n = std::round(r);
    return n >= 1.0 && std::abs(r - n) < 1e-9;
}

} // namespace

// Sums sum_{n>=power_shift} k^(n-power_shift)/n! e^{-gamma dt_n/2} (gamma dt_n)^n
// with dt_n = t - n tau, or its termwise time derivative.
double ChiEvaluator::series(double t, int power_shift, bool derivative) const {
    const double gamma = config_.gamma();
    const double tau = config_.tau();
    const double k = config_.k();

    if (t < 0.0) return 0.0;

    long n_max;
    if (tau > 0.0) {
        double ratio = t / tau;
        if (ratio > static_cast<double>(term_cap_) + 1.0)
            throw Error(Error::Code::term_cap_exceeded,
                        "floor(t/tau) exceeds the series term cap; use the tau = 0 "
                        "closed form or the first-order expansion");
        n_max = static_cast<long>(std::floor(ratio));
        if (n_max > term_cap_)
            throw Error(Error::Code::term_cap_exceeded,
                        "floor(t/tau) exceeds the series term cap");
    } else {
        n_max = power_shift; // closed forms handle tau = 0; only used defensively
    }

    const double log_abs_k = (k != 0.0) ? std::log(std::abs(k)) : 0.0;
    const double sign_k = (k < 0.0) ? -1.0 : 1.0;

    KahanSum acc;
    for (long n = power_shift; n <= n_max; ++n) {
        double dt = t - static_cast<double>(n) * tau;
        if (dt < 0.0) {
            if (dt > -1e-12 * (tau > 0 ? tau : 1.0)) dt = 0.0; // rounding at a kink
            else break;
        }
        const double x = gamma * dt;
        const long p = n - power_shift; // exponent of k in this term

        if (k == 0.0 && p > 0) continue;

        if (mode_ == SummationMode::DirectKahan) {
            double kp = (p == 0) ? 1.0 : std::pow(k, static_cast<double>(p));
            double fact = std::tgamma(static_cast<double>(n) + 1.0);
            if (!derivative) {
                double xn = (n == 0) ? 1.0 : std::pow(x, static_cast<double>(n));
                double term = kp * xn / fact * std::exp(-0.5 * x);
                if (!std::isfinite(term))
                    throw Error(Error::Code::series_overflow,
                                "series term overflowed in direct summation; retry "
                                "with log-domain-signed");
                acc.add(term);
            } else {
                double xn = (n == 0) ? 1.0 : std::pow(x, static_cast<double>(n));
                double xnm1 = (n == 0)   ? 0.0
                              : (n == 1) ? 1.0
                                         : std::pow(x, static_cast<double>(n - 1));
                double term = kp / fact * std::exp(-0.5 * x) * gamma *
                              (static_cast<double>(n) * xnm1 - 0.5 * xn);
                if (!std::isfinite(term))
                    throw Error(Error::Code::series_overflow,
                                "series term overflowed in direct summation; retry "
                                "with log-domain-signed");
                acc.add(term);
            }
            continue;
        }

        // Log-domain: magnitude exp(L), sign tracked separately.
        const double sign_p = (p % 2 == 0) ? 1.0 : sign_k;
        const double base = static_cast<double>(p) * log_abs_k -
                            std::lgamma(static_cast<double>(n) + 1.0) - 0.5 * x;
        if (!derivative) {
            double L;
            if (n == 0) L = base;
            else if (x == 0.0) continue; // (gamma dt)^n vanishes
            else L = base + static_cast<double>(n) * std::log(x);
            if (L > 700.0)
                throw Error(Error::Code::series_overflow,
                            "series term exceeds the representable range");
            acc.add(sign_p * std::exp(L));
        } else {
            // d/dt term = gamma * term_magnitude * (n x^{n-1} - x^n / 2)
            if (n == 0) {
                acc.add(sign_p * (-0.5 * gamma) * std::exp(base));
                continue;
            }
            double part1; // n * x^(n-1) piece
            if (x == 0.0) {
                part1 = (n == 1) ? gamma * std::exp(base) : 0.0;
                acc.add(sign_p * part1);
                continue;
            }
            double L1 = base + std::log(static_cast<double>(n)) +
                        static_cast<double>(n - 1) * std::log(x);
            double L2 = base + static_cast<double>(n) * std::log(x);
            if (L1 > 700.0 || L2 > 700.0)
                throw Error(Error::Code::series_overflow,
                            "derivative series term exceeds the representable range");
            acc.add(sign_p * gamma * (std::exp(L1) - 0.5 * std::exp(L2)));
        }
    }
    return acc.sum;
}

double ChiEvaluator::value(double t) const {
    const double gamma = config_.gamma();
    const double k = config_.k();
    if (t < 0.0) return 0.0;
    if (config_.tau() == 0.0) return std::exp(-0.5 * gamma * (1.0 - 2.0 * k) * t);
    return series(t, 0, false);
}

ChiEvaluator::Derivative ChiEvaluator::derivative(double t) const {
    const double gamma = config_.gamma();
    const double k = config_.k();
    if (config_.tau() == 0.0)
        return {-0.5 * gamma * (1.0 - 2.0 * k) * value(t), false};
    return {series(t, 0, true), near_kink(t, config_.tau())};
}

double ChiEvaluator::shifted(double t) const {
    const double gamma = config_.gamma();
    const double k = config_.k();
    if (t < 0.0) return 0.0;
    if (config_.tau() == 0.0)
        return std::exp(-0.5 * gamma * t) * gamma * t * phi1(k * gamma * t);
    return series(t, 1, false);
}

double ChiEvaluator::shifted_derivative(double t) const {
    const double gamma = config_.gamma();
    const double k = config_.k();
    if (t < 0.0) return 0.0;
    if (config_.tau() == 0.0) {
        double s = shifted(t);
        return -0.5 * gamma * s + gamma * std::exp(-0.5 * gamma * (1.0 - 2.0 * k) * t);
    }
    return series(t, 1, true);
}

double chi(double t, const FeedbackConfig& config) {
    return ChiEvaluator(config).value(t);
}

double chi_derivative(double t, const FeedbackConfig& config) {
    return ChiEvaluator(config).derivative(t).value;
}

double chi_first_order(double t, const FeedbackConfig& config) {
    const double gamma = config.gamma();
    const double k = config.k();
    const double gt = gamma * t;
    const double gtau = gamma * config.tau();
    return (1.0 - 0.5 * k * (2.0 - gt * (1.0 - 2.0 * k)) * gtau) *
           std::exp(-0.5 * (1.0 - 2.0 * k) * gt);
}

Complex mean_quadrature(double t, Complex x0, const FeedbackConfig& config) {
    return x0 * chi(t, config);
}

Complex coherent_mean_element(Complex alpha, Complex beta, double phi) {
    Complex e_m(std::cos(phi), -std::sin(phi));
    return overlap(beta, alpha) * 0.5 * (alpha * e_m + std::conj(beta) / e_m);
}

} // namespace delayfb
