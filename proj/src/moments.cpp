#include "delayfb/moments.hpp"

#include <algorithm>
#include <cmath>

#include "delayfb/quadrature.hpp"

namespace delayfb {

namespace {

// Integration break points for an integrand containing chi(a - s) factors:
// kinks sit where a - s crosses a multiple of tau.
void add_kink_images(std::vector<double>& splits, double a, double tau, double upper) {
    if (tau <= 0.0) return;
    for (double s = a; s > 0.0; s -= tau)
        if (s < upper) splits.push_back(s);
}

double chi_product_integral(const ChiEvaluator& chi, double a, double b, double upper,
                            double tau) {
    // Int_0^upper chi(a - s) chi(b - s) ds, with a, b >= upper.
    if (!(upper > 0.0)) return 0.0;
    std::vector<double> splits;
    add_kink_images(splits, a, tau, upper);
    add_kink_images(splits, b, tau, upper);
    return quad::integrate_real(
        [&](double s) { return chi.value(a - s) * chi.value(b - s); }, 0.0, upper,
        splits);
}

} // namespace

double g_function(double t, double t2, const FeedbackConfig& config) {
    if (t < 0.0 || t2 < 0.0)
        throw Error(Error::Code::domain, "g_function requires non-negative times");
    const double tau = config.tau();
    const double k = config.k();
    ChiEvaluator chi(config);

    double acc = chi_product_integral(chi, t, t2, std::min(t, t2), tau);
    if (t2 >= tau)
        acc -= k * chi_product_integral(chi, t, t2 - tau, std::min(t, t2 - tau), tau);
    if (t >= tau)
        acc -= k * chi_product_integral(chi, t - tau, t2, std::min(t - tau, t2), tau);
    if (t >= tau && t2 >= tau)
        acc += k * k / config.eta() *
               chi_product_integral(chi, t - tau, t2 - tau, std::min(t - tau, t2 - tau),
                                    tau);
    return 0.25 * config.gamma() * acc;
}

Complex initial_second_moment(Complex alpha, Complex beta, double phi) {
    Complex e_m(std::cos(phi), -std::sin(phi));
    Complex mean = 0.5 * (alpha * e_m + std::conj(beta) * std::conj(e_m));
    return overlap(beta, alpha) * (mean * mean + 0.25);
}

Complex correlation(double t, double t2, Complex alpha, Complex beta,
                    const FeedbackConfig& config) {
    ChiEvaluator chi(config);
    return initial_second_moment(alpha, beta, config.phi()) * chi.value(t) *
               chi.value(t2) +
           overlap(beta, alpha) * g_function(t, t2, config);
}

double sigma2(double t, const FeedbackConfig& config) {
    const double tau = config.tau();
    if (t <= tau) return 0.5;
    const double k = config.k();
    if (k == 0.0) return 0.5;
    ChiEvaluator chi(config);
    double integral = quad::integrate_real(
        [&](double s) {
            double c = chi.value(s);
            return c * c;
        },
        0.0, t - tau, tau_knots(0.0, t - tau, tau));
    return 0.5 + 0.5 * config.gamma() / config.eta() * k * k * integral;
}

double sigma2_first_order(double t, const FeedbackConfig& config) {
    const double k = config.k();
    const double eta = config.eta();
    const double gt = config.gamma() * t;
    const double gtau = config.gamma() * config.tau();
    const double a = 1.0 - 2.0 * k;
    // (1 - e^{-a gt}) / a, finite at a = 0.
    double f0 = (a == 0.0) ? gt : -std::expm1(-a * gt) / a;
    double zeroth = 0.5 * (1.0 + k * k / eta * f0);
    double first = k * k / (2.0 * eta) *
                   ((1.0 + gt * k) * std::exp(-a * gt) + k * f0) * gtau;
    return zeroth - first;
}

Complex central_moment(int n, double t, Complex alpha, Complex beta,
                       const FeedbackConfig& config) {
    if (n < 0) throw Error(Error::Code::domain, "moment order must be >= 0");
    Complex ov = overlap(beta, alpha);
    if (n == 0) return ov;
    if (n % 2) return Complex(0.0, 0.0);
    double s2 = sigma2(t, config);
    double dfact = 1.0;
    for (int m = n - 1; m > 1; m -= 2) dfact *= m;
    return ov * dfact * std::pow(0.5 * s2, n / 2);
}

} // namespace delayfb
