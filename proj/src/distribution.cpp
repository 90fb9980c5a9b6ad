#include "delayfb/distribution.hpp"

#include <cmath>
#include <limits>

#include "delayfb/chi.hpp"
#include "delayfb/moments.hpp"

namespace delayfb {

double marginal_pdf(double x, double t, const CoherentSuperposition& state,
                    const FeedbackConfig& config) {
    const double chi_t = chi(t, config);
    const double s2 = sigma2(t, config);
    const double norm = 1.0 / std::sqrt(M_PI * s2);
    const Complex e_m(std::cos(config.phi()), -std::sin(config.phi()));

    // Each pair contributes N_ab <b|a> exp(-(x - mean chi)^2 / s2); the
    // overlap and the complex-mean square are combined in one exponent so
    // cross terms with |alpha| large do not underflow pairwise.
    Complex total = 0.0;
    const auto& terms = state.terms();
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = 0; j < terms.size(); ++j) {
            Complex alpha = terms[i].alpha;
            Complex beta = terms[j].alpha;
            Complex mean =
                0.5 * (alpha * e_m + std::conj(beta) * std::conj(e_m)) * chi_t;
            Complex dev = Complex(x, 0.0) - mean;
            Complex expo = log_overlap(beta, alpha) - dev * dev / s2;
            total += state.weight(i, j) * std::exp(expo);
        }
    }
    total *= norm;
    if (std::abs(total.imag()) > 1e-10)
        throw Error(Error::Code::domain,
                    "marginal_pdf cross terms failed to cancel (|Im| > 1e-10)");
    return total.real();
}

double visibility_exponent(double t, const FeedbackConfig& config) {
    double c = chi(t, config);
    return 1.0 - c * c / (2.0 * sigma2(t, config));
}

// p_plus / p_minus are the square roots of the normalized Gaussians (the
// distribution combines their squares and the cross product).
double CatFringeReport::p_plus(double x) const {
    double d = x - envelope_offset;
    return std::exp(-0.5 * d * d / sigma2) / std::pow(M_PI * sigma2, 0.25);
}

double CatFringeReport::p_minus(double x) const {
    double d = x + envelope_offset;
    return std::exp(-0.5 * d * d / sigma2) / std::pow(M_PI * sigma2, 0.25);
}

CatFringeReport cat_fringe_report(double t, Complex alpha0,
                                  const FeedbackConfig& config) {
    CatFringeReport r;
    r.t = t;
    r.chi = chi(t, config);
    r.sigma2 = sigma2(t, config);
    const Complex e_m(std::cos(config.phi()), -std::sin(config.phi()));
    const Complex rotated = alpha0 * e_m;
    r.envelope_offset = rotated.real() * r.chi;
    r.omega_slope = 2.0 * rotated.imag() * r.chi / r.sigma2;
    r.visibility_exponent = 1.0 - r.chi * r.chi / (2.0 * r.sigma2);
    // <alpha0|-alpha0> = exp(-2|alpha0|^2); combine with the exponent in log
    // space before exponentiating.
    r.overlap_factor = std::exp(-2.0 * std::norm(alpha0) * r.visibility_exponent);
    r.norm2 = 0.5 / (1.0 + std::exp(-2.0 * std::norm(alpha0)));
    return r;
}

double cat_pdf(double x, const CatFringeReport& r) {
    double pp = r.p_plus(x);
    double pm = r.p_minus(x);
    return r.norm2 * (pp * pp + pm * pm +
                      2.0 * pp * pm * std::cos(r.omega_slope * x) * r.overlap_factor);
}

double cat_pdf(double x, double t, Complex alpha0, const FeedbackConfig& config) {
    return cat_pdf(x, cat_fringe_report(t, alpha0, config));
}

DecoherenceTime decoherence_time(const FeedbackConfig& config, Complex alpha0) {
    DecoherenceTime out;
    out.regime_mismatch = config.tau() > 0.0 || config.eta() < 1.0;
    double d = 1.0 - config.k();
    if (d == 0.0) {
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = 1.0 / (2.0 * config.gamma() * std::norm(alpha0) * d * d);
    return out;
}

double fringe_contrast(double t, Complex alpha0, const FeedbackConfig& config,
                       int n_samples) {
    CatFringeReport r = cat_fringe_report(t, alpha0, config);
    // Modulation of the distribution relative to its fringe-free envelope
    // norm2 (p+^2 + p-^2); dividing the envelope out isolates the fringes.
    double rmax = -std::numeric_limits<double>::infinity();
    double rmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        double x = -1.0 + 2.0 * i / (n_samples - 1);
        double pp = r.p_plus(x);
        double pm = r.p_minus(x);
        double envelope = r.norm2 * (pp * pp + pm * pm);
        double ratio = cat_pdf(x, r) / envelope;
        rmax = std::max(rmax, ratio);
        rmin = std::min(rmin, ratio);
    }
    return (rmax - rmin) / (rmax + rmin);
}

} // namespace delayfb
