#include "delayfb/model.hpp"

#include <cmath>

namespace delayfb {

FeedbackConfig::FeedbackConfig(double gamma, double g, double theta, double phi,
                               double tau, double eta)
    : gamma_(gamma), g_(g), theta_(theta), phi_(phi), tau_(tau), eta_(eta) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw Error(Error::Code::config_gamma, "gamma must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw Error(Error::Code::config_tau, "tau must be non-negative");
    // eta = 0 is rejected outright: the variance and the feedback-noise
    // kernels carry 1/eta and the eta -> 0 dynamics is undefined.
    if (!(eta > 0.0 && eta <= 1.0))
        throw Error(Error::Code::config_eta, "eta must lie in (0, 1]");
    k_ = g_ * std::sin(theta_ - phi_);
}

Complex log_overlap(Complex beta, Complex alpha) {
    return -0.5 * std::norm(alpha) - 0.5 * std::norm(beta) + std::conj(beta) * alpha;
}

Complex overlap(Complex beta, Complex alpha) {
    return std::exp(log_overlap(beta, alpha));
}

CoherentSuperposition::CoherentSuperposition(std::vector<Term> terms, NormMode mode)
    : terms_(std::move(terms)), mode_(mode) {
    if (mode_ == NormMode::Renormalize) {
        Complex total = 0.0;
        for (const auto& ti : terms_)
            for (const auto& tj : terms_)
                total += ti.coeff * std::conj(tj.coeff) * overlap(tj.alpha, ti.alpha);
        double n2 = total.real();
        if (!(n2 > 0.0))
            throw Error(Error::Code::domain, "superposition has vanishing norm");
        double scale = 1.0 / std::sqrt(n2);
        for (auto& t : terms_) t.coeff *= scale;
    }
}

Complex CoherentSuperposition::weight(std::size_t i, std::size_t j) const {
    return terms_.at(i).coeff * std::conj(terms_.at(j).coeff);
}

double CoherentSuperposition::norm_squared() const {
    Complex total = 0.0;
    for (const auto& ti : terms_)
        for (const auto& tj : terms_)
            total += ti.coeff * std::conj(tj.coeff) * overlap(tj.alpha, ti.alpha);
    return total.real();
}

CoherentSuperposition cat_state(Complex alpha0) {
    double n = 1.0 / std::sqrt(1.0 + std::exp(-2.0 * std::norm(alpha0)));
    std::vector<CoherentSuperposition::Term> terms = {
        {alpha0, Complex(n, 0.0)},
        {-alpha0, Complex(n, 0.0)},
    };
    // The textbook prefactor above leaves the two-term sum with squared norm
    // 2; the renormalizing constructor brings it back to 1.
    return CoherentSuperposition(std::move(terms), NormMode::Renormalize);
}

std::vector<double> tau_knots(double t0, double t1, double tau) {
    std::vector<double> out;
    if (tau <= 0.0) return out;
    long n0 = static_cast<long>(std::ceil(t0 / tau));
    if (n0 * tau <= t0) ++n0;
    if (n0 < 1) n0 = 1;
    for (long n = n0; n * tau < t1; ++n) out.push_back(n * tau);
    return out;
}

TimeGrid::TimeGrid(double t_start_, double t_end_, int n_points_, double tau)
    : t_start(t_start_), t_end(t_end_), n_points(n_points_) {
    if (!(t_start >= 0.0) || !(t_end > t_start))
        throw Error(Error::Code::domain, "TimeGrid requires 0 <= t_start < t_end");
    if (n_points < 2) throw Error(Error::Code::domain, "TimeGrid needs >= 2 points");
    // every n*tau in the closed range, including the ends
    if (tau > 0.0) {
        long n0 = static_cast<long>(std::ceil(t_start / tau - 1e-12));
        if (n0 < 1) n0 = 1;
        for (long n = n0; n * tau <= t_end * (1.0 + 1e-12); ++n)
            knots.push_back(n * tau);
    }
}

std::vector<double> TimeGrid::points() const {
    std::vector<double> p(static_cast<std::size_t>(n_points));
    double dt = (t_end - t_start) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) p[static_cast<std::size_t>(i)] = t_start + i * dt;
    p.back() = t_end;
    return p;
}

} // namespace delayfb
