#include "delayfb/charfn.hpp"

#include <cmath>

#include "delayfb/quadrature.hpp"

namespace delayfb {

namespace {

const Complex I(0.0, 1.0);

// (e^{a x} - 1)/a, finite as a -> 0.
double expm1_over(double a, double x) {
    if (a == 0.0) return x;
    return std::expm1(a * x) / a;
}

} // namespace

Complex log_displacement_matrix_element(Complex lambda, Complex alpha, Complex beta) {
    return log_overlap(beta, alpha) - 0.5 * std::norm(lambda) +
           lambda * std::conj(beta) - std::conj(lambda) * alpha;
}

Complex displacement_matrix_element(Complex lambda, Complex alpha, Complex beta) {
    return std::exp(log_displacement_matrix_element(lambda, alpha, beta));
}

CharFnKernels::CharFnKernels(const FeedbackConfig& config, Complex lambda)
    : cfg_(config), lambda_(lambda), kernels_(config) {}

Complex CharFnKernels::v(double t) const {
    const double gamma = cfg_.gamma();
    Complex out = -lambda_ * std::exp(-0.5 * gamma * t);
    if (t >= cfg_.tau()) {
        Complex l_theta = lambda_ * std::exp(-I * cfg_.theta()) +
                          std::conj(lambda_) * std::exp(I * cfg_.theta());
        out -= 0.5 * I * std::exp(I * cfg_.phi()) * l_theta * cfg_.g() *
               kernels_.chi().shifted(t);
    }
    return out;
}

Complex CharFnKernels::r(double t) const {
    return lambda_ * kernels_.adag_input(t) - std::conj(lambda_) * kernels_.a_input(t);
}

Complex CharFnKernels::rf(double t) const {
    return lambda_ * kernels_.adag_feedback(t) -
           std::conj(lambda_) * kernels_.a_feedback(t);
}

double CharFnKernels::cumulative_growth(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double gamma = cfg_.gamma();
    return quad::integrate_real(
        [&](double u) { return std::exp(0.5 * gamma * u) * kernels_.chi().value(u); },
        0.0, x, tau_knots(0.0, x, cfg_.tau()), 1e-13);
}

Complex CharFnKernels::cross(double t, double t2) const {
    const double gamma = cfg_.gamma();
    const double tau = cfg_.tau();
    const double k = cfg_.k();
    const double sqrt_eta = std::sqrt(cfg_.eta());
    const Complex e_phi = std::exp(I * cfg_.phi());

    std::vector<double> splits = tau_knots(0.0, t, tau);
    for (double s = t2; s > 0.0; s -= tau) {
        if (s < t) splits.push_back(s);
        if (tau == 0.0) break;
    }
    for (double s = t2 + tau; tau > 0.0 && s - tau > 0.0; s -= tau)
        if (s < t) splits.push_back(s);

    Complex integral = quad::integrate_complex(
        [&](double z) -> Complex {
            Complex inner = 0.0;
            if (t2 - z >= 0.0) inner += std::conj(r(t2 - z));
            if (z >= tau) inner -= k / sqrt_eta * std::conj(rf(t2 - z + tau));
            return kernels_.chi().value(t - z) * inner;
        },
        0.0, t, splits, 1e-11);

    return -0.5 * std::sqrt(gamma) * e_phi * integral +
           0.5 * e_phi * kernels_.chi().value(t) * std::conj(v(t2));
}

Complex CharFnKernels::w(double u, double t) const {
    if (!(u > 0.0)) return 0.0;
    const double gamma = cfg_.gamma();
    const double tau = cfg_.tau();
    const double k = cfg_.k();
    const double sqrt_eta = std::sqrt(cfg_.eta());
    const Complex e_phi = std::exp(I * cfg_.phi());

    std::vector<double> splits = tau_knots(0.0, u, tau);
    if (tau > 0.0) {
        for (double s = t; s > 0.0; s -= tau)
            if (s < u) splits.push_back(s);
        for (double s = u; s > 0.0; s -= tau)
            if (s < u) splits.push_back(s);
    }

    // Int_0^u e^{gamma v/2} Lambda(v, t) dv collapses to single integrals after
    // swapping the integration order; M(x) = Int_0^x e^{gamma w/2} chi(w) dw.
    Complex j = quad::integrate_complex(
        [&](double vv) -> Complex {
            Complex psi = 0.0;
            if (t - vv >= 0.0) psi += std::conj(r(t - vv));
            if (vv >= tau) psi -= k / sqrt_eta * std::conj(rf(t - vv + tau));
            return psi * std::exp(0.5 * gamma * vv) * cumulative_growth(u - vv);
        },
        0.0, u, splits, 1e-11);

    Complex i_lambda = -0.5 * std::sqrt(gamma) * e_phi * j +
                       0.5 * e_phi * std::conj(v(t)) * cumulative_growth(u);

    Complex q = quad::integrate_complex(
        [&](double vv) -> Complex {
            return std::exp(0.5 * gamma * vv) * std::conj(rf(t - vv));
        },
        0.0, u, splits, 1e-11);

    return -0.5 * I * std::sqrt(gamma) * cfg_.g() * std::exp(I * cfg_.theta()) *
           (2.0 * std::sqrt(gamma) * i_lambda + e_phi / sqrt_eta * q);
}

Complex hamiltonian_exponent_direct(const CharFnKernels& kern, double t, Complex alpha,
                                    Complex beta) {
    const FeedbackConfig& cfg = kern.config();
    const Complex lambda = kern.lambda();
    const double gamma = cfg.gamma();
    const double tau = cfg.tau();
    const Complex l_theta = lambda * std::exp(-I * cfg.theta()) +
                            std::conj(lambda) * std::exp(I * cfg.theta());
    const Complex p_phi = std::conj(beta) * std::exp(I * cfg.phi()) +
                          alpha * std::exp(-I * cfg.phi());

    Complex h = 0.5 * gamma * (std::conj(lambda) * alpha - lambda * std::conj(beta)) *
                std::exp(-0.5 * gamma * t);
    if (t >= tau) {
        h += 0.5 * I * l_theta * p_phi * cfg.g() * kern.kernels_.chi().shifted_derivative(t);
        h -= gamma / (8.0 * cfg.eta()) * cfg.g() * cfg.g() * l_theta * l_theta;
        Complex w1 = kern.w(t - tau, t);
        h += 0.5 * gamma * std::exp(-0.5 * gamma * (t - tau)) *
             (std::conj(lambda) * w1 + lambda * std::conj(w1));
    }
    if (t >= 2.0 * tau) {
        Complex w2 = kern.w(t - 2.0 * tau, t);
        h += 0.5 * I * gamma * cfg.g() * l_theta *
             std::exp(-0.5 * gamma * (t - 2.0 * tau)) *
             (std::exp(-I * cfg.phi()) * w2 - std::exp(I * cfg.phi()) * std::conj(w2));
    }
    return h;
}

Complex hamiltonian_exponent(double t, Complex lambda, Complex alpha, Complex beta,
                             const FeedbackConfig& config) {
    if (t < 0.0)
        throw Error(Error::Code::domain, "hamiltonian_exponent requires t >= 0");
    CharFnKernels kern(config, lambda);
    return hamiltonian_exponent_direct(kern, t, alpha, beta);
}

SmallTauCoefficients small_tau_coefficients(double t, Complex alpha, Complex beta,
                                            const FeedbackConfig& config) {
    if (config.phi() != 0.0)
        throw Error(Error::Code::phase_convention,
                    "small-tau closed form is derived for phi = 0");
    SmallTauCoefficients out;
    const double gamma = config.gamma();
    const double g = config.g();
    const double eta = config.eta();
    const double theta = config.theta();
    const double k = g * std::sin(theta); // phi = 0
    const double gt = gamma * t;
    const double gtau = gamma * config.tau();
    const double a = 1.0 - 2.0 * k;

    out.f0 = (a == 0.0) ? gt : -std::expm1(-a * gt) / a; // (1 - e^{-a gt}) / a
    out.f1 = (1.0 + gt * k) * std::exp(-a * gt) + k * out.f0;

    const double spread = out.f0 - gtau * out.f1;
    out.a = 0.5 + 0.25 * g * g / eta * spread;
    out.b1 = -0.125 * g * g / eta * spread * std::exp(-2.0 * I * theta);
    out.b2 = std::conj(out.b1);

    // C and D rearranged so the 1/sin(theta) pieces cancel analytically:
    //   C = b* e^{-gt/2} + (i/2) g e^{-i th}(a + b*) e^{-gt/2} (e^{k gt}-1)/k
    //       + gtau (i/2) g e^{-i th}(a + b*)(a gt/2 - 1) e^{-a gt/2},
    // and D likewise with e^{+i th} and the leading term -alpha e^{-gt/2}.
    const Complex ab = alpha + std::conj(beta);
    const double ek = expm1_over(k, gt); // (e^{k gt} - 1)/k
    const double decay = std::exp(-0.5 * gt);
    const double decay_fb = std::exp(-0.5 * a * gt);
    const Complex e_th = std::exp(I * theta);

    out.c = std::conj(beta) * decay +
            0.5 * I * g / e_th * ab * decay * ek +
            gtau * 0.5 * I * g / e_th * ab * (0.5 * a * gt - 1.0) * decay_fb;
    out.d = -alpha * decay +
            0.5 * I * g * e_th * ab * decay * ek +
            gtau * 0.5 * I * g * e_th * ab * (0.5 * a * gt - 1.0) * decay_fb;
    return out;
}

CharFnResult charfn_small_tau(Complex lambda, double t, Complex alpha, Complex beta,
                              const FeedbackConfig& config) {
    if (t < 2.0 * config.tau())
        throw Error(Error::Code::domain, "small-tau closed form requires t >= 2 tau");
    SmallTauCoefficients co = small_tau_coefficients(t, alpha, beta, config);
    Complex expo = -co.a * std::norm(lambda) + co.b1 * lambda * lambda +
                   co.b2 * std::conj(lambda) * std::conj(lambda) + co.c * lambda +
                   co.d * std::conj(lambda);
    CharFnResult res;
    res.branch = CharFnBranch::SmallTau;
    res.log_value = log_overlap(beta, alpha) + expo;
    res.underflowed = res.log_value.real() < -745.0;
    res.value = res.underflowed ? Complex(0.0, 0.0) : std::exp(res.log_value);
    return res;
}

double log_coherence_function(double t, Complex alpha0, const FeedbackConfig& config) {
    if (config.phi() != 0.0)
        throw Error(Error::Code::phase_convention,
                    "coherence function is derived for phi = 0");
    if (std::abs(alpha0.real()) > 1e-12 * (1.0 + std::abs(alpha0)))
        throw Error(Error::Code::precondition,
                    "coherence function assumes Re{alpha0} = 0");
    const double gamma = config.gamma();
    const double g = config.g();
    const double eta = config.eta();
    const double k = g * std::sin(config.theta());
    const double gt = gamma * t;
    const double gtau = gamma * config.tau();
    const double a = 1.0 - 2.0 * k;

    double f0 = (a == 0.0) ? gt : -std::expm1(-a * gt) / a;
    double f1 = (1.0 + gt * k) * std::exp(-a * gt) + k * f0;
    double decay_fb = std::exp(-0.5 * a * gt);

    double bracket = 2.0 + k * k / eta * (f0 - gtau * f1) - 2.0 * decay_fb +
                     k * (2.0 - gt * a) * gtau * decay_fb;
    return std::log(0.5) - 2.0 * std::norm(alpha0) * bracket;
}

Complex coherence_function(double t, Complex alpha0, const FeedbackConfig& config) {
    double lg = log_coherence_function(t, alpha0, config);
    if (lg < -745.0) return Complex(0.0, 0.0);
    return Complex(std::exp(lg), 0.0);
}

} // namespace delayfb
