#include <algorithm>
#include <cmath>
#include <vector>

#include "delayfb/charfn.hpp"

// Early-time branch 0 <= t <= 2 tau of <D(lambda,t)>.
//
// Below tau the feedback is inert and the exponent is the damped-cavity one.
// On [tau, 2 tau] every kernel entering H(s) involves at most one delay
// period, where chi and the shifted series are single exponential-polynomial
// segments, so the nested W integrals are elementary. They are assembled
// here with a small exp-polynomial algebra over terms
//
//     c * e^{ra * a} a^{pa} * e^{rb * b} b^{pb}
//
// (slot a = the active integration variable, slot b = the outer time s),
// which is closed under products and integration with a variable upper
// limit. The result is a machine-precision closed form: no quadrature.

namespace delayfb {

namespace {

const Complex I(0.0, 1.0);

struct Term {
    Complex c;
    double ra = 0.0;
    int pa = 0;
    double rb = 0.0;
    int pb = 0;
};

using Poly = std::vector<Term>;

Poly operator+(Poly lhs, const Poly& rhs) {
    lhs.insert(lhs.end(), rhs.begin(), rhs.end());
    return lhs;
}

Poly scale(Poly p, Complex f) {
    for (auto& t : p) t.c *= f;
    return p;
}

Poly conj_poly(Poly p) {
    for (auto& t : p) t.c = std::conj(t.c);
    return p;
}

// multiply by e^{r a} a^p
Poly mul_a(Poly p, double r, int pw) {
    for (auto& t : p) {
        t.ra += r;
        t.pa += pw;
    }
    return p;
}

Poly mul_b(Poly p, double r, int pw) {
    for (auto& t : p) {
        t.rb += r;
        t.pb += pw;
    }
    return p;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Int_0^V e^{r a} a^p da, expressed again in slot a (now meaning V).
void integrate_term_a(const Term& t, Poly& out) {
    if (t.ra == 0.0) {
        Term n = t;
        n.pa = t.pa + 1;
        n.c = t.c / static_cast<double>(t.pa + 1);
        out.push_back(n);
        return;
    }
    const double r = t.ra;
    const int p = t.pa;
    for (int j = 0; j <= p; ++j) {
        Term n = t;
        n.pa = j;
        double sign = ((p - j) % 2 == 0) ? 1.0 : -1.0;
        n.c = t.c * sign * (factorial(p) / factorial(j)) /
              std::pow(r, static_cast<double>(p - j + 1));
        out.push_back(n);
    }
    Term n = t;
    n.ra = 0.0;
    n.pa = 0;
    double sign = (p % 2 == 0) ? 1.0 : -1.0;
    n.c = -t.c * sign * factorial(p) / std::pow(r, static_cast<double>(p + 1));
    out.push_back(n);
}

Poly integrate_a(const Poly& p) {
    Poly out;
    for (const auto& t : p) integrate_term_a(t, out);
    return out;
}

// substitute a := b - shift, folding everything into slot b
Poly substitute_a(const Poly& p, double shift) {
    Poly out;
    for (const auto& t : p) {
        double pre_exp = std::exp(-t.ra * shift);
        for (int j = 0; j <= t.pa; ++j) {
            double binom = factorial(t.pa) / (factorial(j) * factorial(t.pa - j));
            Term n;
            n.c = t.c * pre_exp * binom *
                  std::pow(-shift, static_cast<double>(t.pa - j));
            n.ra = 0.0;
            n.pa = 0;
            n.rb = t.rb + t.ra;
            n.pb = t.pb + j;
            out.push_back(n);
        }
    }
    return out;
}

Complex eval(const Poly& p, double a, double b) {
    Complex acc = 0.0;
    for (const auto& t : p)
        acc += t.c * std::exp(t.ra * a) * std::pow(a, static_cast<double>(t.pa)) *
               std::exp(t.rb * b) * std::pow(b, static_cast<double>(t.pb));
    return acc;
}

// rename slot b -> slot a (used to integrate a purely-b expression)
Poly swap_to_a(const Poly& p) {
    Poly out = p;
    for (auto& t : out) {
        t.ra = t.rb;
        t.pa = t.pb;
        t.rb = 0.0;
        t.pb = 0;
    }
    return out;
}

// One-delay kernel segment on w in [tau, 2 tau]:
//   kappa(w) = P e^{-gamma w/2} + (Q + C * gamma (w - tau)) e^{-gamma (w-tau)/2}.
struct Segment {
    Complex p, q, c;
};

Segment conj_seg(const Segment& s) {
    return {std::conj(s.p), std::conj(s.q), std::conj(s.c)};
}

Segment combine(Complex fp, const Segment& a, Complex fq, const Segment& b) {
    return {fp * a.p + fq * b.p, fp * a.q + fq * b.q, fp * a.c + fq * b.c};
}

// kappa(s - z) as a Poly in (z, s), given the segment coefficients.
Poly seg_at_b_minus_a(const Segment& seg, double gamma, double tau) {
    Poly out;
    // P e^{-gamma(s-z)/2}
    out.push_back({seg.p, 0.5 * gamma, 0, -0.5 * gamma, 0});
    // (Q + C gamma (s - z - tau)) e^{-gamma (s - z - tau)/2}
    double boost = std::exp(0.5 * gamma * tau);
    out.push_back({(seg.q - seg.c * gamma * tau) * boost, 0.5 * gamma, 0,
                   -0.5 * gamma, 0});
    out.push_back({seg.c * gamma * boost, 0.5 * gamma, 0, -0.5 * gamma, 1});
    out.push_back({-seg.c * gamma * boost, 0.5 * gamma, 1, -0.5 * gamma, 0});
    return out;
}

} // namespace

CharFnResult charfn_early(Complex lambda, double t, Complex alpha, Complex beta,
                          const FeedbackConfig& config) {
    const double gamma = config.gamma();
    const double tau = config.tau();
    const double g = config.g();
    const double k = config.k();
    const double eta = config.eta();
    const double theta = config.theta();
    const double phi = config.phi();

    if (t < 0.0 || t > 2.0 * tau * (1.0 + 1e-12))
        throw Error(Error::Code::domain, "early-time branch covers 0 <= t <= 2 tau");

    CharFnResult res;
    res.branch = CharFnBranch::EarlyTime;

    const Complex l_theta =
        lambda * std::exp(-I * theta) + std::conj(lambda) * std::exp(I * theta);
    const Complex p_phi =
        std::conj(beta) * std::exp(I * phi) + alpha * std::exp(-I * phi);

    Complex expo = (std::conj(lambda) * alpha - lambda * std::conj(beta)) *
                   (-std::expm1(-0.5 * gamma * std::min(t, tau)));

    if (t > tau && lambda != Complex(0.0, 0.0)) {
        const Complex e_phi = std::exp(I * phi);
        const Complex e_th = std::exp(I * theta);
        const double sqrt_eta = std::sqrt(eta);

        // kernel segments on [tau, 2 tau]
        const Complex pre_f = -0.5 * std::sqrt(gamma) / e_phi;
        const Segment seg_f = {pre_f, -pre_f * k, pre_f * k};
        const Segment seg_ff = {pre_f * sqrt_eta, -pre_f * k / sqrt_eta,
                                pre_f * k * sqrt_eta};
        const Complex pre_r = 0.5 * I * std::sqrt(gamma) * g * e_th * e_phi;
        const Segment seg_r = {0.0, pre_r, -pre_r};
        const Complex pre_rf = pre_r / sqrt_eta;
        const Segment seg_rf = {0.0, pre_rf, -pre_rf * eta};

        const Segment seg_r1 =
            combine(-2.0 / e_phi, conj_seg(seg_f), -1.0 / (e_phi * e_phi), seg_r);
        const Segment seg_r1f =
            combine(-2.0 / e_phi, conj_seg(seg_ff), -1.0 / (e_phi * e_phi), seg_rf);

        const Segment seg_rl_c =
            combine(std::conj(lambda), conj_seg(seg_r1), -lambda, conj_seg(seg_r));
        const Segment seg_rfl_c =
            combine(std::conj(lambda), conj_seg(seg_r1f), -lambda, conj_seg(seg_rf));

        // T(v,s) = e^{-gamma v/2} Int_0^v e^{gamma z/2} Rl*(s-z) dz
        Poly t_inner = mul_a(seg_at_b_minus_a(seg_rl_c, gamma, tau), 0.5 * gamma, 0);
        Poly t_poly = mul_a(integrate_a(t_inner), -0.5 * gamma, 0);

        // V_lambda*(s) on [tau, 2 tau] (pure slot-b terms; l_theta is real)
        Poly v_conj;
        v_conj.push_back({-std::conj(lambda), 0.0, 0, -0.5 * gamma, 0});
        {
            Complex coef = 0.5 * I / e_phi * l_theta * g;
            double boost = std::exp(0.5 * gamma * tau);
            v_conj.push_back({coef * gamma * boost, 0.0, 0, -0.5 * gamma, 1});
            v_conj.push_back({-coef * gamma * tau * boost, 0.0, 0, -0.5 * gamma, 0});
        }

        // Lambda(v,s) = -(sqrt(g)/2) e^{i phi} T + (1/2) e^{i phi} e^{-g v/2} V*(s)
        Poly lam = scale(t_poly, -0.5 * std::sqrt(gamma) * e_phi) +
                   mul_a(scale(v_conj, 0.5 * e_phi), -0.5 * gamma, 0);

        // W integrand: e^{gamma v/2} (2 sqrt(gamma) Lambda + e^{i phi} Rf*(s-v)/sqrt(eta))
        Poly w_int =
            scale(lam, 2.0 * std::sqrt(gamma)) +
            scale(seg_at_b_minus_a(seg_rfl_c, gamma, tau), e_phi / sqrt_eta);
        w_int = mul_a(w_int, 0.5 * gamma, 0);

        // W(u, s) then u := s - tau
        Poly w_poly = substitute_a(
            scale(integrate_a(w_int), -0.5 * I * std::sqrt(gamma) * g * e_th), tau);

        // H(s) on [tau, 2 tau]
        double boost = std::exp(0.5 * gamma * tau);
        Poly h_poly =
            mul_b(scale(w_poly, std::conj(lambda)) +
                      scale(conj_poly(w_poly), lambda),
                  -0.5 * gamma, 0);
        h_poly = scale(h_poly, 0.5 * gamma * boost);

        h_poly.push_back({0.5 * gamma * (std::conj(lambda) * alpha -
                                         lambda * std::conj(beta)),
                          0.0, 0, -0.5 * gamma, 0});
        // shifted-series derivative segment: gamma e^{-gamma(s-tau)/2}(1 - gamma(s-tau)/2)
        Complex c2 = 0.5 * I * l_theta * p_phi * g;
        h_poly.push_back(
            {c2 * gamma * (1.0 + 0.5 * gamma * tau) * boost, 0.0, 0, -0.5 * gamma, 0});
        h_poly.push_back({-c2 * 0.5 * gamma * gamma * boost, 0.0, 0, -0.5 * gamma, 1});
        h_poly.push_back(
            {-gamma / (8.0 * eta) * g * g * l_theta * l_theta, 0.0, 0, 0.0, 0});

        // Int_tau^t H(s) ds
        Poly h_in_a = swap_to_a(h_poly);
        Poly anti = integrate_a(h_in_a);
        expo += eval(anti, std::min(t, 2.0 * tau), 0.0) - eval(anti, tau, 0.0);
    }

    res.log_value = log_displacement_matrix_element(lambda, alpha, beta) + expo;
    res.underflowed = res.log_value.real() < -745.0;
    res.value = res.underflowed ? Complex(0.0, 0.0) : std::exp(res.log_value);
    return res;
}

} // namespace delayfb
