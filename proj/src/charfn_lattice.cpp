#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "delayfb/charfn.hpp"
#include "delayfb/quadrature.hpp"

// CharFnEvaluator: chi, the conjugated noise kernels and the cumulative
// growth integral M(x) = Int_0^x e^{gamma u/2} chi(u) du are tabulated once
// on a kink-aligned lattice. Each H(s) evaluation then reduces the nested
// W_lambda integrals to two single lattice sums (the order of the double
// integral is swapped so only M appears inside), and Int_0^t H is itself a
// lattice sum. Off-lattice tails fall back to direct adaptive quadrature.

namespace delayfb {

namespace {

const Complex I(0.0, 1.0);

// Fourth-order Gregory rule (endpoint-corrected trapezoid) on n uniform
// cells; works for any segment length, no parity constraint.
template <typename T>
T gregory(const T* f, long n, double h) {
    if (n <= 0) return T{};
    if (n == 1) return 0.5 * h * (f[0] + f[1]);
    if (n == 2) return h / 3.0 * (f[0] + 4.0 * f[1] + f[2]);
    if (n == 3) return 0.375 * h * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]);
    T acc = 0.5 * (f[0] + f[n]);
    for (long i = 1; i < n; ++i) acc += f[i];
    T corr = 3.0 * f[0] - 4.0 * f[1] + f[2] + 3.0 * f[n] - 4.0 * f[n - 1] + f[n - 2];
    return h * acc - h / 24.0 * corr;
}

// Integrate lattice samples over [0, n] splitting at the supplied interior
// break indices (kink images), each segment with the Gregory rule.
template <typename T>
T lattice_integrate(const std::vector<T>& f, long n, double h,
                    std::vector<long>& breaks) {
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                                [&](long b) { return b <= 0 || b >= n; }),
                 breaks.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    T total{};
    long lo = 0;
    for (long b : breaks) {
        total += gregory(f.data() + lo, b - lo, h);
        lo = b;
    }
    total += gregory(f.data() + lo, n - lo, h);
    return total;
}

// 4-point Gauss-Legendre nodes on [0, 1].
constexpr double kGL4x[4] = {0.069431844202973712, 0.330009478207571868,
                             0.669990521792428132, 0.930568155797026288};
constexpr double kGL4w[4] = {0.173927422568726929, 0.326072577431273071,
                             0.326072577431273071, 0.173927422568726929};

} // namespace

struct CharFnEvaluator::Impl {
    FeedbackConfig cfg;
    double t_max;
    double h;      // fine lattice step
    long per_tau;  // lattice steps per tau (0 when tau == 0)
    long n_nodes;  // highest valid lattice index
    ChiEvaluator chi;
    KernelSet kernels;

    std::vector<double> chi_v, shift_v, shift_d, dec, grow, m_cum;
    std::vector<Complex> r_c, r1_c, rf_c, r1f_c; // conj of the four a-kernels

    Impl(const FeedbackConfig& config, double tmax)
        : cfg(config), t_max(tmax), chi(config), kernels(config) {
        if (!(tmax > 0.0))
            throw Error(Error::Code::domain, "CharFnEvaluator needs t_max > 0");
        const double gamma = cfg.gamma();
        const double tau = cfg.tau();
        if (tau > 0.0) {
            per_tau = std::max<long>(32, 2 * static_cast<long>(
                                             std::ceil(32.0 * gamma * tau)));
            h = tau / static_cast<double>(per_tau);
        } else {
            per_tau = 0;
            long n = std::max<long>(128, 2 * static_cast<long>(
                                             std::ceil(64.0 * gamma * tmax)));
            h = tmax / static_cast<double>(n);
        }
        n_nodes = static_cast<long>(std::ceil((tmax + tau) / h)) + 4;

        const std::size_t n = static_cast<std::size_t>(n_nodes) + 1;
        chi_v.resize(n);
        shift_v.resize(n);
        shift_d.resize(n);
        dec.resize(n);
        grow.resize(n);
        m_cum.resize(n);
        r_c.resize(n);
        r1_c.resize(n);
        rf_c.resize(n);
        r1f_c.resize(n);

        const double k = cfg.k();
        const double g = cfg.g();
        const double eta = cfg.eta();
        const double sqrt_eta = std::sqrt(eta);
        const Complex pre_r = 0.5 * I * std::sqrt(gamma) * g *
                              std::exp(I * (cfg.theta() + cfg.phi()));
        const Complex pre_rf = pre_r / sqrt_eta;
        const Complex pre_f = -0.5 * std::sqrt(gamma) * std::exp(-I * cfg.phi());

        for (std::size_t i = 0; i < n; ++i) {
            double x = h * static_cast<double>(i);
            chi_v[i] = chi.value(x);
            shift_v[i] = chi.shifted(x);
            shift_d[i] = chi.shifted_derivative(x);
            dec[i] = std::exp(-0.5 * gamma * x);
            grow[i] = std::exp(0.5 * gamma * x);
        }
        // cumulative M by per-cell Simpson (kinks are lattice-aligned)
        m_cum[0] = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double x0 = h * static_cast<double>(i);
            double xm = x0 + 0.5 * h;
            double f0 = grow[i] * chi_v[i];
            double fm = std::exp(0.5 * gamma * xm) * chi.value(xm);
            double f1 = grow[i + 1] * chi_v[i + 1];
            m_cum[i + 1] = m_cum[i] + h / 6.0 * (f0 + 4.0 * fm + f1);
        }
        const long pt = (per_tau > 0) ? per_tau : 0;
        for (std::size_t i = 0; i < n; ++i) {
            long idx = static_cast<long>(i);
            bool past1 = (tau == 0.0) || idx >= pt;
            bool past2 = (tau == 0.0) || idx >= 2 * pt;
            double chi_del = past1 ? chi_v[static_cast<std::size_t>(idx - pt)] : 0.0;
            double dec_del = past1 ? dec[static_cast<std::size_t>(idx - pt)] : 0.0;
            Complex f_ker = pre_f * (chi_v[i] - k * chi_del);
            Complex ff_ker = pre_f * (sqrt_eta * chi_v[i] - k / sqrt_eta * chi_del);
            Complex r_ker = 0.0, rf_ker = 0.0;
            if (past1) {
                double tail = past2 ? (chi_del - dec_del) : 0.0;
                r_ker = pre_r * (dec_del - shift_v[i] + tail);
                rf_ker = pre_rf * (dec_del - eta * shift_v[i] + tail);
            }
            Complex r1_ker = -2.0 * std::exp(-I * cfg.phi()) * std::conj(f_ker) -
                             std::exp(-2.0 * I * cfg.phi()) * r_ker;
            Complex r1f_ker = -2.0 * std::exp(-I * cfg.phi()) * std::conj(ff_ker) -
                              std::exp(-2.0 * I * cfg.phi()) * rf_ker;
            r_c[i] = std::conj(r_ker);
            r1_c[i] = std::conj(r1_ker);
            rf_c[i] = std::conj(rf_ker);
            r1f_c[i] = std::conj(r1f_ker);
        }
    }

    // M(x) for arbitrary x: lattice node + partial-cell Gauss.
    double m_at(double x) const {
        if (!(x > 0.0)) return 0.0;
        long i = static_cast<long>(std::floor(x / h));
        if (i > n_nodes) i = n_nodes;
        double x0 = h * static_cast<double>(i);
        double acc = m_cum[static_cast<std::size_t>(i)];
        double len = x - x0;
        if (len > 1e-15 * (x + 1.0)) {
            const double gamma = cfg.gamma();
            for (int q = 0; q < 4; ++q) {
                double u = x0 + kGL4x[q] * len;
                acc += kGL4w[q] * len * std::exp(0.5 * gamma * u) * chi.value(u);
            }
        }
        return acc;
    }

    struct LambdaArrays {
        Complex lambda;
        Complex l_theta;
        std::vector<Complex> rl_c;  // conj(R_lambda) on the lattice
        std::vector<Complex> rfl_c; // conj(R^f_lambda)
    };

    LambdaArrays make_lambda(Complex lambda) const {
        LambdaArrays a;
        a.lambda = lambda;
        a.l_theta = lambda * std::exp(-I * cfg.theta()) +
                    std::conj(lambda) * std::exp(I * cfg.theta());
        const std::size_t n = r_c.size();
        a.rl_c.resize(n);
        a.rfl_c.resize(n);
        const Complex lc = std::conj(lambda);
        for (std::size_t i = 0; i < n; ++i) {
            a.rl_c[i] = lc * r1_c[i] - lambda * r_c[i];
            a.rfl_c[i] = lc * r1f_c[i] - lambda * rf_c[i];
        }
        return a;
    }

    Complex v_at(long idx, const LambdaArrays& a) const {
        Complex out = -a.lambda * dec[static_cast<std::size_t>(idx)];
        if (cfg.tau() == 0.0 || idx >= per_tau)
            out -= 0.5 * I * std::exp(I * cfg.phi()) * a.l_theta * cfg.g() *
                   shift_v[static_cast<std::size_t>(idx)];
        return out;
    }

    // W_lambda(u, s) with both arguments on the lattice.
    Complex w_lattice(long u_idx, long s_idx, const LambdaArrays& a,
                      std::vector<Complex>& scratch) const {
        if (u_idx <= 0) return 0.0;
        const double gamma = cfg.gamma();
        const double k = cfg.k();
        const double sqrt_eta = std::sqrt(cfg.eta());
        const Complex e_phi = std::exp(I * cfg.phi());

        // derivative kinks of the kernels and of M sit on the s_idx family
        std::vector<long> breaks;
        if (per_tau > 0)
            for (long b = s_idx % per_tau; b < u_idx; b += per_tau)
                breaks.push_back(b);

        // J = Int_0^u psi_s(v) e^{gamma v/2} M(u - v) dv, with the
        // Theta(v - tau) feedback part integrated over its own support so
        // its switch-on jump never sits inside a segment.
        scratch.resize(static_cast<std::size_t>(u_idx) + 1);
        for (long iv = 0; iv <= u_idx; ++iv) {
            Complex psi = a.rl_c[static_cast<std::size_t>(s_idx - iv)];
            if (per_tau == 0)
                psi -= k / sqrt_eta *
                       a.rfl_c[static_cast<std::size_t>(s_idx - iv + per_tau)];
            scratch[static_cast<std::size_t>(iv)] =
                psi * grow[static_cast<std::size_t>(iv)] *
                m_cum[static_cast<std::size_t>(u_idx - iv)];
        }
        std::vector<long> b1 = breaks;
        Complex j = lattice_integrate(scratch, u_idx, h, b1);

        if (per_tau > 0 && u_idx > per_tau) {
            long len = u_idx - per_tau;
            std::vector<Complex> fb(static_cast<std::size_t>(len) + 1);
            for (long iv = per_tau; iv <= u_idx; ++iv)
                fb[static_cast<std::size_t>(iv - per_tau)] =
                    a.rfl_c[static_cast<std::size_t>(s_idx - iv + per_tau)] *
                    grow[static_cast<std::size_t>(iv)] *
                    m_cum[static_cast<std::size_t>(u_idx - iv)];
            std::vector<long> b1f;
            for (long b : breaks)
                if (b > per_tau) b1f.push_back(b - per_tau);
            j -= k / sqrt_eta * lattice_integrate(fb, len, h, b1f);
        }

        for (long iv = 0; iv <= u_idx; ++iv)
            scratch[static_cast<std::size_t>(iv)] =
                grow[static_cast<std::size_t>(iv)] *
                a.rfl_c[static_cast<std::size_t>(s_idx - iv)];
        std::vector<long> b2 = breaks;
        Complex q = lattice_integrate(scratch, u_idx, h, b2);

        Complex i_lambda = -0.5 * std::sqrt(gamma) * e_phi * j +
                           0.5 * e_phi * std::conj(v_at(s_idx, a)) *
                               m_cum[static_cast<std::size_t>(u_idx)];
        return -0.5 * I * std::sqrt(gamma) * cfg.g() * std::exp(I * cfg.theta()) *
               (2.0 * std::sqrt(gamma) * i_lambda + e_phi / sqrt_eta * q);
    }

    Complex h_lattice(long s_idx, const LambdaArrays& a, Complex alpha, Complex beta,
                      std::vector<Complex>& scratch) const {
        const double gamma = cfg.gamma();
        const double tau = cfg.tau();
        const Complex p_phi = std::conj(beta) * std::exp(I * cfg.phi()) +
                              alpha * std::exp(-I * cfg.phi());
        const std::size_t i = static_cast<std::size_t>(s_idx);

        Complex hh = 0.5 * gamma *
                     (std::conj(a.lambda) * alpha - a.lambda * std::conj(beta)) *
                     dec[i];
        bool past1 = (tau == 0.0) || s_idx >= per_tau;
        bool past2 = (tau == 0.0) || s_idx >= 2 * per_tau;
        if (past1) {
            hh += 0.5 * I * a.l_theta * p_phi * cfg.g() * shift_d[i];
            hh -= gamma / (8.0 * cfg.eta()) * cfg.g() * cfg.g() * a.l_theta * a.l_theta;
            Complex w1 = w_lattice(s_idx - per_tau, s_idx, a, scratch);
            hh += 0.5 * gamma * dec[static_cast<std::size_t>(s_idx - per_tau)] *
                  (std::conj(a.lambda) * w1 + a.lambda * std::conj(w1));
        }
        if (past2) {
            Complex w2 = w_lattice(s_idx - 2 * per_tau, s_idx, a, scratch);
            hh += 0.5 * I * gamma * cfg.g() * a.l_theta *
                  dec[static_cast<std::size_t>(s_idx - 2 * per_tau)] *
                  (std::exp(-I * cfg.phi()) * w2 -
                   std::exp(I * cfg.phi()) * std::conj(w2));
        }
        return hh;
    }

    Complex integral(Complex lambda, double t, Complex alpha, Complex beta) const {
        const double gamma = cfg.gamma();
        const double tau = cfg.tau();
        if (!(t >= 0.0)) throw Error(Error::Code::domain, "t must be >= 0");
        if (t > t_max * (1.0 + 1e-12))
            throw Error(Error::Code::domain, "t exceeds the evaluator's t_max");
        // Below the delay only the damping term contributes; at lambda = 0
        // every term of H vanishes identically.
        if (t <= tau || lambda == Complex(0.0, 0.0))
            return (std::conj(lambda) * alpha - lambda * std::conj(beta)) *
                   (-std::expm1(-0.5 * gamma * t));

        LambdaArrays a = make_lambda(lambda);
        long kf = static_cast<long>(std::floor(t / h + 1e-9));
        if (kf > n_nodes) kf = n_nodes;

        // [0, tau] in closed form (H is the bare damping term there, and it
        // jumps at tau, so the lattice run starts on the far side).
        Complex total = (std::conj(lambda) * alpha - lambda * std::conj(beta)) *
                        (-std::expm1(-0.5 * gamma * std::min(t, tau)));

        long j0 = per_tau; // first lattice node at s = tau
        std::vector<Complex> hs(static_cast<std::size_t>(kf - j0) + 1);
        std::vector<Complex> scratch;
        for (long j = j0; j <= kf; ++j)
            hs[static_cast<std::size_t>(j - j0)] =
                h_lattice(j, a, alpha, beta, scratch);

        std::vector<long> breaks;
        if (per_tau > 0)
            for (long b = 2 * per_tau; b < kf; b += per_tau)
                breaks.push_back(b - j0);
        total += lattice_integrate(hs, kf - j0, h, breaks);

        // off-lattice tail by direct Gauss nodes
        double t0 = h * static_cast<double>(kf);
        if (t - t0 > 1e-12 * (t + 1.0)) {
            CharFnKernels kern(cfg, lambda);
            double len = t - t0;
            for (int q = 0; q < 4; ++q) {
                double s = t0 + kGL4x[q] * len;
                total += kGL4w[q] * len * h_direct(kern, s, alpha, beta);
            }
        }
        return total;
    }

    // Direct H(s) with lattice-backed M (used for tails and cross-checks).
    Complex h_direct(const CharFnKernels& kern, double s, Complex alpha,
                     Complex beta) const;
};

Complex CharFnEvaluator::Impl::h_direct(const CharFnKernels& kern, double s,
                                        Complex alpha, Complex beta) const {
    return hamiltonian_exponent_direct(kern, s, alpha, beta);
}

CharFnEvaluator::CharFnEvaluator(const FeedbackConfig& config, double t_max)
    : impl_(new Impl(config, t_max)) {}

CharFnEvaluator::~CharFnEvaluator() = default;
CharFnEvaluator::CharFnEvaluator(CharFnEvaluator&&) noexcept = default;
CharFnEvaluator& CharFnEvaluator::operator=(CharFnEvaluator&&) noexcept = default;

const FeedbackConfig& CharFnEvaluator::config() const { return impl_->cfg; }
double CharFnEvaluator::t_max() const { return impl_->t_max; }

Complex CharFnEvaluator::exponent_integral(Complex lambda, double t, Complex alpha,
                                           Complex beta) const {
    return impl_->integral(lambda, t, alpha, beta);
}

CharFnResult CharFnEvaluator::exact(Complex lambda, double t, Complex alpha,
                                    Complex beta) const {
    CharFnResult res;
    res.branch = CharFnBranch::Exact;
    res.log_value = log_displacement_matrix_element(lambda, alpha, beta) +
                    impl_->integral(lambda, t, alpha, beta);
    res.underflowed = res.log_value.real() < -745.0;
    res.value = res.underflowed ? Complex(0.0, 0.0) : std::exp(res.log_value);
    return res;
}

CharFnResult charfn_exact(Complex lambda, double t, Complex alpha, Complex beta,
                          const FeedbackConfig& config) {
    CharFnEvaluator ev(config, std::max(t, 1e-6 / config.gamma()) + config.tau());
    return ev.exact(lambda, t, alpha, beta);
}

} // namespace delayfb
