#include "delayfb/trajectories.hpp"

#include <cmath>

namespace delayfb {

namespace {

const Complex I(0.0, 1.0);

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t level,
                           std::uint64_t index, std::uint64_t stream) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ (level * 0x9e3779b97f4a7c15ULL));
    h = splitmix(h ^ (index * 0xbf58476d1ce4e5b9ULL));
    h = splitmix(h ^ (stream * 0x94d049bb133111ebULL));
    return h;
}

double unit_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

double counter_normal(std::uint64_t seed, std::uint64_t level, std::uint64_t index) {
    double u1 = unit_open(counter_hash(seed, level, index, 0));
    double u2 = unit_open(counter_hash(seed, level, index, 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

WienerPath generate_path(std::uint64_t seed, double dt, double t_max) {
    if (!(dt > 0.0) || !(t_max > 0.0))
        throw Error(Error::Code::domain, "generate_path needs dt > 0 and t_max > 0");
    WienerPath p;
    p.seed = seed;
    p.level = 0;
    p.dt = dt;
    std::size_t n = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
    p.increments.resize(n);
    p.cumulative.resize(n + 1);
    p.cumulative[0] = 0.0;
    double root_dt = std::sqrt(dt);
    for (std::size_t i = 0; i < n; ++i) {
        p.increments[i] = root_dt * counter_normal(seed, 0, i);
        p.cumulative[i + 1] = p.cumulative[i] + p.increments[i];
    }
    return p;
}

WienerPath refine_path(const WienerPath& path) {
    WienerPath out;
    out.seed = path.seed;
    out.level = path.level + 1;
    out.dt = 0.5 * path.dt;
    std::size_t n = path.n_steps();
    out.increments.resize(2 * n);
    out.cumulative.resize(2 * n + 1);
    out.cumulative[0] = 0.0;
    // Bridge midpoint: mean of the endpoints plus N(0, dt/4) keyed at the
    // next level, so the coarse nodes are preserved bit-exactly.
    double half_sd = 0.5 * std::sqrt(path.dt);
    for (std::size_t i = 0; i < n; ++i) {
        double w0 = path.cumulative[i];
        double w1 = path.cumulative[i + 1];
        double wm = 0.5 * (w0 + w1) +
                    half_sd * counter_normal(path.seed,
                                             static_cast<std::uint64_t>(out.level),
                                             i);
        out.increments[2 * i] = wm - w0;
        out.increments[2 * i + 1] = w1 - wm;
        out.cumulative[2 * i + 1] = wm;
        out.cumulative[2 * i + 2] = w1;
    }
    return out;
}

std::pair<Complex, Complex> f_functions(double t, const FeedbackConfig& config) {
    const double gamma = config.gamma();
    const double g = config.g();
    const Complex e_th = std::exp(I * config.theta());
    const Complex e_mphi = std::exp(-I * config.phi());
    const double pre = std::sqrt(gamma) / (2.0 * std::sqrt(2.0));
    const double grow = std::exp(0.5 * gamma * t);
    const double dec = std::exp(-0.5 * gamma * t);
    const Complex common =
        -I * g / e_th + 2.0 * e_mphi + I * g * e_th * e_mphi * e_mphi;
    Complex f1 = pre * (-I * g * (1.0 + e_mphi * e_mphi) * e_th * grow + common * dec);
    Complex f2 = pre * (-g * (1.0 - e_mphi * e_mphi) * e_th * grow + I * common * dec);
    return {f1, f2};
}

Complex ItoFunctionals::chi_plus(std::size_t i) const {
    return (chi1[i] + I * chi2[i]) / std::sqrt(2.0);
}

Complex ItoFunctionals::chi_minus(std::size_t i) const {
    return (chi1[i] - I * chi2[i]) / std::sqrt(2.0);
}

ItoFunctionals ito_functionals(const WienerPath& path, const FeedbackConfig& config) {
    std::size_t n = path.n_steps();
    ItoFunctionals f;
    f.chi1.assign(n + 1, 0.0);
    f.chi2.assign(n + 1, 0.0);
    f.lambda_phase.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto [f1, f2] = f_functions(path.t_at(i), config);
        double dw = path.increments[i];
        f.chi1[i + 1] = f.chi1[i] + f1 * dw;
        f.chi2[i + 1] = f.chi2[i] + f2 * dw;
        f.lambda_phase[i + 1] =
            f.lambda_phase[i] + (f1 * f.chi2[i] - f2 * f.chi1[i]) * dw;
    }
    return f;
}

namespace {

Complex log_weight_at(Complex chi_p, Complex chi_m, Complex lam, double t,
                      Complex alpha0, const FeedbackConfig& config) {
    const double gamma = config.gamma();
    const Complex e_m2phi = std::exp(-2.0 * I * config.phi());
    Complex shifted = chi_p + alpha0;
    return I * lam + 0.5 * (std::conj(chi_p) + chi_m) * (chi_p + 2.0 * alpha0) +
           I * std::imag(chi_p * std::conj(alpha0)) +
           I * 0.25 * config.g() * gamma * t *
               std::exp(I * (config.theta() - config.phi())) +
           0.5 * (std::norm(shifted) + shifted * shifted * e_m2phi) *
               std::expm1(-gamma * t);
}

} // namespace

std::vector<TrajectoryState> trajectory(const WienerPath& path, Complex alpha0,
                                        const FeedbackConfig& config) {
    ItoFunctionals f = ito_functionals(path, config);
    std::size_t n = path.n_steps();
    std::vector<TrajectoryState> out(n + 1);
    const double gamma = config.gamma();
    for (std::size_t i = 0; i <= n; ++i) {
        double t = path.t_at(i);
        Complex cp = f.chi_plus(i);
        Complex cm = f.chi_minus(i);
        TrajectoryState& s = out[i];
        s.t = t;
        s.chi1 = f.chi1[i];
        s.chi2 = f.chi2[i];
        s.lambda_phase = f.lambda_phase[i];
        s.amplitude = (cp + alpha0) * std::exp(-0.5 * gamma * t);
        s.log_weight = log_weight_at(cp, cm, f.lambda_phase[i], t, alpha0, config);
        s.weight = std::exp(s.log_weight);
    }
    return out;
}

std::vector<Complex> coherence_trajectory(const WienerPath& path, Complex alpha0,
                                          const FeedbackConfig& config,
                                          CoherenceMode mode) {
    std::size_t n = path.n_steps();
    std::vector<Complex> out(n + 1);

    if (mode == CoherenceMode::Asymptotic) {
        if (config.phi() != 0.0)
            throw Error(Error::Code::phase_convention,
                        "asymptotic coherence assumes phi = 0");
        if (std::abs(alpha0.real()) > 1e-12 * (1.0 + std::abs(alpha0)))
            throw Error(Error::Code::precondition,
                        "asymptotic coherence assumes Re{alpha0} = 0");
        const double gamma = config.gamma();
        const double g = config.g();
        const double mag = std::abs(alpha0);
        const double drift = 1.0 - g * std::sin(config.theta());
        for (std::size_t i = 0; i <= n; ++i) {
            double w = path.cumulative[i];
            out[i] = 0.5 * std::exp(Complex(-0.25 * gamma * g * g * w * w,
                                            -2.0 * std::sqrt(gamma) * mag * drift * w));
        }
        return out;
    }

    // Full mode: the cat's two branches share the path functionals; weights
    // and overlaps are combined in log space (their separate magnitudes reach
    // e^{+-|alpha0|^2}).
    ItoFunctionals f = ito_functionals(path, config);
    const double gamma = config.gamma();
    for (std::size_t i = 0; i <= n; ++i) {
        double t = path.t_at(i);
        Complex cp = f.chi_plus(i);
        Complex cm = f.chi_minus(i);
        Complex lam = f.lambda_phase[i];
        double dec = std::exp(-0.5 * gamma * t);
        Complex zp = (cp + alpha0) * dec;
        Complex zm = (cp - alpha0) * dec;
        Complex le_p = log_weight_at(cp, cm, lam, t, alpha0, config);
        Complex le_m = log_weight_at(cp, cm, lam, t, -alpha0, config);

        // <-a0|psi><psi|a0> / <psi|psi> with |psi> = N(E+ |zp> + E- |zm>)
        Complex bra_terms[2] = {le_p + log_overlap(-alpha0, zp),
                                le_m + log_overlap(-alpha0, zm)};
        Complex ket_terms[2] = {std::conj(le_p) + log_overlap(zp, alpha0),
                                std::conj(le_m) + log_overlap(zm, alpha0)};
        Complex den_terms[4] = {le_p + std::conj(le_p),
                                le_m + std::conj(le_m),
                                std::conj(le_p) + le_m + log_overlap(zp, zm),
                                std::conj(le_m) + le_p + log_overlap(zm, zp)};

        auto reduce = [](const Complex* terms, int count, double& scale) {
            double m = terms[0].real();
            for (int q = 1; q < count; ++q) m = std::max(m, terms[q].real());
            Complex s = 0.0;
            for (int q = 0; q < count; ++q) s += std::exp(terms[q] - Complex(m, 0.0));
            scale = m;
            return s;
        };
        double mb, mk, md;
        Complex sb = reduce(bra_terms, 2, mb);
        Complex sk = reduce(ket_terms, 2, mk);
        Complex sd = reduce(den_terms, 4, md);
        out[i] = std::exp(Complex(mb + mk - md, 0.0)) * sb * sk / sd;
    }
    return out;
}

namespace {

void apply_lower(const std::vector<Complex>& in, std::vector<Complex>& out) {
    std::size_t n = in.size();
    for (std::size_t m = 0; m + 1 < n; ++m)
        out[m] = std::sqrt(static_cast<double>(m + 1)) * in[m + 1];
    out[n - 1] = 0.0;
}

void apply_raise(const std::vector<Complex>& in, std::vector<Complex>& out) {
    std::size_t n = in.size();
    for (std::size_t m = n - 1; m > 0; --m)
        out[m] = std::sqrt(static_cast<double>(m)) * in[m - 1];
    out[0] = 0.0;
}

} // namespace

std::vector<Complex> coherent_fock_vector(Complex z, int n_max) {
    std::vector<Complex> v(static_cast<std::size_t>(n_max) + 1);
    Complex log_term = -0.5 * std::norm(z); // log of amplitude on |0>
    v[0] = std::exp(log_term);
    for (int m = 1; m <= n_max; ++m) {
        log_term += std::log(z) - 0.5 * std::log(static_cast<double>(m));
        v[static_cast<std::size_t>(m)] = std::exp(log_term);
    }
    if (z == Complex(0.0, 0.0))
        for (int m = 1; m <= n_max; ++m) v[static_cast<std::size_t>(m)] = 0.0;
    return v;
}

Complex coherent_fock_overlap(Complex z, const std::vector<Complex>& psi) {
    std::vector<Complex> zv = coherent_fock_vector(z, static_cast<int>(psi.size()) - 1);
    Complex acc = 0.0;
    for (std::size_t m = 0; m < psi.size(); ++m) acc += std::conj(zv[m]) * psi[m];
    return acc;
}

double fock_norm(const std::vector<Complex>& psi) {
    double acc = 0.0;
    for (const auto& c : psi) acc += std::norm(c);
    return std::sqrt(acc);
}

FockTrajectory fock_sde_oracle(const WienerPath& path, Complex alpha0,
                               const FeedbackConfig& config, int n_max,
                               SdeScheme scheme) {
    if (config.tau() != 0.0)
        throw Error(Error::Code::precondition,
                    "the Fock SDE oracle integrates the tau = 0 equation");
    if (!(std::norm(alpha0) + 5.0 * std::abs(alpha0) < static_cast<double>(n_max)))
        throw Error(Error::Code::precondition,
                    "n_max too small for the requested amplitude");

    const double gamma = config.gamma();
    const double g = config.g();
    const Complex e_th = std::exp(I * config.theta());
    const Complex e_mphi = std::exp(-I * config.phi());
    const std::size_t dim = static_cast<std::size_t>(n_max) + 1;

    std::vector<Complex> f_lo(dim), f_hi(dim), buf1(dim), buf2(dim), buf3(dim);

    auto apply_f = [&](const std::vector<Complex>& in, std::vector<Complex>& out) {
        apply_lower(in, f_lo);
        apply_raise(in, f_hi);
        for (std::size_t m = 0; m < dim; ++m)
            out[m] = 0.5 * g * (f_lo[m] / e_th + f_hi[m] * e_th);
    };
    // A = -g/2 a^dag a - g/2 F^2 - i g F a e^{-i phi}
    auto apply_a_op = [&](const std::vector<Complex>& in, std::vector<Complex>& out) {
        apply_f(in, buf1);
        apply_f(buf1, buf2); // F^2 in -> buf2
        apply_lower(in, buf3);
        for (std::size_t m = 0; m < dim; ++m) buf3[m] *= e_mphi;
        apply_f(buf3, buf1); // F a e^{-i phi} in -> buf1
        for (std::size_t m = 0; m < dim; ++m)
            out[m] = -0.5 * gamma * static_cast<double>(m) * in[m] -
                     0.5 * gamma * buf2[m] - I * gamma * buf1[m];
    };
    // B = sqrt(gamma) (a e^{-i phi} - i F)
    auto apply_b_op = [&](const std::vector<Complex>& in, std::vector<Complex>& out) {
        apply_lower(in, buf3);
        apply_f(in, buf1);
        for (std::size_t m = 0; m < dim; ++m)
            out[m] = std::sqrt(gamma) * (buf3[m] * e_mphi - I * buf1[m]);
    };

    FockTrajectory traj;
    traj.n_max = n_max;
    traj.dt = path.dt;
    std::size_t n = path.n_steps();
    traj.t.resize(n + 1);
    traj.psi.resize(n + 1);
    traj.psi[0] = coherent_fock_vector(alpha0, n_max);
    traj.t[0] = 0.0;

    std::vector<Complex> a_psi(dim), b_psi(dim), bb_psi(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<Complex>& cur = traj.psi[i];
        double dw = path.increments[i];
        double dt = path.dt;
        apply_a_op(cur, a_psi);
        apply_b_op(cur, b_psi);
        std::vector<Complex> next(dim);
        if (scheme == SdeScheme::Milstein) {
            apply_b_op(b_psi, bb_psi);
            for (std::size_t m = 0; m < dim; ++m)
                next[m] = cur[m] + a_psi[m] * dt + b_psi[m] * dw +
                          0.5 * bb_psi[m] * (dw * dw - dt);
        } else {
            for (std::size_t m = 0; m < dim; ++m)
                next[m] = cur[m] + a_psi[m] * dt + b_psi[m] * dw;
        }
        double norm2 = 0.0;
        for (const auto& c : next) norm2 += std::norm(c);
        if (std::norm(next[dim - 1]) > 1e-8 * norm2)
            throw Error(Error::Code::truncation_leak,
                        "population reached the top Fock level");
        traj.psi[i + 1] = std::move(next);
        traj.t[i + 1] = path.t_at(i + 1);
    }
    return traj;
}

} // namespace delayfb
