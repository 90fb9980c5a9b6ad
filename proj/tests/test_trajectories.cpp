#include <doctest.h>

#include <cmath>

#include "delayfb/trajectories.hpp"

using namespace delayfb;

namespace {
const Complex I(0.0, 1.0);
}

TEST_CASE("path generation is deterministic and reproducible") {
    WienerPath a = generate_path(42, 1e-3, 0.1);
    WienerPath b = generate_path(42, 1e-3, 0.1);
    REQUIRE(a.n_steps() == b.n_steps());
    CHECK(a.n_steps() == 100);
    for (std::size_t i = 0; i < a.n_steps(); ++i)
        CHECK(a.increments[i] == b.increments[i]);
    CHECK(a.cumulative[0] == 0.0);
    WienerPath c = generate_path(43, 1e-3, 0.1);
    CHECK(a.increments[0] != c.increments[0]);
}

TEST_CASE("ensemble statistics of w(t)") {
    const int n_seeds = 10000;
    const double t_max = 1.0;
    double mean = 0.0, var = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        WienerPath p = generate_path(static_cast<std::uint64_t>(s), 0.02, t_max);
        double w = p.cumulative.back();
        mean += w;
        var += w * w;
    }
    mean /= n_seeds;
    var = var / n_seeds - mean * mean;
    CHECK(std::abs(mean / std::sqrt(t_max)) < 0.05);
    CHECK(std::abs(var - t_max) < 0.05 * t_max);
}

TEST_CASE("bridge refinement preserves the coarse path") {
    WienerPath p = generate_path(7, 1e-2, 0.2);
    WienerPath r = refine_path(p);
    CHECK(r.dt == doctest::Approx(5e-3));
    CHECK(r.n_steps() == 2 * p.n_steps());
    for (std::size_t i = 0; i <= p.n_steps(); ++i)
        CHECK(r.cumulative[2 * i] == p.cumulative[i]);
}

TEST_CASE("f functions") {
    SUBCASE("no feedback, phi = 0") {
        FeedbackConfig cfg(2.0, 0.0, 1.3, 0.0, 0.0);
        for (double t : {0.0, 0.4}) {
            auto [f1, f2] = f_functions(t, cfg);
            Complex want1 = std::sqrt(1.0) * std::exp(-t); // sqrt(gamma/2) e^{-gamma t/2}
            CHECK(std::abs(f1 - want1) < 1e-14);
            CHECK(std::abs(f2 - I * want1) < 1e-14);
        }
    }
    SUBCASE("finite at t = 0") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        auto [f1, f2] = f_functions(0.0, cfg);
        CHECK(std::isfinite(f1.real()));
        CHECK(std::isfinite(f2.real()));
    }
    SUBCASE("pinned values at theta = pi/2, phi = 0") {
        // f1 = sqrt(gamma/2)[g e^{gamma t/2} + (1-g) e^{-gamma t/2}],
        // f2 = i sqrt(gamma/2) (1-g) e^{-gamma t/2}
        FeedbackConfig cfg(2.0, 1.0, M_PI_2, 0.0, 0.0);
        auto [f1, f2] = f_functions(0.3, cfg);
        CHECK(f1.real() == doctest::Approx(std::exp(0.3)).epsilon(1e-13));
        CHECK(std::abs(f1.imag()) < 1e-14);
        CHECK(std::abs(f2) < 1e-14);
        FeedbackConfig cfg2(2.0, 0.3, M_PI_2, 0.0, 0.0);
        auto [g1, g2] = f_functions(0.5, cfg2);
        CHECK(g1.real() ==
              doctest::Approx(0.3 * std::exp(0.5) + 0.7 * std::exp(-0.5))
                  .epsilon(1e-13));
        CHECK(g2.imag() == doctest::Approx(0.7 * std::exp(-0.5)).epsilon(1e-13));
    }
}

TEST_CASE("ito functionals") {
    FeedbackConfig cfg(1.0, 0.8, 1.1, 0.0, 0.0);
    SUBCASE("zero path gives zero functionals") {
        WienerPath p = generate_path(3, 1e-2, 0.1);
        for (auto& dw : p.increments) dw = 0.0;
        for (auto& w : p.cumulative) w = 0.0;
        ItoFunctionals f = ito_functionals(p, cfg);
        for (std::size_t i = 0; i <= p.n_steps(); ++i) {
            CHECK(std::abs(f.chi1[i]) == 0.0);
            CHECK(std::abs(f.chi2[i]) == 0.0);
            CHECK(std::abs(f.lambda_phase[i]) == 0.0);
        }
    }
    SUBCASE("single increment: chi_j(dt) = f_j(0) dw") {
        WienerPath p = generate_path(3, 1e-2, 0.05);
        for (auto& dw : p.increments) dw = 0.0;
        p.increments[0] = 0.37;
        ItoFunctionals f = ito_functionals(p, cfg);
        auto [f1, f2] = f_functions(0.0, cfg);
        CHECK(std::abs(f.chi1[1] - f1 * 0.37) < 1e-15);
        CHECK(std::abs(f.chi2[1] - f2 * 0.37) < 1e-15);
        // the phase functional needs chi at the left point, which is zero
        CHECK(std::abs(f.lambda_phase[1]) == 0.0);
        // afterwards everything freezes (no further increments)
        CHECK(std::abs(f.chi1.back() - f.chi1[1]) == 0.0);
    }
    SUBCASE("chi_plus/minus reconstruction") {
        WienerPath p = generate_path(11, 1e-3, 0.02);
        ItoFunctionals f = ito_functionals(p, cfg);
        std::size_t i = p.n_steps();
        CHECK(std::abs(f.chi_plus(i) -
                       (f.chi1[i] + I * f.chi2[i]) / std::sqrt(2.0)) < 1e-15);
    }
    SUBCASE("strong convergence under bridge refinement") {
        // mean |chi_plus(t_max) - finest| over a seed ensemble shrinks as the
        // Ito sums refine on the bridge-shared Brownian paths
        FeedbackConfig cfgv(1.0, 1.0, 0.9, 0.0, 0.0);
        const int n_seeds = 64;
        double e1 = 0.0, e2 = 0.0, e4 = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            WienerPath p = generate_path(static_cast<std::uint64_t>(s), 2e-3, 0.2);
            WienerPath p2 = refine_path(p);
            WienerPath p4 = refine_path(p2);
            WienerPath p8 = refine_path(p4);
            auto tail = [&](const WienerPath& path) {
                ItoFunctionals f = ito_functionals(path, cfgv);
                return f.chi_plus(path.n_steps());
            };
            Complex ref = tail(p8);
            e1 += std::abs(tail(p) - ref);
            e2 += std::abs(tail(p2) - ref);
            e4 += std::abs(tail(p4) - ref);
        }
        CHECK(e2 < e1);
        CHECK(e4 < e2);
        CHECK(e1 / e4 > 2.0); // at least the sqrt(dt) trend over two halvings
    }
}

TEST_CASE("trajectory closed form") {
    SUBCASE("g = 0 keeps the amplitude on the damped coherent orbit") {
        FeedbackConfig cfg(1.0, 0.0, 1.3, 0.0, 0.0);
        WienerPath p = generate_path(9, 1e-3, 0.3);
        Complex a0(0.7, -0.4);
        auto states = trajectory(p, a0, cfg);
        // chi_plus vanishes identically at g = 0 regardless of the path
        for (std::size_t i = 0; i <= p.n_steps(); i += 50) {
            Complex want = a0 * std::exp(-0.5 * states[i].t);
            CHECK(std::abs(states[i].amplitude - want) < 1e-12);
        }
    }
    SUBCASE("initial state") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(1, 1e-3, 0.05);
        Complex a0(0.5, 0.5);
        auto states = trajectory(p, a0, cfg);
        CHECK(states[0].amplitude == a0);
        CHECK(std::abs(states[0].weight - 1.0) < 1e-15);
    }
}

TEST_CASE("coherence along a trajectory") {
    Complex a0(0.0, 5.0);
    SUBCASE("zero path gives 1/2 in asymptotic mode") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(3, 1e-3, 0.02);
        for (auto& dw : p.increments) dw = 0.0;
        for (auto& w : p.cumulative) w = 0.0;
        auto c = coherence_trajectory(p, a0, cfg, CoherenceMode::Asymptotic);
        for (auto& z : c) CHECK(std::abs(z - 0.5) < 1e-15);
    }
    SUBCASE("asymptotic modulus is theta-independent") {
        WienerPath p = generate_path(21, 1e-3, 0.03);
        std::vector<double> base;
        for (double theta : {0.4, 1.1, M_PI_2, 2.5}) {
            FeedbackConfig cfg(1.0, 1.0, theta, 0.0, 0.0);
            auto c = coherence_trajectory(p, a0, cfg, CoherenceMode::Asymptotic);
            if (base.empty())
                for (auto& z : c) base.push_back(std::abs(z));
            else
                for (std::size_t i = 0; i < c.size(); ++i)
                    CHECK(std::abs(std::abs(c[i]) - base[i]) <= 1e-14);
        }
    }
    SUBCASE("g = 1, theta = pi/2 modulus is exp(-gamma w^2/4)/2") {
        FeedbackConfig cfg(1.3, 1.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(33, 1e-3, 0.05);
        auto c = coherence_trajectory(p, a0, cfg, CoherenceMode::Asymptotic);
        for (std::size_t i = 0; i <= p.n_steps(); i += 17) {
            double w = p.cumulative[i];
            CHECK(std::abs(c[i]) ==
                  doctest::Approx(0.5 * std::exp(-1.3 * w * w / 4.0)).epsilon(1e-12));
        }
    }
    SUBCASE("full mode starts at the cat value ~1/2") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(4, 1e-3, 0.02);
        auto c = coherence_trajectory(p, a0, cfg, CoherenceMode::Full);
        double want = (1.0 + std::exp(-50.0)) / (2.0 + 2.0 * std::exp(-50.0));
        CHECK(std::abs(c[0] - want) < 1e-12);
    }
    SUBCASE("full mode agrees with a Fock evolution of the cat state") {
        // evolve the cat through the linear SDE in the number basis and form
        // <-a0|psi><psi|a0>/<psi|psi> directly
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        Complex small_cat(0.0, 1.5);
        WienerPath p = generate_path(17, 1e-4, 0.1);
        auto cf = coherence_trajectory(p, small_cat, cfg, CoherenceMode::Full);

        int n_max = 24;
        auto plus = coherent_fock_vector(small_cat, n_max);
        auto minus = coherent_fock_vector(-small_cat, n_max);
        // unnormalized cat vector; normalization cancels in the ratio
        std::vector<Complex> cat_vec(plus.size());
        for (std::size_t m = 0; m < plus.size(); ++m)
            cat_vec[m] = plus[m] + minus[m];
        // linearity: evolve the two branches separately through the oracle
        FockTrajectory fp = fock_sde_oracle(p, small_cat, cfg, n_max);
        FockTrajectory fm = fock_sde_oracle(p, -small_cat, cfg, n_max);
        std::size_t end = p.n_steps();
        std::vector<Complex> psi(plus.size());
        for (std::size_t m = 0; m < psi.size(); ++m)
            psi[m] = fp.psi[end][m] + fm.psi[end][m];
        Complex bra = coherent_fock_overlap(-small_cat, psi);
        Complex ket = std::conj(coherent_fock_overlap(small_cat, psi));
        double nrm2 = fock_norm(psi) * fock_norm(psi);
        Complex want = bra * ket / nrm2;
        CHECK(std::abs(cf[end] - want) < 1e-3);
    }
    SUBCASE("asymptotic modulus tracks full mode at early times") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(17, 1e-4, 0.01);
        auto cf = coherence_trajectory(p, a0, cfg, CoherenceMode::Full);
        auto ca = coherence_trajectory(p, a0, cfg, CoherenceMode::Asymptotic);
        std::size_t end = p.n_steps();
        CHECK(std::abs(cf[end]) ==
              doctest::Approx(std::abs(ca[end])).epsilon(0.05));
    }
    SUBCASE("phase fluctuations dominate off the magic phase") {
        // at theta = pi/4 the spread across seeds sits almost entirely in
        // arg(C_w), not |C_w|
        FeedbackConfig cfg(1.0, 1.0, M_PI_4, 0.0, 0.0);
        double t_max = 0.01;
        double var_arg = 0.0, var_mag = 0.0, m_arg = 0.0, m_mag = 0.0;
        const int n_seeds = 200;
        for (int s = 0; s < n_seeds; ++s) {
            WienerPath p = generate_path(static_cast<std::uint64_t>(s), 1e-4, t_max);
            auto c = coherence_trajectory(p, a0, cfg, CoherenceMode::Asymptotic);
            double arg = std::arg(c.back());
            double mag = std::abs(c.back()) / 0.5;
            m_arg += arg;
            m_mag += mag;
            var_arg += arg * arg;
            var_mag += mag * mag;
        }
        m_arg /= n_seeds;
        m_mag /= n_seeds;
        var_arg = var_arg / n_seeds - m_arg * m_arg;
        var_mag = var_mag / n_seeds - m_mag * m_mag;
        CHECK(var_arg / var_mag > 10.0);
    }
}

TEST_CASE("fock SDE oracle") {
    SUBCASE("preconditions") {
        WienerPath p = generate_path(1, 1e-3, 0.01);
        FeedbackConfig delayed(1.0, 1.0, M_PI_2, 0.0, 0.1);
        CHECK_THROWS_AS((void)fock_sde_oracle(p, Complex(1, 0), delayed, 20), Error);
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        CHECK_THROWS_AS((void)fock_sde_oracle(p, Complex(3, 0), cfg, 10), Error);
    }
    SUBCASE("pure damping keeps a coherent state (zero path)") {
        FeedbackConfig cfg(1.0, 0.0, M_PI_2, 0.0, 0.0);
        WienerPath p = generate_path(2, 1e-4, 0.5);
        for (auto& dw : p.increments) dw = 0.0;
        for (auto& w : p.cumulative) w = 0.0;
        FockTrajectory ft = fock_sde_oracle(p, Complex(1, 0), cfg, 20);
        std::size_t end = p.n_steps();
        Complex z = std::exp(-0.25); // e^{-gamma t/2} at gamma t = 0.5
        double nrm = fock_norm(ft.psi[end]);
        double fid = std::norm(coherent_fock_overlap(z, ft.psi[end])) / (nrm * nrm);
        CHECK(fid > 1.0 - 1e-6);
    }
    SUBCASE("matches the closed-form amplitude and weight on a random path") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        Complex a0(1.0, 0.0);
        WienerPath p = generate_path(12, 1e-4, 0.5);
        FockTrajectory ft = fock_sde_oracle(p, a0, cfg, 30);
        auto states = trajectory(p, a0, cfg);
        std::size_t end = p.n_steps();
        double nrm = fock_norm(ft.psi[end]);
        double fid = std::norm(coherent_fock_overlap(states[end].amplitude,
                                                     ft.psi[end])) /
                     (nrm * nrm);
        CHECK(fid > 1.0 - 1e-3);
        CHECK(std::abs(nrm - std::abs(states[end].weight)) <
              1e-3 * std::abs(states[end].weight));
    }
    SUBCASE("halving dt improves the match") {
        FeedbackConfig cfg(1.0, 1.0, M_PI_2, 0.0, 0.0);
        Complex a0(1.0, 0.0);
        WienerPath coarse = generate_path(8, 4e-4, 0.2);
        WienerPath fine = refine_path(coarse);
        auto gap = [&](const WienerPath& p) {
            FockTrajectory ft = fock_sde_oracle(p, a0, cfg, 30);
            auto states = trajectory(p, a0, cfg);
            std::size_t end = p.n_steps();
            double nrm = fock_norm(ft.psi[end]);
            return std::abs(nrm - std::abs(states[end].weight));
        };
        CHECK(gap(fine) < gap(coarse));
    }
}
