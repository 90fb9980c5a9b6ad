#include <doctest.h>

#include <cmath>
#include <complex>

#include "delayfb/model.hpp"
#include "delayfb/serialization.hpp"

using namespace delayfb;

namespace {
double unif(std::uint64_t idx) {
    std::uint64_t z = idx * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
}
} // namespace

TEST_CASE("config validation rejects bad parameters with distinct codes") {
    CHECK_NOTHROW(FeedbackConfig(1.0, 0.5, 0.3, 0.1, 0.2, 0.9));

    auto code_of = [](auto&& make) {
        try {
            make();
        } catch (const Error& e) {
            return e.code();
        }
        return Error::Code::io;
    };
    CHECK(code_of([] { return FeedbackConfig(0.0, 0, 0, 0, 0); }) ==
          Error::Code::config_gamma);
    CHECK(code_of([] { return FeedbackConfig(-1.0, 0, 0, 0, 0); }) ==
          Error::Code::config_gamma);
    CHECK(code_of([] { return FeedbackConfig(1.0, 0, 0, 0, -0.1); }) ==
          Error::Code::config_tau);
    CHECK(code_of([] { return FeedbackConfig(1.0, 0, 0, 0, 0.0, 0.0); }) ==
          Error::Code::config_eta);
    CHECK(code_of([] { return FeedbackConfig(1.0, 0, 0, 0, 0.0, 1.2); }) ==
          Error::Code::config_eta);
}

TEST_CASE("k = g sin(theta - phi) is cached") {
    FeedbackConfig cfg(2.0, 0.7, 1.3, 0.4, 0.0);
    CHECK(cfg.k() == doctest::Approx(0.7 * std::sin(0.9)).epsilon(1e-15));
}

TEST_CASE("overlap basics") {
    Complex a(0.4, -1.2);
    CHECK(std::abs(overlap(a, a) - 1.0) < 1e-15);
    CHECK(std::abs(overlap(Complex(0, 0), a) -
                   std::exp(-0.5 * std::norm(a))) < 1e-15);
    // <alpha0|-alpha0> with alpha0 = i5
    Complex a0(0.0, 5.0);
    CHECK(overlap(a0, -a0).real() == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));
    CHECK(std::abs(overlap(a0, -a0).imag()) < 1e-30);
}

TEST_CASE("overlap conjugation symmetry") {
    for (int i = 0; i < 40; ++i) {
        Complex b(2 * unif(4 * i) - 1, 2 * unif(4 * i + 1) - 1);
        Complex a(2 * unif(4 * i + 2) - 1, 2 * unif(4 * i + 3) - 1);
        CHECK(std::abs(overlap(b, a) - std::conj(overlap(a, b))) < 1e-15);
    }
}

TEST_CASE("cat state weights are normalized") {
    SUBCASE("alpha0 = 0 degenerates to the vacuum") {
        CoherentSuperposition cat = cat_state(Complex(0, 0));
        // both coefficients 1/2 after renormalization: the state is |0>
        CHECK(cat.terms()[0].coeff.real() == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(cat.norm_squared() == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("alpha0 = i5 has near-equal halves") {
        CoherentSuperposition cat = cat_state(Complex(0, 5));
        CHECK(cat.norm_squared() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(cat.weight(0, 0).real() - 0.5) < 1e-10);
    }
    SUBCASE("alpha0 = 1: direct overlap summation equals one") {
        CoherentSuperposition cat = cat_state(Complex(1, 0));
        Complex total = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                total += cat.weight(i, j) *
                         overlap(cat.terms()[j].alpha, cat.terms()[i].alpha);
        CHECK(total.real() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(total.imag()) < 1e-14);
    }
}

TEST_CASE("as-given superpositions are kept verbatim") {
    CoherentSuperposition s({{Complex(1, 0), Complex(2, 0)}}, NormMode::AsGiven);
    CHECK(s.terms()[0].coeff.real() == 2.0);
    CHECK(s.norm_squared() == doctest::Approx(4.0));
}

TEST_CASE("tau knots and time grid") {
    auto knots = tau_knots(0.0, 1.05, 0.25);
    REQUIRE(knots.size() == 4);
    CHECK(knots[0] == doctest::Approx(0.25));
    CHECK(knots[3] == doctest::Approx(1.0));
    CHECK(tau_knots(0.0, 1.0, 0.0).empty());

    TimeGrid grid(0.0, 2.0, 5, 0.6);
    auto p = grid.points();
    CHECK(p.size() == 5);
    CHECK(p.front() == 0.0);
    CHECK(p.back() == 2.0);
    REQUIRE(grid.knots.size() == 3);
}

TEST_CASE("JSON round trip") {
    FeedbackConfig cfg(1.5, 0.3, 0.7, 0.2, 0.05, 0.95);
    auto j = to_json(cfg);
    FeedbackConfig back = config_from_json(j);
    CHECK(back.gamma() == cfg.gamma());
    CHECK(back.tau() == cfg.tau());
    CHECK(back.k() == cfg.k());

    CoherentSuperposition cat = cat_state(Complex(0, 2));
    auto js = to_json(cat);
    CoherentSuperposition back_s = superposition_from_json(js);
    CHECK(back_s.terms().size() == 2);
    CHECK(back_s.terms()[0].alpha == cat.terms()[0].alpha);
    CHECK(back_s.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
}
