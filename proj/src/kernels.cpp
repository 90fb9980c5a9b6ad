#include "delayfb/kernels.hpp"

#include <cmath>

namespace delayfb {

namespace {
const Complex I(0.0, 1.0);
}

Complex KernelSet::x_input(double dt) const {
    if (dt < 0.0) return 0.0;
    const double g = cfg_.gamma();
    const double tau = cfg_.tau();
    double bracket = chi_.value(dt);
    if (dt >= tau) bracket -= cfg_.k() * chi_.value(dt - tau);
    return -0.5 * std::sqrt(g) * std::exp(-I * cfg_.phi()) * bracket;
}

Complex KernelSet::x_feedback(double dt) const {
    if (dt < 0.0) return 0.0;
    const double g = cfg_.gamma();
    const double tau = cfg_.tau();
    const double sqrt_eta = std::sqrt(cfg_.eta());
    double bracket = sqrt_eta * chi_.value(dt);
    if (dt >= tau) bracket -= cfg_.k() / sqrt_eta * chi_.value(dt - tau);
    return -0.5 * std::sqrt(g) * std::exp(-I * cfg_.phi()) * bracket;
}

Complex KernelSet::a_input(double dt) const {
    const double tau = cfg_.tau();
    if (dt < tau) return 0.0;
    const double g = cfg_.gamma();
    double bracket = std::exp(-0.5 * g * (dt - tau)) - chi_.shifted(dt);
    if (dt >= 2.0 * tau)
        bracket += chi_.value(dt - tau) - std::exp(-0.5 * g * (dt - tau));
    return 0.5 * I * std::sqrt(g) * cfg_.g() *
           std::exp(I * (cfg_.theta() + cfg_.phi())) * bracket;
}

Complex KernelSet::adag_input(double dt) const {
    return -2.0 * std::exp(-I * cfg_.phi()) * std::conj(x_input(dt)) -
           std::exp(-2.0 * I * cfg_.phi()) * a_input(dt);
}

Complex KernelSet::a_feedback(double dt) const {
    const double tau = cfg_.tau();
    if (dt < tau) return 0.0;
    const double g = cfg_.gamma();
    const double eta = cfg_.eta();
    double bracket = std::exp(-0.5 * g * (dt - tau)) - eta * chi_.shifted(dt);
    if (dt >= 2.0 * tau)
        bracket += chi_.value(dt - tau) - std::exp(-0.5 * g * (dt - tau));
    return I * std::sqrt(0.25 * g / eta) * cfg_.g() *
           std::exp(I * (cfg_.theta() + cfg_.phi())) * bracket;
}

Complex KernelSet::adag_feedback(double dt) const {
    return -2.0 * std::exp(-I * cfg_.phi()) * std::conj(x_feedback(dt)) -
           std::exp(-2.0 * I * cfg_.phi()) * a_feedback(dt);
}

} // namespace delayfb
