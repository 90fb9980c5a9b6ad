#pragma once

#include "delayfb/chi.hpp"
#include "delayfb/model.hpp"

namespace delayfb {

// The six c-number response kernels: equal-time commutators between cavity
// operators and the past Ito noise increments, per unit dt'. All vanish for
// negative time difference (causality); the feedback-loop entries switch on
// only after one (or two) delay periods.
//
//   x_input(dt)       [X_phi(t), dB^dag(t-dt)]       "F"
//   x_feedback(dt)    [X_phi(t), dB_f^dag(t-dt)]     "F_f"
//   a_input(dt)       [a(t),     dB(t-dt)]           "R"
//   adag_input(dt)    [a^dag(t), dB(t-dt)]           "R_1"
//   a_feedback(dt)    [a(t),     dB_f(t-dt)]         "R^f"
//   adag_feedback(dt) [a^dag(t), dB_f(t-dt)]         "R_1^f"
//
// The (chi - decay)/k ratios inside a_input / a_feedback are evaluated with
// the shifted series, which is regular for every k including k = 0.
class KernelSet {
public:
    explicit KernelSet(const FeedbackConfig& config)
        : cfg_(config), chi_(config) {}

    Complex x_input(double dt) const;
    Complex x_feedback(double dt) const;
    Complex a_input(double dt) const;
    Complex adag_input(double dt) const;
    Complex a_feedback(double dt) const;
    Complex adag_feedback(double dt) const;

    const FeedbackConfig& config() const { return cfg_; }
    const ChiEvaluator& chi() const { return chi_; }

private:
    FeedbackConfig cfg_;
    ChiEvaluator chi_;
};

} // namespace delayfb
