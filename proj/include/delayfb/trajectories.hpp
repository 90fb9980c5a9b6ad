#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "delayfb/model.hpp"

namespace delayfb {

// Zero-delay stochastic trajectories: the cavity state conditioned on one
// homodyne record stays coherent; its amplitude and complex weight are Ito
// functionals of the Wiener path. All stochastic integrals are left-point
// (Ito) sums.

// Deterministic Gaussian increments from a counter-based generator: each
// increment is produced by hashing (seed, level, index, stream) with a
// splitmix64-style mixer and feeding two 53-bit uniforms through Box-Muller.
// Identical (seed, dt, n_steps) always reproduce the identical path, and
// refine_path() halves dt by Brownian-bridge subdivision keyed at the next
// level, preserving the coarse path exactly.
struct WienerPath {
    std::uint64_t seed = 0;
    int level = 0; // refinement depth; 0 for freshly generated paths
    double dt = 0.0;
    std::vector<double> increments; // N(0, dt) samples, one per step
    std::vector<double> cumulative; // w(t) prefix sums; cumulative[0] = 0

    std::size_t n_steps() const { return increments.size(); }
    double t_at(std::size_t i) const { return dt * static_cast<double>(i); }
};

WienerPath generate_path(std::uint64_t seed, double dt, double t_max);
WienerPath refine_path(const WienerPath& path);

// standard normal from the counter hash (exposed for tests)
double counter_normal(std::uint64_t seed, std::uint64_t level, std::uint64_t index);

// The two deterministic integrand functions f1, f2 whose Ito integrals drive
// the coherent amplitude (tau = 0 solution).
std::pair<Complex, Complex> f_functions(double t, const FeedbackConfig& config);

// chi1, chi2 and the phase functional Lambda along a path, sampled at every
// grid time (index 0 .. n_steps).
struct ItoFunctionals {
    std::vector<Complex> chi1;
    std::vector<Complex> chi2;
    std::vector<Complex> lambda_phase;

    Complex chi_plus(std::size_t i) const;
    Complex chi_minus(std::size_t i) const;
};

ItoFunctionals ito_functionals(const WienerPath& path, const FeedbackConfig& config);

struct TrajectoryState {
    double t;
    Complex amplitude;  // [chi_plus(t) + alpha0] e^{-gamma t/2}
    Complex weight;     // E_w(t)
    Complex log_weight; // exponent of E_w(t)
    Complex chi1, chi2, lambda_phase;
};

std::vector<TrajectoryState> trajectory(const WienerPath& path, Complex alpha0,
                                        const FeedbackConfig& config);

enum class CoherenceMode { Full, Asymptotic };

// Cat coherence along one trajectory: Full evolves both cat branches through
// the shared functionals; Asymptotic is the |alpha0| >> 1, gamma t << 1
// closed form (phi = 0, Re{alpha0} = 0 required), whose modulus depends on
// the path only through w(t) and not on theta.
std::vector<Complex> coherence_trajectory(const WienerPath& path, Complex alpha0,
                                          const FeedbackConfig& config,
                                          CoherenceMode mode);

enum class SdeScheme { EulerMaruyama, Milstein };

// Truncated-Fock integration of the linear stochastic Schroedinger equation
// d|psi> = {A dt + B dw}|psi> (tau = 0), the independent oracle for the
// closed-form trajectory. The norm is monitored but never rescaled: its
// drift carries the measurement-record weight.
struct FockTrajectory {
    int n_max = 0;
    double dt = 0.0;
    std::vector<double> t;
    std::vector<std::vector<Complex>> psi; // state at every grid time
};

FockTrajectory fock_sde_oracle(const WienerPath& path, Complex alpha0,
                               const FeedbackConfig& config, int n_max,
                               SdeScheme scheme = SdeScheme::Milstein);

// coherent-state column vector in the number basis
std::vector<Complex> coherent_fock_vector(Complex z, int n_max);
// <z|psi>
Complex coherent_fock_overlap(Complex z, const std::vector<Complex>& psi);
double fock_norm(const std::vector<Complex>& psi);

} // namespace delayfb
