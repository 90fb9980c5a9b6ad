#pragma once

#include <stdexcept>
#include <string>

namespace delayfb {

// All library failures are reported through this exception type so callers
// can dispatch on code() instead of parsing messages.
class Error : public std::runtime_error {
public:
    enum class Code {
        config_gamma,       // gamma <= 0
        config_eta,         // eta outside (0, 1]
        config_tau,         // tau < 0
        series_overflow,    // a delay-series term left the representable range
        term_cap_exceeded,  // floor(t/tau) beyond the configured cap
        step_too_large,     // DDE solver step does not resolve the delay
        quadrature_failure, // adaptive refinement could not reach tolerance
        phase_convention,   // formula requires phi = 0
        domain,             // argument outside the operation's domain
        precondition,       // stated regime precondition violated
        truncation_leak,    // Fock-basis population reached the top level
        io                  // file / serialization problem
    };

    Error(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Code code() const noexcept { return code_; }

private:
    Code code_;
};

} // namespace delayfb
