#pragma once

#include <string>
#include <vector>

namespace delayfb::verify {

// Cross-module consistency suite behind `delayfb verify`: oracle
// equivalences, the Fourier link between the marginal distribution and the
// characteristic function, convergence orders and figure orderings. The
// report is deterministic (fixed formatting, no timestamps) so repeated runs
// are byte-identical.

struct CheckResult {
    std::string name;
    bool passed = false;
    double metric = 0.0;    // measured quantity (max error, ratio, ...)
    double threshold = 0.0; // pass bound on the metric
    std::string detail;
};

struct Options {
    // Test fixture: perturbs the chi series used by the distribution-side
    // quantities so the Fourier-link check must trip. Zero in normal runs.
    double chi_tamper = 0.0;
    // Trim the heaviest checks (used by unit tests; the CLI runs full).
    bool quick = false;
};

struct Report {
    std::vector<CheckResult> checks;
    bool all_passed = false;

    std::string to_json() const; // one JSON object per line, stable format
};

Report run(const Options& options = {});

} // namespace delayfb::verify
