#pragma once

#include <ostream>

namespace ncfam {

// Fast invariant suite: pairing identity across the q grid, closed-form
// consistency of the log-domain evaluations, analytic-vs-numeric gradients on
// random problems, and a reduced-sample covariance check against the
// (1+gamma)/Fisher limit with p_n = p_d. Prints one line per check.
// Returns true iff everything passed. Meant to stay under a few seconds.
bool run_verify(std::ostream& out);

}  // namespace ncfam
