// Scalar special functions and 1-D root finding used by both tier solvers.
#pragma once

#include <functional>

namespace v2xmec::numerics {

/// Interval known to enclose a root of the target function.
struct BracketedRoot {
  double lo = 0.0;
  double hi = 1.0;
  double tolerance = 1e-9;  // absolute width tolerance
  int max_iters = 200;
};

struct BisectResult {
  double root = 0.0;  // midpoint of the final bracket (or an exact zero)
  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  int iterations = 0;
};

/// Principal branch of the Lambert W function: returns w >= -1 with
/// w * e^w == x, for x >= -1/e.  Halley iteration from ln(1+x) for x >= 0 and
/// from the branch-point series for x < 0.  Arguments within 1e-12 below the
/// branch point clamp to -1; anything lower raises DomainError.
double lambert_w0(double x);

/// Bisection for a monotone f with a sign change on [lo, hi].  Stops when the
/// bracket width drops below bracket.tolerance, or earlier when
/// |f(candidate)| <= f_tolerance (f_tolerance > 0).  Either endpoint equal to
/// a root is accepted; a bracket without a sign change raises
/// NoSignChangeError, exhaustion of max_iters raises NonConvergenceError.
BisectResult bisect_root(const std::function<double(double)>& f, const BracketedRoot& bracket,
                         double f_tolerance = 0.0);

/// Grows an upper bound for an increasing f with f(lo) < 0: probes
/// hi = max(lo, 1) and doubles until f(hi) >= 0.  Raises NumericOverflowError
/// when hi would exceed cap, which callers treat as infeasibility.
BracketedRoot expand_upper_bracket(const std::function<double(double)>& f, double lo,
                                   double cap = 1e30);

}  // namespace v2xmec::numerics
