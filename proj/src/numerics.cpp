#include "v2xmec/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "v2xmec/errors.hpp"

namespace v2xmec::numerics {

namespace {

constexpr double kBranchPoint = -0.36787944117144233;  // -1/e

// Series about the branch point in p = sqrt(2 (e x + 1)); accurate to well
// below 1e-12 for p < 1e-3 and a good Halley seed everywhere on x < 0.
double branch_series(double p) {
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))));
}

}  // namespace

double lambert_w0(double x) {
  if (x < kBranchPoint) {
    if (x >= kBranchPoint - 1e-12) return -1.0;
    throw DomainError("lambert_w0: argument " + std::to_string(x) + " below -1/e");
  }
  if (x == 0.0) return 0.0;

  double w;
  if (x < 0.0) {
    const double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = branch_series(p);
    // So close to the branch point that Halley's denominator degenerates; the
    // series alone is already beyond full double precision there.
    if (p < 1e-3) return w;
  } else {
    w = std::log1p(x);
  }

  for (int iter = 0; iter < 50; ++iter) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0) break;
    const double dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 1e-13 * (std::abs(w) + 1e-12)) break;
  }
  return w;
}

BisectResult bisect_root(const std::function<double(double)>& f, const BracketedRoot& bracket,
                         double f_tolerance) {
  if (!(bracket.lo < bracket.hi) || !(bracket.tolerance > 0.0)) {
    throw DomainError("bisect_root: invalid bracket");
  }
  double lo = bracket.lo;
  double hi = bracket.hi;
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return {lo, lo, hi, f_lo, f_hi, 0};
  if (f_hi == 0.0) return {hi, lo, hi, f_lo, f_hi, 0};
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw NoSignChangeError("bisect_root: no sign change on bracket");
  }

  for (int iter = 1; iter <= bracket.max_iters; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0 || (f_tolerance > 0.0 && std::abs(f_mid) <= f_tolerance)) {
      if ((f_mid > 0.0) == (f_lo > 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
        f_hi = f_mid;
      }
      return {mid, lo, hi, f_lo, f_hi, iter};
    }
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo <= bracket.tolerance) {
      return {0.5 * (lo + hi), lo, hi, f_lo, f_hi, iter};
    }
  }
  throw NonConvergenceError("bisect_root: no convergence after " +
                            std::to_string(bracket.max_iters) + " iterations");
}

BracketedRoot expand_upper_bracket(const std::function<double(double)>& f, double lo, double cap) {
  if (!(f(lo) < 0.0)) {
    throw DomainError("expand_upper_bracket: f(lo) must be negative");
  }
  double hi = std::max(lo, 1.0);
  while (!(f(hi) >= 0.0)) {
    hi *= 2.0;
    if (hi > cap || !std::isfinite(hi)) {
      throw NumericOverflowError("expand_upper_bracket: no sign change below cap " +
                                 std::to_string(cap));
    }
  }
  return {lo, hi, 1e-9, 200};
}

}  // namespace v2xmec::numerics
