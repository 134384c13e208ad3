#pragma once

#include <cmath>
#include <utility>

namespace cpr::search {

/// Bisection for a sign change of `fn` on [lo, hi].
///
/// `fn(lo)` and `fn(hi)` must have opposite signs (zero counts as either).
/// Stops when the bracket is narrower than `tol` or cannot shrink further,
/// and returns the midpoint of the final bracket.
template <typename Scalar, typename Fn>
Scalar bisect(Fn&& fn, Scalar lo, Scalar hi, Scalar tol) {
  Scalar flo = fn(lo);
  const bool lo_positive = flo > Scalar(0);
  for (int it = 0; it < 2000; ++it) {
    const Scalar mid = lo + (hi - lo) / Scalar(2);
    if (!(hi - lo > tol) || mid <= lo || mid >= hi) break;
    const Scalar fm = fn(mid);
    if (fm == Scalar(0)) return mid;
    if ((fm > Scalar(0)) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / Scalar(2);
}

/// Golden-section search for the maximum of a unimodal `fn` on [lo, hi].
/// Returns (argmax, value). Terminates when the bracket is below
/// `rel_tol * max(1, |lo| + |hi|)`.
template <typename Scalar, typename Fn>
std::pair<Scalar, Scalar> golden_max(Fn&& fn, Scalar lo, Scalar hi, Scalar rel_tol) {
  using std::abs;
  using std::sqrt;
  const Scalar inv_phi = (sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar scale = abs(lo) + abs(hi);
  if (scale < Scalar(1)) scale = Scalar(1);
  const Scalar tol = rel_tol * scale;

  Scalar c = hi - inv_phi * (hi - lo);
  Scalar d = lo + inv_phi * (hi - lo);
  Scalar fc = fn(c);
  Scalar fd = fn(d);
  for (int it = 0; it < 500 && hi - lo > tol; ++it) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = fn(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = fn(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace cpr::search
