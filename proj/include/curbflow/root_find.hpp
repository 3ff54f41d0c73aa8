#pragma once

#include <cmath>
#include <limits>

#include "curbflow/errors.hpp"

namespace curbflow::detail {

/// Safeguarded Newton on a continuous increasing function over a bracket
/// [lo, hi] with fn(lo) <= 0 <= fn(hi). Newton steps that leave the bracket
/// fall back to bisection. Iterates until |fn(x)| <= tol or the bracket
/// collapses to machine precision, whichever comes first.
template <typename Fn, typename Dfn>
double newton_bisect(Fn&& fn, Dfn&& dfn, double lo, double hi, double tol, int max_iter = 200) {
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const double fx = fn(x);
        if (std::abs(fx) <= tol) return x;
        if (fx > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double d = dfn(x);
        double next = (d > 0.0) ? x - fx / d : lo;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (next == x || hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(hi)) {
            return x;
        }
        x = next;
    }
    return x;
}

/// Doubles hi until fn(hi) >= 0, at most max_doublings times. Returns false
/// when the sign change is never bracketed.
template <typename Fn>
bool bracket_upward(Fn&& fn, double& hi, int max_doublings = 200) {
    int n = 0;
    while (fn(hi) < 0.0) {
        if (++n > max_doublings) return false;
        hi *= 2.0;
    }
    return true;
}

} // namespace curbflow::detail
