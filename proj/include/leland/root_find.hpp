#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace leland {

/// Raised when a bracketing search or an iteration cannot deliver a root.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bisection on a bracket [lo, hi] where f(lo) and f(hi) have opposite signs.
/// Stops when the bracket width falls below abs_tol + rel_tol*|mid| or when
/// the midpoint no longer moves in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, double rel_tol = 1e-14,
              double abs_tol = 0.0, int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw NumericalError("bisect: bracket [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "] has no sign change");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return mid;
        if (hi - lo <= abs_tol + rel_tol * std::abs(mid)) return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Golden-section maximisation of a unimodal f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace leland
