#ifndef MCRM_ROOTS_HPP
#define MCRM_ROOTS_HPP

#include <cmath>
#include <functional>
#include <sstream>

#include "mcrm/errors.hpp"

namespace mcrm {

/// Largest bracket endpoint probed before a target value is declared
/// unattainable (the map's range does not contain it).
inline constexpr double kBracketLimit = 1152921504606846976.0; // 2^60

/// Solve f(t) = y for a strictly monotone continuous f by exponential
/// bracket expansion from [-1, 1] followed by bisection. `increasing`
/// states the monotonicity direction. Stops when |f(t) - y| <= tol.
/// Throws OutOfRange when no sign change appears up to |t| = 2^60.
template <typename F>
double solve_monotone(F&& f, double y, double tol, bool increasing) {
    auto g = [&](double t) { return increasing ? f(t) - y : y - f(t); };
    // g is increasing in t; seek g(lo) <= 0 <= g(hi).
    double lo = -1.0, hi = 1.0;
    double glo = g(lo), ghi = g(hi);
    while (glo > 0.0 || ghi < 0.0) {
        if ((glo > 0.0 && lo <= -kBracketLimit) || (ghi < 0.0 && hi >= kBracketLimit)) {
            std::ostringstream msg;
            msg << "target " << y << " not attained by monotone map within bracket";
            fail(ErrorKind::OutOfRange, msg.str());
        }
        if (glo > 0.0) {
            lo *= 2.0;
            glo = g(lo);
        }
        if (ghi < 0.0) {
            hi *= 2.0;
            ghi = g(hi);
        }
    }
    // Bisect until the bracket itself is resolved, not just the value;
    // the argument then matches any closed form to bracket width.
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 260; ++iter) {
        mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm > 0.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-13 * (1.0 + std::abs(mid)) && std::abs(gm) <= tol) return mid;
    }
    return mid;
}

} // namespace mcrm

#endif
