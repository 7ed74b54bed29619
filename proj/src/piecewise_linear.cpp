#include "mcrm/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>

#include "mcrm/errors.hpp"

namespace mcrm {

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.size() < 2)
        fail(ErrorKind::ValidationError, "piecewise-linear table needs at least two knots");
    for (std::size_t k = 1; k < xs_.size(); ++k)
        if (!(xs_[k] > xs_[k - 1]))
            fail(ErrorKind::ValidationError, "piecewise-linear knot abscissae must strictly increase");
    increasing_ = ys_[1] > ys_[0];
    for (std::size_t k = 1; k < ys_.size(); ++k) {
        const bool up = ys_[k] > ys_[k - 1];
        if (up != increasing_ || ys_[k] == ys_[k - 1])
            fail(ErrorKind::ValidationError, "piecewise-linear knot values must be strictly monotone");
    }
}

double PiecewiseLinear::eval(double x) const {
    const std::size_t m = xs_.size();
    std::size_t hi = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
    // Clamp to a real segment; the boundary slopes extend beyond the table.
    if (hi == 0) hi = 1;
    if (hi == m) hi = m - 1;
    const std::size_t lo = hi - 1;
    const double slope = (ys_[hi] - ys_[lo]) / (xs_[hi] - xs_[lo]);
    return ys_[lo] + slope * (x - xs_[lo]);
}

double PiecewiseLinear::invert(double y) const {
    const std::size_t m = ys_.size();
    std::size_t hi;
    if (increasing_) {
        hi = std::upper_bound(ys_.begin(), ys_.end(), y) - ys_.begin();
    } else {
        hi = std::upper_bound(ys_.begin(), ys_.end(), y, std::greater<double>()) - ys_.begin();
    }
    if (hi == 0) hi = 1;
    if (hi == m) hi = m - 1;
    const std::size_t lo = hi - 1;
    const double slope = (ys_[hi] - ys_[lo]) / (xs_[hi] - xs_[lo]);
    return xs_[lo] + (y - ys_[lo]) / slope;
}

} // namespace mcrm
