#ifndef MCRM_PIECEWISE_LINEAR_HPP
#define MCRM_PIECEWISE_LINEAR_HPP

#include <vector>

namespace mcrm {

/// Strictly monotone continuous scalar map given by knot tables, linear
/// between knots and linearly extrapolated beyond them with the boundary
/// slope. Knot values must be strictly monotone (either direction); this
/// makes the map a bijection of the real line, so eval and invert are
/// total and exact segment-wise.
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

    double eval(double x) const;
    double invert(double y) const;

    bool increasing() const { return increasing_; }
    const std::vector<double>& knots_x() const { return xs_; }
    const std::vector<double>& knots_y() const { return ys_; }

    friend bool operator==(const PiecewiseLinear& a, const PiecewiseLinear& b) {
        return a.xs_ == b.xs_ && a.ys_ == b.ys_;
    }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
    bool increasing_ = true;
};

} // namespace mcrm

#endif
