#include "mcrm/utility.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "mcrm/roots.hpp"

namespace mcrm {

namespace {

void check_weights(const Eigen::VectorXd& w) {
    if (w.size() < 1) fail(ErrorKind::ValidationError, "utility needs at least one weight");
    for (int i = 0; i < w.size(); ++i)
        if (!(w(i) > 0.0)) fail(ErrorKind::ValidationError, "utility weights must be positive");
    if (std::abs(w.sum() - 1.0) > kValueTol) fail(ErrorKind::ValidationError, "utility weights must sum to one");
}

} // namespace

Utility Utility::linear_weighted(double a, double b, Eigen::VectorXd weights) {
    if (!(a > 0.0)) fail(ErrorKind::ValidationError, "linear utility scale must be positive");
    check_weights(weights);
    const int d = static_cast<int>(weights.size());
    return Utility(d, LinearWeighted{a, b, std::move(weights)});
}

Utility Utility::exponential_weighted(double a, double b, double beta, Eigen::VectorXd weights) {
    if (!(a > 0.0)) fail(ErrorKind::ValidationError, "exponential utility scale must be positive");
    if (!(beta > 0.0)) fail(ErrorKind::ValidationError, "exponential utility rate must be positive");
    check_weights(weights);
    const int d = static_cast<int>(weights.size());
    return Utility(d, ExponentialWeighted{a, b, beta, std::move(weights)});
}

Utility Utility::sum_of_univariate(std::vector<PiecewiseLinear> parts) {
    if (parts.empty()) fail(ErrorKind::ValidationError, "sum-of-univariate utility needs parts");
    for (const auto& p : parts)
        if (!p.increasing())
            fail(ErrorKind::ValidationError, "sum-of-univariate parts must be strictly increasing");
    const int d = static_cast<int>(parts.size());
    return Utility(d, SumOfUnivariate{std::move(parts)});
}

bool operator==(const Utility& u, const Utility& v) {
    if (u.dim_ != v.dim_ || u.spec_.index() != v.spec_.index()) return false;
    if (const auto* lu = std::get_if<Utility::LinearWeighted>(&u.spec_)) {
        const auto& lv = std::get<Utility::LinearWeighted>(v.spec_);
        return lu->a == lv.a && lu->b == lv.b && lu->weights == lv.weights;
    }
    if (const auto* eu = std::get_if<Utility::ExponentialWeighted>(&u.spec_)) {
        const auto& ev = std::get<Utility::ExponentialWeighted>(v.spec_);
        return eu->a == ev.a && eu->b == ev.b && eu->beta == ev.beta && eu->weights == ev.weights;
    }
    const auto& su = std::get<Utility::SumOfUnivariate>(u.spec_);
    const auto& sv = std::get<Utility::SumOfUnivariate>(v.spec_);
    return su.parts == sv.parts;
}

double eval_utility(const Utility& u, const Eigen::RowVectorXd& x) {
    if (x.size() != u.dim()) fail(ErrorKind::DimMismatch, "eval_utility: point dimension differs from utility");
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Utility::LinearWeighted>) {
                return spec.a * spec.weights.dot(x.transpose()) + spec.b;
            } else if constexpr (std::is_same_v<T, Utility::ExponentialWeighted>) {
                return -spec.a * std::exp(-spec.beta * spec.weights.dot(x.transpose())) + spec.b;
            } else {
                double acc = 0.0;
                for (int j = 0; j < u.dim(); ++j) acc += spec.parts[j].eval(x(j));
                return acc;
            }
        },
        u.spec());
}

double f_u(const Utility& u, double t) {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Utility::LinearWeighted>) {
                return spec.a * t + spec.b; // weights sum to one
            } else if constexpr (std::is_same_v<T, Utility::ExponentialWeighted>) {
                return -spec.a * std::exp(-spec.beta * t) + spec.b;
            } else {
                double acc = 0.0;
                for (const auto& p : spec.parts) acc += p.eval(t);
                return acc;
            }
        },
        u.spec());
}

double f_u_inverse(const Utility& u, double y, double tol) {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Utility::LinearWeighted>) {
                return (y - spec.b) / spec.a;
            } else if constexpr (std::is_same_v<T, Utility::ExponentialWeighted>) {
                const double z = (spec.b - y) / spec.a; // exp(-beta t); must be positive
                if (!(z > 0.0)) {
                    std::ostringstream msg;
                    msg << "value " << y << " outside the exponential diagonal range (sup " << spec.b << ")";
                    fail(ErrorKind::OutOfRange, msg.str());
                }
                return -std::log(z) / spec.beta;
            } else {
                return f_u_inverse_bisect(u, y, tol);
            }
        },
        u.spec());
}

double f_u_inverse_bisect(const Utility& u, double y, double tol) {
    return solve_monotone([&](double t) { return f_u(u, t); }, y, tol, /*increasing=*/true);
}

RandomVariable apply_utility(const Utility& u, const RandomVector& x) {
    if (x.dim() != u.dim()) fail(ErrorKind::DimMismatch, "apply_utility: vector dimension differs from utility");
    Eigen::VectorXd out(x.n());
    for (int i = 0; i < x.n(); ++i) out(i) = eval_utility(u, x.row(i));
    return RandomVariable(x.space(), std::move(out));
}

RandomVariable apply_f_u(const Utility& u, const RandomVariable& t) {
    Eigen::VectorXd out(t.n());
    for (int i = 0; i < t.n(); ++i) out(i) = f_u(u, t(i));
    return RandomVariable(t.space(), std::move(out));
}

RandomVariable apply_f_u_inverse(const Utility& u, const RandomVariable& y, double tol) {
    Eigen::VectorXd out(y.n());
    for (int i = 0; i < y.n(); ++i) out(i) = f_u_inverse(u, y(i), tol);
    return RandomVariable(y.space(), std::move(out));
}

StochasticUtility StochasticUtility::identity(const FiniteProbSpace& space) {
    return StochasticUtility(space, IdentityBase{});
}

StochasticUtility StochasticUtility::from_diagonal(const FiniteProbSpace& space, Utility u) {
    return StochasticUtility(space, DiagonalBase{std::move(u)});
}

StochasticUtility StochasticUtility::from_tables(const FiniteProbSpace& space,
                                                 std::vector<PiecewiseLinear> per_state) {
    if (static_cast<int>(per_state.size()) != space.n())
        fail(ErrorKind::DimMismatch, "stochastic utility needs one table per state");
    for (const auto& t : per_state)
        if (!t.increasing()) fail(ErrorKind::ValidationError, "stochastic utility tables must increase");
    return StochasticUtility(space, TablesBase{std::move(per_state)});
}

double StochasticUtility::base_eval(double t, int state) const {
    return std::visit(
        [&](const auto& base) -> double {
            using T = std::decay_t<decltype(base)>;
            if constexpr (std::is_same_v<T, IdentityBase>) {
                return t;
            } else if constexpr (std::is_same_v<T, DiagonalBase>) {
                return f_u(base.u, t);
            } else {
                return base.per_state[state].eval(t);
            }
        },
        base_);
}

double StochasticUtility::eval(double t, int state) const {
    return alpha_(state) * base_eval(t, state) + beta_(state);
}

double StochasticUtility::invert(double y, int state, double tol) const {
    const double target = (y - beta_(state)) / alpha_(state);
    return std::visit(
        [&](const auto& base) -> double {
            using T = std::decay_t<decltype(base)>;
            if constexpr (std::is_same_v<T, IdentityBase>) {
                return target;
            } else if constexpr (std::is_same_v<T, DiagonalBase>) {
                return f_u_inverse(base.u, target, tol);
            } else {
                return base.per_state[state].invert(target);
            }
        },
        base_);
}

RandomVariable StochasticUtility::eval(const RandomVariable& t) const {
    require_same_space(t.space(), space_, "StochasticUtility::eval");
    Eigen::VectorXd out(t.n());
    for (int i = 0; i < t.n(); ++i) out(i) = eval(t(i), i);
    return RandomVariable(space_, std::move(out));
}

StochasticUtility affine_transform(const StochasticUtility& u, const RandomVariable& alpha,
                                   const RandomVariable& beta) {
    require_same_space(alpha.space(), u.space(), "affine_transform");
    require_same_space(beta.space(), u.space(), "affine_transform");
    for (int i = 0; i < alpha.n(); ++i)
        if (!(alpha(i) > 0.0)) fail(ErrorKind::NonPositiveAlpha, "affine_transform needs alpha > 0 at every state");
    StochasticUtility out = u;
    out.alpha_ = alpha.values().cwiseProduct(u.alpha_);
    out.beta_ = alpha.values().cwiseProduct(u.beta_) + beta.values();
    return out;
}

PiecewiseLinear tabulate(double lo, double hi, int knots, const std::function<double(double)>& f) {
    std::vector<double> xs(knots), ys(knots);
    for (int k = 0; k < knots; ++k) {
        xs[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(knots - 1);
        ys[k] = f(xs[k]);
    }
    return PiecewiseLinear(std::move(xs), std::move(ys));
}

} // namespace mcrm
