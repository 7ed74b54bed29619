#ifndef MCRM_UTILITY_HPP
#define MCRM_UTILITY_HPP

#include <Eigen/Dense>
#include <functional>
#include <variant>
#include <vector>

#include "mcrm/piecewise_linear.hpp"
#include "mcrm/probspace.hpp"

namespace mcrm {

/// Default tolerance for scalar inversions.
inline constexpr double kRootTol = 1e-10;

/// Strictly increasing continuous multivariate utility. The catalog is
/// closed so that monotonicity is guaranteed by construction and the
/// diagonal inverse has a closed form where one exists.
class Utility {
public:
    struct LinearWeighted {
        double a;
        double b;
        Eigen::VectorXd weights; // positive, summing to one
    };
    struct ExponentialWeighted {
        double a;
        double b;
        double beta;
        Eigen::VectorXd weights;
    };
    struct SumOfUnivariate {
        std::vector<PiecewiseLinear> parts; // one strictly increasing map per component
    };

    static Utility linear_weighted(double a, double b, Eigen::VectorXd weights);
    static Utility exponential_weighted(double a, double b, double beta, Eigen::VectorXd weights);
    static Utility sum_of_univariate(std::vector<PiecewiseLinear> parts);

    int dim() const { return dim_; }
    const std::variant<LinearWeighted, ExponentialWeighted, SumOfUnivariate>& spec() const { return spec_; }

    friend bool operator==(const Utility& u, const Utility& v);

private:
    Utility(int dim, std::variant<LinearWeighted, ExponentialWeighted, SumOfUnivariate> spec)
        : dim_(dim), spec_(std::move(spec)) {}

    int dim_;
    std::variant<LinearWeighted, ExponentialWeighted, SumOfUnivariate> spec_;
};

double eval_utility(const Utility& u, const Eigen::RowVectorXd& x);

/// Value of u along the diagonal, u(t, t, ..., t).
double f_u(const Utility& u, double t);

/// Inverse of the diagonal: t with |f_u(t) - y| <= tol. Closed form for
/// the weighted kinds, bracketed bisection for sums of tables. Throws
/// OutOfRange when y is not attained.
double f_u_inverse(const Utility& u, double y, double tol = kRootTol);

/// Inverse of the diagonal by the generic bracketed bisection regardless
/// of kind; kept as the independent route against the closed forms.
double f_u_inverse_bisect(const Utility& u, double y, double tol = kRootTol);

/// Statewise application of u: one scalar per state.
RandomVariable apply_utility(const Utility& u, const RandomVector& x);

/// Statewise diagonal evaluation and inversion.
RandomVariable apply_f_u(const Utility& u, const RandomVariable& t);
RandomVariable apply_f_u_inverse(const Utility& u, const RandomVariable& y, double tol = kRootTol);

/// Statewise strictly increasing continuous scalar map: a shared base map
/// wrapped in a statewise positive affine transformation. Bases cover the
/// identity, the diagonal of a catalog utility, and per-state tables.
class StochasticUtility {
public:
    struct IdentityBase {};
    struct DiagonalBase {
        Utility u;
    };
    struct TablesBase {
        std::vector<PiecewiseLinear> per_state;
    };

    static StochasticUtility identity(const FiniteProbSpace& space);
    static StochasticUtility from_diagonal(const FiniteProbSpace& space, Utility u);
    static StochasticUtility from_tables(const FiniteProbSpace& space, std::vector<PiecewiseLinear> per_state);

    const FiniteProbSpace& space() const { return space_; }

    double eval(double t, int state) const;
    double invert(double y, int state, double tol = kRootTol) const;
    RandomVariable eval(const RandomVariable& t) const;

private:
    StochasticUtility(FiniteProbSpace space, std::variant<IdentityBase, DiagonalBase, TablesBase> base)
        : space_(std::move(space)),
          base_(std::move(base)),
          alpha_(Eigen::VectorXd::Ones(space_.n())),
          beta_(Eigen::VectorXd::Zero(space_.n())) {}

    double base_eval(double t, int state) const;

    FiniteProbSpace space_;
    std::variant<IdentityBase, DiagonalBase, TablesBase> base_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd beta_;

    friend StochasticUtility affine_transform(const StochasticUtility& u, const RandomVariable& alpha,
                                              const RandomVariable& beta);
};

/// Statewise map t -> alpha(w) * u(t, w) + beta(w); alpha must be strictly
/// positive at every state (throws NonPositiveAlpha otherwise).
StochasticUtility affine_transform(const StochasticUtility& u, const RandomVariable& alpha,
                                   const RandomVariable& beta);

/// Strictly increasing table sampled from a callable on [lo, hi].
PiecewiseLinear tabulate(double lo, double hi, int knots, const std::function<double(double)>& f);

} // namespace mcrm

#endif
