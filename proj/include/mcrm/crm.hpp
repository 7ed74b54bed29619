#ifndef MCRM_CRM_HPP
#define MCRM_CRM_HPP

#include <cstdint>
#include <memory>
#include <variant>

#include "mcrm/check.hpp"
#include "mcrm/rng.hpp"
#include "mcrm/utility.hpp"

namespace mcrm {

/// Default tolerance for evaluation comparisons in randomized checks.
inline constexpr double kCheckTol = 1e-10;

/// Statewise strictly decreasing continuous scalar map, constant on the
/// blocks of the measure's target algebra. Realizes the outer layer of a
/// certainty-equivalent risk measure; its range contains zero because all
/// variants are surjective onto the real line.
class OuterMap {
public:
    struct Negation {};
    struct AffineNeg {
        Eigen::VectorXd scale;  // positive, one per state
        Eigen::VectorXd offset; // one per state
    };
    struct Tables {
        std::vector<PiecewiseLinear> per_state; // strictly decreasing
    };

    static OuterMap negation(const FiniteProbSpace& space);
    static OuterMap affine_neg(const FiniteProbSpace& space, double scale, double offset);
    static OuterMap affine_neg(const RandomVariable& scale, const RandomVariable& offset);
    static OuterMap tables(const FiniteProbSpace& space, std::vector<PiecewiseLinear> per_state);

    const FiniteProbSpace& space() const { return space_; }

    double eval(double t, int state) const;
    double inverse(double y, int state) const;
    RandomVariable eval(const RandomVariable& t) const;
    RandomVariable inverse(const RandomVariable& y) const;

    /// True iff the map is the same on all states of every block of g.
    bool block_constant_on(const SigmaAlgebra& g) const;

private:
    OuterMap(FiniteProbSpace space, std::variant<Negation, AffineNeg, Tables> spec)
        : space_(std::move(space)), spec_(std::move(spec)) {}

    FiniteProbSpace space_;
    std::variant<Negation, AffineNeg, Tables> spec_;
};

class Crm;

/// Evaluator variants. The certainty-equivalent form is the productive
/// one; the remaining variants wrap another measure (normalization, the
/// statewise realization) or act as negative controls for the checkers.
struct CertEquivSpec {
    Utility u;
    OuterMap outer;
};

struct NormalizedOf {
    std::shared_ptr<const Crm> inner;
    double tol;
};

/// Statewise realization of the inner measure: X evaluated at each state
/// through the inner measure applied to the constant position X(w). Maps
/// onto the discrete algebra; used as the full-information aggregation
/// counterpart of the inner measure.
struct DiagonalRealizationOf {
    std::shared_ptr<const Crm> inner;
};

struct ConstantZero {};

/// eval(X) = constant with value -sum_i weights(i) * X(i, 0). Depends on
/// state identity, so it violates conditional law-invariance.
struct StateWeightedSum {
    Eigen::VectorXd weights;
};

/// eval(X) = -E[ u_{mixing block}(X) | target ], the utility varying over
/// the blocks of a partition finer than the target algebra. A valid risk
/// measure, but the statewise realized risk aggregates with the average
/// utility while the measure aggregates with the local one, so it fails
/// risk-antitonicity (and with it the decomposition).
struct MixedUtilitySpec {
    SigmaAlgebra mixing;
    std::vector<Utility> per_block;
};

using Evaluator =
    std::variant<CertEquivSpec, NormalizedOf, DiagonalRealizationOf, ConstantZero, StateWeightedSum, MixedUtilitySpec>;

/// Conditional risk measure: maps domain-measurable d-dimensional vectors
/// to target-measurable scalars, strictly antitone and local on the
/// target algebra. Values are immutable; evaluation is pure.
class Crm {
public:
    Crm(SigmaAlgebra domain, SigmaAlgebra target, int dim, Evaluator evaluator);

    const FiniteProbSpace& space() const { return domain_.space(); }
    const SigmaAlgebra& domain() const { return domain_; }
    const SigmaAlgebra& target() const { return target_; }
    int dim() const { return dim_; }
    const Evaluator& evaluator() const { return evaluator_; }

    /// Utility of the certainty-equivalent core, unwrapping normalization
    /// layers; null when the evaluator has none (negative controls).
    const Utility* core_utility() const;

private:
    SigmaAlgebra domain_;
    SigmaAlgebra target_;
    int dim_;
    Evaluator evaluator_;
};

Crm make_cert_equiv(const Utility& u, const OuterMap& outer, const SigmaAlgebra& domain, const SigmaAlgebra& target);
Crm make_constant_zero(const SigmaAlgebra& domain, const SigmaAlgebra& target, int dim);
Crm make_state_weighted(const SigmaAlgebra& domain, int dim, const Eigen::VectorXd& weights);
Crm make_mixed_utility(const SigmaAlgebra& domain, const SigmaAlgebra& target, const SigmaAlgebra& mixing,
                       std::vector<Utility> per_block);

RandomVariable eval(const Crm& rho, const RandomVector& x);

/// Risk of the constant-across-components position alpha.
RandomVariable f_rho(const Crm& rho, const RandomVariable& alpha);

/// Inverse of the diagonal risk profile: the target-measurable alpha with
/// ||f_rho(alpha) - beta||_inf <= tol. Locality makes the problem
/// separable over target blocks, so all blocks are bisected in lockstep,
/// one full evaluation per step serving every block.
RandomVariable f_rho_inverse(const Crm& rho, const RandomVariable& beta, double tol = kRootTol);

/// Measure with evaluation -f_rho_inverse(rho, eval(rho, X)); its own
/// diagonal is minus the identity.
Crm normalize(const Crm& rho, double tol = kRootTol);

/// Full-information statewise realization of rho, as a measure on the
/// discrete algebra (minus the aggregation extracted from rho).
Crm diagonal_realization(const Crm& rho);

CheckReport check_strict_antitonicity(const Crm& rho, int trials, std::uint64_t rng_seed);
CheckReport check_locality(const Crm& rho, int trials, std::uint64_t rng_seed);
CheckReport check_cond_law_invariance(const Crm& rho, int trials, std::uint64_t rng_seed);

/// Random inputs used by the checkers; exposed so witnesses can be
/// regenerated from (seed, trial).
RandomVector random_vector(Rng& rng, const FiniteProbSpace& space, int dim, double lo = -3.0, double hi = 3.0);
RandomVector random_measurable_vector(Rng& rng, const SigmaAlgebra& g, int dim, double lo = -3.0, double hi = 3.0);
RandomVariable random_measurable_variable(Rng& rng, const SigmaAlgebra& g, double lo = -3.0, double hi = 3.0);

nlohmann::json to_json(const RandomVariable& v);
nlohmann::json to_json(const RandomVector& x);

} // namespace mcrm

#endif
