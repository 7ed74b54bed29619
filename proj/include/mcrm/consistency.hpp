#ifndef MCRM_CONSISTENCY_HPP
#define MCRM_CONSISTENCY_HPP

#include "mcrm/crm.hpp"

namespace mcrm {

/// Statewise realized risk of a constant position: the measure evaluated
/// at X(w) held fixed across all states, read back at w.
double realized_risk(const Crm& rho, const Eigen::RowVectorXd& x, int state);

/// Aggregation extracted from a measure: lambda(X)(w) = -realized(X(w), w),
/// strictly isotone and local statewise. eta is realized through the
/// diagonal of lambda, so rho = eta o lambda whenever the measure is
/// risk-antitone; the reconstruction residual is the test for that.
class Decomposition {
public:
    Decomposition(Crm rho, bool risk_antitone_warning);

    const Crm& source() const { return rho_; }
    bool warning() const { return warning_; }

    RandomVariable lambda(const RandomVector& x) const;
    double lambda_point(const Eigen::RowVectorXd& x, int state) const;

    double f_lambda(double t, int state) const;
    double f_lambda_inverse(double y, int state, double tol = kRootTol) const;
    RandomVariable f_lambda(const RandomVariable& f) const;
    RandomVariable f_lambda_inverse(const RandomVariable& f, double tol = kRootTol) const;

    /// eta(F) = rho evaluated at the diagonal position f_lambda^{-1}(F).
    RandomVariable eta(const RandomVariable& f, double tol = kRootTol) const;

private:
    Crm rho_;
    bool warning_;
};

/// Recursion form of strong consistency: rho_G(X) equals rho_G evaluated
/// at the diagonal cash position extracted through rho_H.
CheckReport check_consistency_recursive(const Crm& rho_g, const Crm& rho_h, int trials, std::uint64_t rng_seed,
                                        double tol);

/// Definitional form: whenever rho_H orders a pair, rho_G orders it the
/// same way. Ordered pairs are constructed through the diagonal cash
/// position (both directions) plus rejection-sampled unconstrained pairs.
CheckReport check_consistency_definitional(const Crm& rho_g, const Crm& rho_h, int trials, std::uint64_t rng_seed,
                                           double tol);

CheckReport check_risk_antitonicity(const Crm& rho, int trials, std::uint64_t rng_seed);

Decomposition extract_decomposition(const Crm& rho, int warn_trials = 40, std::uint64_t warn_seed = 0x5eed);

CheckReport verify_decomposition(const Crm& rho, const Decomposition& dec, int trials, std::uint64_t rng_seed,
                                 double tol);

CheckReport check_aggregation_consistency(const Decomposition& dec_g, const Decomposition& dec_f, int trials,
                                          std::uint64_t rng_seed, double tol);

/// For a trivially-conditioned rho and a finer rho_H applied to an input
/// independent of rho_H's target algebra, the two diagonal cash positions
/// coincide.
CheckReport check_lemma_independent_constant(const Crm& rho, const Crm& rho_h, const RandomVector& x, double tol);

struct AffineFit {
    RandomVariable alpha; // block-constant, positive
    RandomVariable beta;  // block-constant
    double residual = 0.0;
};

/// Probability-weighted per-block least squares of U_tilde = alpha U + beta
/// over the sample grid, alpha and beta constant on each block of H.
/// Throws DegenerateFit when U is flat over the grid on some block or the
/// fitted slope is not positive.
AffineFit fit_affine(const StochasticUtility& u, const StochasticUtility& u_tilde, const SigmaAlgebra& h,
                     const std::vector<double>& sample_points);

enum class DiagonalClass { Linear, Entropic, Neither };

struct Classification {
    DiagonalClass kind = DiagonalClass::Neither;
    double a = 0.0;
    double b = 0.0;
    double beta = 0.0; // entropic rate when kind == Entropic
    double linear_residual = 0.0;
    double entropic_residual = 0.0;
    bool cash_additive = false;
    bool convex = false;
};

const char* to_string(DiagonalClass c);

/// Classify the diagonal utility of a measure normalized on constants as
/// linear or entropic, or neither. The diagonal risk profile is probed
/// for cash-additivity and convexity, and the diagonal utility samples
/// are fitted against both model classes over an equispaced grid.
Classification classify_diagonal(const Crm& rho, const std::vector<double>& grid, double tol);

} // namespace mcrm

#endif
