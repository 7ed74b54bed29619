#ifndef MCRM_PROBSPACE_HPP
#define MCRM_PROBSPACE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcrm/errors.hpp"

namespace mcrm {

/// Absolute tolerance for probability normalization, measurability and
/// value-equality tests. All arithmetic is double precision on bounded
/// values, so a single absolute tolerance is adequate.
inline constexpr double kValueTol = 1e-12;

/// Finite probability space: states 0..n-1 with strictly positive
/// probabilities summing to one. With no null states, almost-sure
/// statements coincide with statements at every state.
class FiniteProbSpace {
public:
    explicit FiniteProbSpace(Eigen::VectorXd probs);

    int n() const { return static_cast<int>(probs_.size()); }
    const Eigen::VectorXd& probs() const { return probs_; }
    double prob(int state) const { return probs_(state); }

    friend bool operator==(const FiniteProbSpace& a, const FiniteProbSpace& b) {
        return a.probs_.size() == b.probs_.size() && a.probs_ == b.probs_;
    }

private:
    Eigen::VectorXd probs_;
};

FiniteProbSpace new_space(const Eigen::VectorXd& probs);
FiniteProbSpace uniform_space(int n);

/// Sub-sigma-algebra of a finite space, stored as the partition of the
/// state set into its atoms. Containment of sigma-algebras is partition
/// refinement. Blocks are kept canonical (indices sorted within blocks,
/// blocks sorted by least element) so equality is structural.
class SigmaAlgebra {
public:
    SigmaAlgebra(FiniteProbSpace space, std::vector<std::vector<int>> blocks);

    static SigmaAlgebra trivial(const FiniteProbSpace& space);
    static SigmaAlgebra discrete(const FiniteProbSpace& space);

    const FiniteProbSpace& space() const { return space_; }
    const std::vector<std::vector<int>>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    int block_of(int state) const { return block_index_[state]; }

    bool is_trivial() const { return blocks_.size() == 1; }
    bool is_discrete() const { return static_cast<int>(blocks_.size()) == space_.n(); }

    friend bool operator==(const SigmaAlgebra& a, const SigmaAlgebra& b) {
        return a.space_ == b.space_ && a.blocks_ == b.blocks_;
    }

private:
    FiniteProbSpace space_;
    std::vector<std::vector<int>> blocks_;
    std::vector<int> block_index_;
};

/// True iff every block of `fine` lies inside a block of `coarse`, i.e.
/// `coarse` is a sub-sigma-algebra of `fine`.
bool refines(const SigmaAlgebra& fine, const SigmaAlgebra& coarse);

/// Coarsest common refinement (blockwise intersections).
SigmaAlgebra join(const SigmaAlgebra& a, const SigmaAlgebra& b);

/// Bounded scalar random variable: one value per state.
class RandomVariable {
public:
    RandomVariable(FiniteProbSpace space, Eigen::VectorXd values);

    static RandomVariable constant(const FiniteProbSpace& space, double value);

    const FiniteProbSpace& space() const { return space_; }
    const Eigen::VectorXd& values() const { return values_; }
    int n() const { return static_cast<int>(values_.size()); }
    double operator()(int state) const { return values_(state); }

private:
    FiniteProbSpace space_;
    Eigen::VectorXd values_;
};

/// Bounded d-dimensional random vector: an n-by-d matrix of values, one
/// row per state. Rows are positions, columns are components.
class RandomVector {
public:
    RandomVector(FiniteProbSpace space, Eigen::MatrixXd values);

    /// alpha replicated across d components: row(i) = alpha(i) * (1,...,1).
    static RandomVector diagonal(const RandomVariable& alpha, int d);

    /// The same point x at every state (used to realize maps statewise).
    static RandomVector constant_rows(const FiniteProbSpace& space, const Eigen::RowVectorXd& x);

    const FiniteProbSpace& space() const { return space_; }
    const Eigen::MatrixXd& values() const { return values_; }
    int n() const { return static_cast<int>(values_.rows()); }
    int dim() const { return static_cast<int>(values_.cols()); }
    Eigen::RowVectorXd row(int state) const { return values_.row(state); }
    RandomVariable component(int j) const;

private:
    FiniteProbSpace space_;
    Eigen::MatrixXd values_;
};

bool same_space(const FiniteProbSpace& a, const FiniteProbSpace& b);
void require_same_space(const FiniteProbSpace& a, const FiniteProbSpace& b, const std::string& where);

bool is_measurable(const RandomVariable& f, const SigmaAlgebra& g);
bool is_measurable(const RandomVector& x, const SigmaAlgebra& g);

/// Blockwise probability-weighted average; the result is g-measurable.
RandomVariable cond_expectation(const RandomVariable& f, const SigmaAlgebra& g);

/// Componentwise conditional expectation.
RandomVector cond_expectation(const RandomVector& x, const SigmaAlgebra& g);

/// True iff within every block of `g` the probability-weighted multisets
/// of value rows of X and Y coincide (rows matched within kValueTol,
/// weights within kValueTol).
bool cond_law_equal(const RandomVector& x, const RandomVector& y, const SigmaAlgebra& g);

/// True iff the conditional law of X given `g` is the same on every block
/// (the finite surrogate of independence from `g`).
bool is_independent_of(const RandomVector& x, const SigmaAlgebra& g);

/// Product of two finite spaces with the two coordinate sigma-algebras.
/// State (i, j) of the product has index i * n2 + j and probability
/// p1(i) * p2(j); vectors lifted from one factor are independent of the
/// other factor's algebra by construction.
struct ProductSpace {
    FiniteProbSpace space;
    SigmaAlgebra factor1;
    SigmaAlgebra factor2;
    FiniteProbSpace marginal1;
    FiniteProbSpace marginal2;
    int n1 = 0;
    int n2 = 0;

    RandomVector lift_factor1(const RandomVector& x1) const;
    RandomVector lift_factor2(const RandomVector& x2) const;
};

ProductSpace product_space(const FiniteProbSpace& s1, const FiniteProbSpace& s2);

} // namespace mcrm

#endif
