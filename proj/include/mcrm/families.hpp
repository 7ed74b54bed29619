#ifndef MCRM_FAMILIES_HPP
#define MCRM_FAMILIES_HPP

#include <functional>
#include <optional>

#include "mcrm/consistency.hpp"

namespace mcrm {

/// Index of one family member: measurement conditions on `target` and
/// accepts positions measurable on `domain`, with target contained in
/// domain.
struct FamilyIndex {
    SigmaAlgebra target;
    SigmaAlgebra domain;
};

/// Affine link declared between two domain levels of a family.
struct DeclaredLink {
    int level_t1 = 0;
    int level_t2 = 0;
    double a = 1.0;
    double b = 0.0;
};

/// Finite indexed family of conditional risk measures over pairs
/// (target, domain). Index sets are explicit lists; nothing is closed
/// over implicitly.
class CrmFamily {
public:
    CrmFamily(FiniteProbSpace space, std::vector<FamilyIndex> indices, std::vector<Crm> members,
              std::vector<DeclaredLink> declared_links = {});

    const FiniteProbSpace& space() const { return space_; }
    int size() const { return static_cast<int>(members_.size()); }
    const FamilyIndex& index(int i) const { return indices_[static_cast<std::size_t>(i)]; }
    const Crm& member(int i) const { return members_[static_cast<std::size_t>(i)]; }
    int find(const SigmaAlgebra& target, const SigmaAlgebra& domain) const;
    const Crm& member(const SigmaAlgebra& target, const SigmaAlgebra& domain) const;

    bool has_trivial_root() const { return has_trivial_root_; }
    const std::vector<DeclaredLink>& declared_links() const { return declared_links_; }

    /// Utility shared by all members with the given domain algebra.
    const Utility& domain_utility(const SigmaAlgebra& domain) const;

private:
    FiniteProbSpace space_;
    std::vector<FamilyIndex> indices_;
    std::vector<Crm> members_;
    std::vector<DeclaredLink> declared_links_;
    bool has_trivial_root_ = false;
};

using OuterRule = std::function<OuterMap(const std::vector<int>& subsystem)>;

/// State space S^d over d institutions; for each subsystem J the algebra
/// groups states that agree on the coordinates in J. Members measure with
/// full-information domain and subsystem-information targets. States are
/// indexed with coordinate 0 most significant.
CrmFamily build_spatial_family(int s_size, int institutions, const Eigen::VectorXd& probs, const Utility& u,
                               const OuterRule& outer_rule);

/// Cap on spatial state-space size.
inline constexpr int kSpatialStateCap = 4096;

SigmaAlgebra spatial_algebra(const FiniteProbSpace& space, int s_size, int institutions,
                             const std::vector<int>& subsystem);

using LevelOuterRule = std::function<OuterMap(int level)>;

/// Increasing filtration with a shared terminal domain; one member per
/// level, all with the same utility.
CrmFamily build_dynamic_family(const std::vector<SigmaAlgebra>& filtration, const Utility& u,
                               const LevelOuterRule& outer_rule);

/// Two-index family over all pairs s <= t of an increasing filtration
/// with one utility per level, each member the level-t certainty
/// equivalent conditioned at level s. Diagonal ranges must be nested
/// downward in t (sampled check).
CrmFamily build_cce_family(const std::vector<SigmaAlgebra>& filtration, const std::vector<Utility>& utilities,
                           std::vector<DeclaredLink> declared_links = {});

/// One recursion quadruple of members examined by the family checker.
struct FamilyTriple {
    int coarse_t1; // member (G, T1)
    int fine_t1;   // member (H, T1)
    int fine_t2;   // member (H, T2)
    int coarse_t2; // member (G, T2)
};

std::vector<FamilyTriple> family_triples(const CrmFamily& fam);

/// Seed of the recursion (definitional) sub-check of triple tau, for
/// replaying a single triple in isolation.
inline std::uint64_t family_triple_seed(std::uint64_t seed, int tau, bool definitional) {
    return derive_seed(seed, 2 * static_cast<std::uint64_t>(tau) + (definitional ? 1 : 0));
}

CheckReport check_family_consistency(const CrmFamily& fam, int trials, std::uint64_t rng_seed, double tol);

struct AffineLink {
    double a = 1.0;
    std::vector<std::pair<SigmaAlgebra, RandomVariable>> b;
    double residual = 0.0;

    const RandomVariable& b_at(const SigmaAlgebra& h) const;
};

/// Regress the T2-utility image of the diagonal cash position extracted
/// through (H, T2) against the conditional expected T1-utility, over
/// random T1-measurable samples for every shared target H. The slope is
/// one positive scalar across all targets and blocks; the intercept is
/// target-measurable and satisfies the tower identity across nested
/// targets. Throws NonAffineRelation when no such link fits within tol.
AffineLink fit_intercons_link(const CrmFamily& fam, const SigmaAlgebra& t1, const SigmaAlgebra& t2, int samples,
                              std::uint64_t rng_seed, double tol);

/// The conditional expectation of utility values of coarse-measurable
/// positions is attained on the diagonal: the diagonal inverse accepts it.
CheckReport check_range_lemma(const Utility& u, const SigmaAlgebra& h, const SigmaAlgebra& g, int trials,
                              std::uint64_t rng_seed);

} // namespace mcrm

#endif
