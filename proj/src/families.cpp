#include "mcrm/families.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcrm {

namespace {

bool contains(const SigmaAlgebra& coarse, const SigmaAlgebra& fine) {
    // coarse subset-of fine as sigma-algebras
    return refines(fine, coarse);
}

} // namespace

CrmFamily::CrmFamily(FiniteProbSpace space, std::vector<FamilyIndex> indices, std::vector<Crm> members,
                     std::vector<DeclaredLink> declared_links)
    : space_(std::move(space)),
      indices_(std::move(indices)),
      members_(std::move(members)),
      declared_links_(std::move(declared_links)) {
    if (indices_.size() != members_.size())
        fail(ErrorKind::ValidationError, "family needs one index pair per member");
    if (indices_.empty()) fail(ErrorKind::ValidationError, "family must not be empty");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        const auto& idx = indices_[i];
        const auto& m = members_[i];
        require_same_space(idx.target.space(), space_, "CrmFamily");
        require_same_space(idx.domain.space(), space_, "CrmFamily");
        if (!contains(idx.target, idx.domain))
            fail(ErrorKind::AlgebraMismatch, "family index target not contained in its domain");
        if (!(m.target() == idx.target) || !(m.domain() == idx.domain))
            fail(ErrorKind::AlgebraMismatch, "family member algebras do not match its index pair");
        if (m.dim() != members_.front().dim())
            fail(ErrorKind::DimMismatch, "family members must share one dimension");
        if (idx.target.is_trivial()) has_trivial_root_ = true;
    }
    // For a fixed target, members over different domains must accept each
    // other's diagonal risk levels; probe a few shared constants.
    for (std::size_t i = 0; i < indices_.size(); ++i)
        for (std::size_t j = 0; j < indices_.size(); ++j) {
            if (i == j || !(indices_[i].target == indices_[j].target)) continue;
            for (double c : {-2.0, 0.0, 2.0}) {
                const RandomVariable alpha = RandomVariable::constant(space_, c);
                const RandomVariable level = f_rho(members_[i], alpha);
                try {
                    (void)f_rho_inverse(members_[j], level);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::OutOfRange) throw;
                    std::ostringstream msg;
                    msg << "members " << i << " and " << j
                        << " disagree on attainable diagonal risk levels (constant " << c << ")";
                    fail(ErrorKind::RangeNotNested, msg.str());
                }
            }
        }
}

int CrmFamily::find(const SigmaAlgebra& target, const SigmaAlgebra& domain) const {
    for (std::size_t i = 0; i < indices_.size(); ++i)
        if (indices_[i].target == target && indices_[i].domain == domain) return static_cast<int>(i);
    return -1;
}

const Crm& CrmFamily::member(const SigmaAlgebra& target, const SigmaAlgebra& domain) const {
    const int i = find(target, domain);
    if (i < 0) fail(ErrorKind::ValidationError, "no family member at the requested index pair");
    return members_[static_cast<std::size_t>(i)];
}

const Utility& CrmFamily::domain_utility(const SigmaAlgebra& domain) const {
    const Utility* found = nullptr;
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (!(indices_[i].domain == domain)) continue;
        const Utility* u = members_[i].core_utility();
        if (u == nullptr)
            fail(ErrorKind::ValidationError, "family member has no certainty-equivalent utility");
        if (found != nullptr && !(*found == *u))
            fail(ErrorKind::ValidationError, "family members over one domain carry different utilities");
        found = u;
    }
    if (found == nullptr) fail(ErrorKind::ValidationError, "no family member with the requested domain");
    return *found;
}

SigmaAlgebra spatial_algebra(const FiniteProbSpace& space, int s_size, int institutions,
                             const std::vector<int>& subsystem) {
    // Group states by their coordinates inside the subsystem.
    std::vector<std::vector<int>> buckets;
    std::vector<long> keys;
    for (int state = 0; state < space.n(); ++state) {
        long key = 0;
        for (int j : subsystem) {
            const int digit = (state / static_cast<int>(std::pow(s_size, institutions - 1 - j))) % s_size;
            key = key * s_size + digit;
        }
        bool placed = false;
        for (std::size_t k = 0; k < keys.size(); ++k)
            if (keys[k] == key) {
                buckets[k].push_back(state);
                placed = true;
                break;
            }
        if (!placed) {
            keys.push_back(key);
            buckets.push_back({state});
        }
    }
    return SigmaAlgebra(space, std::move(buckets));
}

CrmFamily build_spatial_family(int s_size, int institutions, const Eigen::VectorXd& probs, const Utility& u,
                               const OuterRule& outer_rule) {
    if (s_size < 2) fail(ErrorKind::ValidationError, "spatial family needs at least two states per institution");
    if (institutions < 1) fail(ErrorKind::ValidationError, "spatial family needs at least one institution");
    double states = 1;
    for (int j = 0; j < institutions; ++j) states *= s_size;
    if (states > kSpatialStateCap) {
        std::ostringstream msg;
        msg << "spatial state space has " << states << " states, cap is " << kSpatialStateCap;
        fail(ErrorKind::SizeOverflow, msg.str());
    }
    if (probs.size() != static_cast<int>(states))
        fail(ErrorKind::DimMismatch, "spatial family needs one probability per joint state");
    if (u.dim() != institutions)
        fail(ErrorKind::DimMismatch, "spatial family utility dimension must match the institution count");

    const FiniteProbSpace space(probs);
    const SigmaAlgebra full = SigmaAlgebra::discrete(space);

    // All subsystems J of {0, ..., d-1}, the empty one first.
    std::vector<FamilyIndex> indices;
    std::vector<Crm> members;
    const int subsets = 1 << institutions;
    for (int mask = 0; mask < subsets; ++mask) {
        std::vector<int> subsystem;
        for (int j = 0; j < institutions; ++j)
            if (mask & (1 << j)) subsystem.push_back(j);
        const SigmaAlgebra target = spatial_algebra(space, s_size, institutions, subsystem);
        members.push_back(make_cert_equiv(u, outer_rule(subsystem), full, target));
        indices.push_back(FamilyIndex{target, full});
    }
    return CrmFamily(space, std::move(indices), std::move(members));
}

namespace {

void require_filtration(const std::vector<SigmaAlgebra>& filtration) {
    if (filtration.empty()) fail(ErrorKind::ValidationError, "filtration must not be empty");
    for (std::size_t t = 1; t < filtration.size(); ++t)
        if (!refines(filtration[t], filtration[t - 1]))
            fail(ErrorKind::NotAFiltration, "filtration levels must increase under refinement");
}

} // namespace

CrmFamily build_dynamic_family(const std::vector<SigmaAlgebra>& filtration, const Utility& u,
                               const LevelOuterRule& outer_rule) {
    require_filtration(filtration);
    const SigmaAlgebra& terminal = filtration.back();
    std::vector<FamilyIndex> indices;
    std::vector<Crm> members;
    for (std::size_t t = 0; t < filtration.size(); ++t) {
        members.push_back(make_cert_equiv(u, outer_rule(static_cast<int>(t)), terminal, filtration[t]));
        indices.push_back(FamilyIndex{filtration[t], terminal});
    }
    return CrmFamily(filtration.front().space(), std::move(indices), std::move(members));
}

CrmFamily build_cce_family(const std::vector<SigmaAlgebra>& filtration, const std::vector<Utility>& utilities,
                           std::vector<DeclaredLink> declared_links) {
    require_filtration(filtration);
    if (utilities.size() != filtration.size())
        fail(ErrorKind::ValidationError, "one utility per filtration level required");
    const int d = utilities.front().dim();
    for (const auto& u : utilities)
        if (u.dim() != d) fail(ErrorKind::DimMismatch, "level utilities must share one dimension");

    // Diagonal ranges must be nested downward in time: every later
    // diagonal value must be attainable by every earlier diagonal.
    for (std::size_t s = 0; s < filtration.size(); ++s)
        for (std::size_t t = s; t < filtration.size(); ++t)
            for (double x = -3.0; x <= 3.0; x += 0.75) {
                const double y = f_u(utilities[t], x);
                try {
                    (void)f_u_inverse(utilities[s], y);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::OutOfRange) throw;
                    std::ostringstream msg;
                    msg << "diagonal value of level " << t << " unattainable at level " << s;
                    fail(ErrorKind::RangeNotNested, msg.str());
                }
            }

    const FiniteProbSpace& space = filtration.front().space();
    std::vector<FamilyIndex> indices;
    std::vector<Crm> members;
    for (std::size_t s = 0; s < filtration.size(); ++s)
        for (std::size_t t = s; t < filtration.size(); ++t) {
            members.push_back(
                make_cert_equiv(utilities[t], OuterMap::negation(space), filtration[t], filtration[s]));
            indices.push_back(FamilyIndex{filtration[s], filtration[t]});
        }
    return CrmFamily(space, std::move(indices), std::move(members), std::move(declared_links));
}

std::vector<FamilyTriple> family_triples(const CrmFamily& fam) {
    std::vector<FamilyTriple> triples;
    for (int i1 = 0; i1 < fam.size(); ++i1)
        for (int i2 = 0; i2 < fam.size(); ++i2) {
            const auto& coarse = fam.index(i1); // (G, T1)
            const auto& fine = fam.index(i2);   // (H, T2)
            if (!contains(coarse.target, fine.target)) continue; // G subset of H
            if (!contains(fine.target, coarse.domain)) continue; // H subset of T1
            const int fine_t1 = fam.find(fine.target, coarse.domain);
            const int coarse_t2 = fam.find(coarse.target, fine.domain);
            if (fine_t1 < 0 || coarse_t2 < 0) continue;
            triples.push_back(FamilyTriple{i1, fine_t1, i2, coarse_t2});
        }
    return triples;
}

namespace {

/// Recursion identity across domains: rho_{G,T1}(X) equals rho_{G,T2}
/// applied to the diagonal cash position extracted through (H, T2).
CheckReport family_recursive_check(const Crm& coarse_t1, const Crm& fine_t1, const Crm& fine_t2,
                                   const Crm& coarse_t2, int trials, std::uint64_t seed, double tol) {
    CheckReport report;
    report.check_name = "family_recursive";
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, coarse_t1.domain(), coarse_t1.dim());
        const RandomVariable lhs = eval(coarse_t1, x);
        const RandomVariable cash = f_rho_inverse(fine_t2, eval(fine_t1, x));
        const RandomVariable rhs = eval(coarse_t2, RandomVector::diagonal(cash, coarse_t2.dim()));
        const double residual = (lhs.values() - rhs.values()).cwiseAbs().maxCoeff();
        report.note_residual(residual);
        report.record(residual <= tol, trial, {{"X", to_json(x)}},
                      {{"lhs", to_json(lhs)}, {"rhs", to_json(rhs)}, {"residual", residual}},
                      {{"max_residual", tol}});
    }
    return report;
}

/// Ordered-pair form across domains: dominate or undercut the diagonal
/// cash position with a nonnegative T2-measurable perturbation.
CheckReport family_definitional_check(const Crm& coarse_t1, const Crm& fine_t1, const Crm& fine_t2,
                                      const Crm& coarse_t2, int trials, std::uint64_t seed, double tol) {
    CheckReport report;
    report.check_name = "family_definitional";
    const double hyp_slack = 1e-9;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, coarse_t1.domain(), coarse_t1.dim());
        const RandomVariable cash = f_rho_inverse(fine_t2, eval(fine_t1, x));
        const Eigen::MatrixXd base = RandomVector::diagonal(cash, coarse_t2.dim()).values();
        Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(x.n(), coarse_t2.dim());
        for (const auto& block : coarse_t2.domain().blocks())
            for (int j = 0; j < coarse_t2.dim(); ++j)
                if (rng.coin()) {
                    const double v = rng.uniform(0.0, 2.0);
                    for (int state : block) bump(state, j) = v;
                }

        bool ok = true;
        nlohmann::json detail = nlohmann::json::array();
        const RandomVariable rho_fine_x = eval(fine_t1, x);
        const RandomVariable rho_coarse_x = eval(coarse_t1, x);
        auto run_side = [&](const RandomVector& y, bool y_less_risky, const char* name) {
            const RandomVariable rho_fine_y = eval(fine_t2, y);
            const bool hyp = y_less_risky
                                 ? (rho_fine_y.values().array() <= rho_fine_x.values().array() + hyp_slack).all()
                                 : (rho_fine_y.values().array() >= rho_fine_x.values().array() - hyp_slack).all();
            if (!hyp) {
                ++report.skipped;
                return;
            }
            const RandomVariable rho_coarse_y = eval(coarse_t2, y);
            const double excess = y_less_risky
                                      ? (rho_coarse_y.values() - rho_coarse_x.values()).maxCoeff()
                                      : (rho_coarse_x.values() - rho_coarse_y.values()).maxCoeff();
            report.note_residual(std::max(0.0, excess));
            if (excess > tol) {
                ok = false;
                detail.push_back({{"construction", name}, {"Y", to_json(y)}, {"excess", excess}});
            }
        };
        run_side(RandomVector(x.space(), base + bump), true, "cash_plus");
        run_side(RandomVector(x.space(), base - bump), false, "cash_minus");
        report.record(ok, trial, {{"X", to_json(x)}}, detail, {{"max_excess", tol}});
    }
    return report;
}

void merge_into(CheckReport& total, const CheckReport& sub, int tau, const FamilyTriple& triple) {
    total.trials += sub.trials;
    total.passes += sub.passes;
    total.skipped += sub.skipped;
    total.note_residual(sub.max_residual);
    for (const auto& f : sub.failures) {
        CheckFailure tagged = f;
        tagged.witness["triple"] = tau;
        tagged.witness["members"] = {triple.coarse_t1, triple.fine_t1, triple.fine_t2, triple.coarse_t2};
        tagged.witness["sub_check"] = sub.check_name;
        total.failures.push_back(std::move(tagged));
    }
}

} // namespace

CheckReport check_family_consistency(const CrmFamily& fam, int trials, std::uint64_t rng_seed, double tol) {
    CheckReport report;
    report.check_name = "family_consistency";
    const auto triples = family_triples(fam);
    for (std::size_t tau = 0; tau < triples.size(); ++tau) {
        const auto& tr = triples[tau];
        const Crm& coarse_t1 = fam.member(tr.coarse_t1);
        const Crm& fine_t1 = fam.member(tr.fine_t1);
        const Crm& fine_t2 = fam.member(tr.fine_t2);
        const Crm& coarse_t2 = fam.member(tr.coarse_t2);
        const std::uint64_t rec_seed = family_triple_seed(rng_seed, static_cast<int>(tau), false);
        const std::uint64_t def_seed = family_triple_seed(rng_seed, static_cast<int>(tau), true);
        if (tr.fine_t1 == tr.fine_t2 && tr.coarse_t1 == tr.coarse_t2) {
            // single-domain triple: exactly the pairwise checks
            merge_into(report, check_consistency_recursive(coarse_t1, fine_t1, trials, rec_seed, tol),
                       static_cast<int>(tau), tr);
            merge_into(report, check_consistency_definitional(coarse_t1, fine_t1, trials, def_seed, tol),
                       static_cast<int>(tau), tr);
        } else {
            merge_into(report, family_recursive_check(coarse_t1, fine_t1, fine_t2, coarse_t2, trials, rec_seed, tol),
                       static_cast<int>(tau), tr);
            merge_into(report,
                       family_definitional_check(coarse_t1, fine_t1, fine_t2, coarse_t2, trials, def_seed, tol),
                       static_cast<int>(tau), tr);
        }
    }
    return report;
}

const RandomVariable& AffineLink::b_at(const SigmaAlgebra& h) const {
    for (const auto& [alg, value] : b)
        if (alg == h) return value;
    fail(ErrorKind::ValidationError, "no link intercept for the requested target algebra");
}

AffineLink fit_intercons_link(const CrmFamily& fam, const SigmaAlgebra& t1, const SigmaAlgebra& t2, int samples,
                              std::uint64_t rng_seed, double tol) {
    if (samples < 3) fail(ErrorKind::ValidationError, "fit_intercons_link needs at least three samples");
    const Utility& u1 = fam.domain_utility(t1);
    const Utility& u2 = fam.domain_utility(t2);

    // Targets shared by both domains.
    std::vector<SigmaAlgebra> targets;
    for (int i = 0; i < fam.size(); ++i) {
        const auto& idx = fam.index(i);
        if (!(idx.domain == t1)) continue;
        if (fam.find(idx.target, t2) < 0) continue;
        bool seen = false;
        for (const auto& h : targets) seen = seen || h == idx.target;
        if (!seen) targets.push_back(idx.target);
    }
    if (targets.empty())
        fail(ErrorKind::ValidationError, "fit_intercons_link: the two domains share no target algebra");

    // Per-block regression data over shared random positions.
    struct BlockFit {
        std::size_t target_id;
        std::vector<int> states;
        double weight = 0;
        std::vector<double> xs, ys;
    };
    std::vector<BlockFit> blocks;
    for (std::size_t hid = 0; hid < targets.size(); ++hid) {
        const SigmaAlgebra& h = targets[hid];
        const Crm& m1 = fam.member(h, t1);
        const Crm& m2 = fam.member(h, t2);
        std::vector<BlockFit> local;
        for (const auto& blk : h.blocks()) {
            BlockFit bf;
            bf.target_id = hid;
            bf.states = blk;
            for (int state : blk) bf.weight += fam.space().prob(state);
            local.push_back(std::move(bf));
        }
        for (int k = 0; k < samples; ++k) {
            Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(k) * 131 + hid));
            const RandomVector x = random_measurable_vector(rng, t1, u1.dim());
            const RandomVariable xs = cond_expectation(apply_utility(u1, x), h);
            const RandomVariable cash = f_rho_inverse(m2, eval(m1, x));
            const RandomVariable ys = apply_f_u(u2, cash);
            for (auto& bf : local) {
                bf.xs.push_back(xs(bf.states.front()));
                bf.ys.push_back(ys(bf.states.front()));
            }
        }
        for (auto& bf : local) blocks.push_back(std::move(bf));
    }

    // Slope per block, then one shared slope.
    std::vector<double> slopes(blocks.size());
    double slope_acc = 0, weight_acc = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const auto& bf = blocks[bi];
        const int m = static_cast<int>(bf.xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int k = 0; k < m; ++k) {
            sx += bf.xs[static_cast<std::size_t>(k)];
            sy += bf.ys[static_cast<std::size_t>(k)];
            sxx += bf.xs[static_cast<std::size_t>(k)] * bf.xs[static_cast<std::size_t>(k)];
            sxy += bf.xs[static_cast<std::size_t>(k)] * bf.ys[static_cast<std::size_t>(k)];
        }
        const double det = m * sxx - sx * sx;
        if (std::abs(det) <= 1e-10 * m * (1.0 + sxx))
            fail(ErrorKind::DegenerateFit, "fit_intercons_link: sampled positions do not vary on a block");
        slopes[bi] = (m * sxy - sx * sy) / det;
        slope_acc += bf.weight * slopes[bi];
        weight_acc += bf.weight;
    }
    const double a = slope_acc / weight_acc;
    if (!(a > 0.0)) fail(ErrorKind::NonAffineRelation, "fit_intercons_link: fitted slope is not positive");
    for (double s : slopes)
        if (std::abs(s - a) > tol * (1.0 + std::abs(a))) {
            std::ostringstream msg;
            msg << "fit_intercons_link: slope varies across blocks (" << s << " vs " << a << ")";
            fail(ErrorKind::NonAffineRelation, msg.str());
        }

    // Intercepts per target, residual over everything.
    AffineLink link;
    link.a = a;
    double residual = 0;
    std::vector<Eigen::VectorXd> intercepts(targets.size(), Eigen::VectorXd::Zero(fam.space().n()));
    for (const auto& bf : blocks) {
        double acc = 0;
        for (std::size_t k = 0; k < bf.xs.size(); ++k) acc += bf.ys[k] - a * bf.xs[k];
        const double b_blk = acc / static_cast<double>(bf.xs.size());
        for (int state : bf.states) intercepts[bf.target_id](state) = b_blk;
        for (std::size_t k = 0; k < bf.xs.size(); ++k)
            residual = std::max(residual, std::abs(bf.ys[k] - a * bf.xs[k] - b_blk));
    }
    link.residual = residual;
    if (residual > tol) {
        std::ostringstream msg;
        msg << "fit_intercons_link: affine residual " << residual << " exceeds " << tol;
        fail(ErrorKind::NonAffineRelation, msg.str());
    }
    for (std::size_t hid = 0; hid < targets.size(); ++hid)
        link.b.emplace_back(targets[hid], RandomVariable(fam.space(), intercepts[hid]));

    // Tower identity of intercepts across nested targets.
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = 0; j < targets.size(); ++j) {
            if (i == j || !contains(targets[i], targets[j])) continue; // targets[i] subset of targets[j]
            const RandomVariable projected = cond_expectation(link.b[j].second, targets[i]);
            const double gap = (projected.values() - link.b[i].second.values()).cwiseAbs().maxCoeff();
            if (gap > tol) {
                std::ostringstream msg;
                msg << "fit_intercons_link: intercepts break the tower identity by " << gap;
                fail(ErrorKind::NonAffineRelation, msg.str());
            }
        }
    return link;
}

CheckReport check_range_lemma(const Utility& u, const SigmaAlgebra& h, const SigmaAlgebra& g, int trials,
                              std::uint64_t rng_seed) {
    require_same_space(h.space(), g.space(), "check_range_lemma");
    if (!contains(g, h)) fail(ErrorKind::AlgebraMismatch, "check_range_lemma: coarse algebra not contained in fine");
    CheckReport report;
    report.check_name = "range_lemma";
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, h, u.dim());
        const RandomVariable z = cond_expectation(apply_utility(u, x), g);
        bool ok = true;
        double residual = 0.0;
        nlohmann::json observed;
        try {
            const RandomVariable cash = apply_f_u_inverse(u, z);
            residual = (apply_f_u(u, cash).values() - z.values()).cwiseAbs().maxCoeff();
            report.note_residual(residual);
            ok = residual <= 1e-8 && is_measurable(cash, g);
            observed = {{"cash", to_json(cash)}, {"residual", residual}};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::OutOfRange) throw;
            ok = false;
            observed = {{"error", "OutOfRange"}};
        }
        report.record(ok, trial, {{"X", to_json(x)}}, observed, {{"attained", true}});
    }
    return report;
}

} // namespace mcrm
