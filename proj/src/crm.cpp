#include "mcrm/crm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcrm/roots.hpp"

namespace mcrm {

OuterMap OuterMap::negation(const FiniteProbSpace& space) { return OuterMap(space, Negation{}); }

OuterMap OuterMap::affine_neg(const FiniteProbSpace& space, double scale, double offset) {
    if (!(scale > 0.0)) fail(ErrorKind::ValidationError, "outer map scale must be positive");
    return OuterMap(space, AffineNeg{Eigen::VectorXd::Constant(space.n(), scale),
                                     Eigen::VectorXd::Constant(space.n(), offset)});
}

OuterMap OuterMap::affine_neg(const RandomVariable& scale, const RandomVariable& offset) {
    require_same_space(scale.space(), offset.space(), "OuterMap::affine_neg");
    for (int i = 0; i < scale.n(); ++i)
        if (!(scale(i) > 0.0)) fail(ErrorKind::ValidationError, "outer map scale must be positive");
    return OuterMap(scale.space(), AffineNeg{scale.values(), offset.values()});
}

OuterMap OuterMap::tables(const FiniteProbSpace& space, std::vector<PiecewiseLinear> per_state) {
    if (static_cast<int>(per_state.size()) != space.n())
        fail(ErrorKind::DimMismatch, "outer map needs one table per state");
    for (const auto& t : per_state)
        if (t.increasing()) fail(ErrorKind::ValidationError, "outer map tables must strictly decrease");
    return OuterMap(space, Tables{std::move(per_state)});
}

double OuterMap::eval(double t, int state) const {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Negation>) {
                return -t;
            } else if constexpr (std::is_same_v<T, AffineNeg>) {
                return -spec.scale(state) * t + spec.offset(state);
            } else {
                return spec.per_state[state].eval(t);
            }
        },
        spec_);
}

double OuterMap::inverse(double y, int state) const {
    return std::visit(
        [&](const auto& spec) -> double {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Negation>) {
                return -y;
            } else if constexpr (std::is_same_v<T, AffineNeg>) {
                return (spec.offset(state) - y) / spec.scale(state);
            } else {
                return spec.per_state[state].invert(y);
            }
        },
        spec_);
}

RandomVariable OuterMap::eval(const RandomVariable& t) const {
    Eigen::VectorXd out(t.n());
    for (int i = 0; i < t.n(); ++i) out(i) = eval(t(i), i);
    return RandomVariable(space_, std::move(out));
}

RandomVariable OuterMap::inverse(const RandomVariable& y) const {
    Eigen::VectorXd out(y.n());
    for (int i = 0; i < y.n(); ++i) out(i) = inverse(y(i), i);
    return RandomVariable(space_, std::move(out));
}

bool OuterMap::block_constant_on(const SigmaAlgebra& g) const {
    if (!same_space(space_, g.space())) return false;
    return std::visit(
        [&](const auto& spec) -> bool {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, Negation>) {
                return true;
            } else if constexpr (std::is_same_v<T, AffineNeg>) {
                for (const auto& block : g.blocks()) {
                    const int ref = block.front();
                    for (int state : block)
                        if (std::abs(spec.scale(state) - spec.scale(ref)) > kValueTol ||
                            std::abs(spec.offset(state) - spec.offset(ref)) > kValueTol)
                            return false;
                }
                return true;
            } else {
                for (const auto& block : g.blocks()) {
                    const int ref = block.front();
                    for (int state : block)
                        if (!(spec.per_state[state] == spec.per_state[ref])) return false;
                }
                return true;
            }
        },
        spec_);
}

Crm::Crm(SigmaAlgebra domain, SigmaAlgebra target, int dim, Evaluator evaluator)
    : domain_(std::move(domain)), target_(std::move(target)), dim_(dim), evaluator_(std::move(evaluator)) {
    require_same_space(domain_.space(), target_.space(), "Crm");
    if (dim_ < 1) fail(ErrorKind::DimMismatch, "Crm dimension must be at least one");
    if (!refines(domain_, target_)) fail(ErrorKind::AlgebraMismatch, "target algebra must be contained in domain algebra");
}

const Utility* Crm::core_utility() const {
    const Crm* cur = this;
    while (true) {
        if (const auto* ce = std::get_if<CertEquivSpec>(&cur->evaluator_)) return &ce->u;
        if (const auto* nw = std::get_if<NormalizedOf>(&cur->evaluator_)) {
            cur = nw->inner.get();
            continue;
        }
        if (const auto* dr = std::get_if<DiagonalRealizationOf>(&cur->evaluator_)) {
            cur = dr->inner.get();
            continue;
        }
        return nullptr;
    }
}

Crm make_cert_equiv(const Utility& u, const OuterMap& outer, const SigmaAlgebra& domain, const SigmaAlgebra& target) {
    require_same_space(outer.space(), target.space(), "make_cert_equiv");
    if (!refines(domain, target))
        fail(ErrorKind::AlgebraMismatch, "make_cert_equiv: target algebra not contained in domain algebra");
    if (!outer.block_constant_on(target))
        fail(ErrorKind::AlgebraMismatch, "make_cert_equiv: outer map is not constant on target blocks");
    Crm rho(domain, target, u.dim(), CertEquivSpec{u, outer});
    // Some position must carry zero risk; surface unreachable zero now
    // instead of failing inside a later inversion.
    (void)f_rho_inverse(rho, RandomVariable::constant(rho.space(), 0.0));
    return rho;
}

Crm make_constant_zero(const SigmaAlgebra& domain, const SigmaAlgebra& target, int dim) {
    return Crm(domain, target, dim, ConstantZero{});
}

Crm make_state_weighted(const SigmaAlgebra& domain, int dim, const Eigen::VectorXd& weights) {
    if (weights.size() != domain.space().n())
        fail(ErrorKind::DimMismatch, "make_state_weighted: one weight per state required");
    return Crm(domain, SigmaAlgebra::trivial(domain.space()), dim, StateWeightedSum{weights});
}

Crm make_mixed_utility(const SigmaAlgebra& domain, const SigmaAlgebra& target, const SigmaAlgebra& mixing,
                       std::vector<Utility> per_block) {
    require_same_space(mixing.space(), target.space(), "make_mixed_utility");
    if (static_cast<int>(per_block.size()) != mixing.block_count())
        fail(ErrorKind::DimMismatch, "make_mixed_utility: one utility per mixing block required");
    const int d = per_block.front().dim();
    for (const auto& u : per_block)
        if (u.dim() != d) fail(ErrorKind::DimMismatch, "make_mixed_utility: utilities must share a dimension");
    return Crm(domain, target, d, MixedUtilitySpec{mixing, std::move(per_block)});
}

namespace {

RandomVariable eval_cert_equiv(const Crm& rho, const CertEquivSpec& spec, const RandomVector& x) {
    const RandomVariable ux = apply_utility(spec.u, x);
    const RandomVariable z = cond_expectation(ux, rho.target());
    // One diagonal inversion per target block; z is block-constant.
    Eigen::VectorXd w(x.n());
    for (const auto& block : rho.target().blocks()) {
        const double t = f_u_inverse(spec.u, z(block.front()));
        for (int state : block) w(state) = t;
    }
    return spec.outer.eval(RandomVariable(x.space(), std::move(w)));
}

RandomVariable eval_mixed(const Crm& rho, const MixedUtilitySpec& spec, const RandomVector& x) {
    Eigen::VectorXd y(x.n());
    for (int state = 0; state < x.n(); ++state)
        y(state) = eval_utility(spec.per_block[spec.mixing.block_of(state)], x.row(state));
    const RandomVariable mixed(x.space(), std::move(y));
    const RandomVariable z = cond_expectation(mixed, rho.target());
    return RandomVariable(x.space(), -z.values());
}

} // namespace

RandomVariable eval(const Crm& rho, const RandomVector& x) {
    require_same_space(x.space(), rho.space(), "eval");
    if (x.dim() != rho.dim()) fail(ErrorKind::DimMismatch, "eval: vector dimension differs from measure");
    if (!is_measurable(x, rho.domain())) fail(ErrorKind::NotMeasurable, "eval: input not measurable on domain algebra");
    return std::visit(
        [&](const auto& spec) -> RandomVariable {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, CertEquivSpec>) {
                return eval_cert_equiv(rho, spec, x);
            } else if constexpr (std::is_same_v<T, NormalizedOf>) {
                const RandomVariable inner_eval = eval(*spec.inner, x);
                const RandomVariable alpha = f_rho_inverse(*spec.inner, inner_eval, spec.tol);
                return RandomVariable(x.space(), -alpha.values());
            } else if constexpr (std::is_same_v<T, DiagonalRealizationOf>) {
                Eigen::VectorXd out(x.n());
                for (int state = 0; state < x.n(); ++state) {
                    const RandomVector point = RandomVector::constant_rows(x.space(), x.row(state));
                    out(state) = eval(*spec.inner, point)(state);
                }
                return RandomVariable(x.space(), std::move(out));
            } else if constexpr (std::is_same_v<T, ConstantZero>) {
                return RandomVariable::constant(x.space(), 0.0);
            } else if constexpr (std::is_same_v<T, StateWeightedSum>) {
                const double v = -spec.weights.dot(x.values().col(0));
                return RandomVariable::constant(x.space(), v);
            } else {
                return eval_mixed(rho, spec, x);
            }
        },
        rho.evaluator());
}

RandomVariable f_rho(const Crm& rho, const RandomVariable& alpha) {
    require_same_space(alpha.space(), rho.space(), "f_rho");
    if (!is_measurable(alpha, rho.target()))
        fail(ErrorKind::NotMeasurable, "f_rho: alpha not measurable on target algebra");
    return eval(rho, RandomVector::diagonal(alpha, rho.dim()));
}

RandomVariable f_rho_inverse(const Crm& rho, const RandomVariable& beta, double tol) {
    require_same_space(beta.space(), rho.space(), "f_rho_inverse");
    if (!is_measurable(beta, rho.target()))
        fail(ErrorKind::NotMeasurable, "f_rho_inverse: beta not measurable on target algebra");

    const auto& blocks = rho.target().blocks();
    const int nb = static_cast<int>(blocks.size());
    Eigen::VectorXd target(nb);
    for (int b = 0; b < nb; ++b) target(b) = beta(blocks[b].front());

    // The diagonal profile phi_b(t) = f_rho(t on block b) is strictly
    // decreasing in t and, by locality, block b's value depends on the
    // trial point of block b alone. All blocks therefore share each
    // full evaluation below.
    auto profile = [&](const Eigen::VectorXd& per_block) -> Eigen::VectorXd {
        Eigen::VectorXd alpha(rho.space().n());
        for (int b = 0; b < nb; ++b)
            for (int state : blocks[b]) alpha(state) = per_block(b);
        const RandomVariable out = f_rho(rho, RandomVariable(rho.space(), std::move(alpha)));
        Eigen::VectorXd vals(nb);
        for (int b = 0; b < nb; ++b) vals(b) = out(blocks[b].front());
        return vals;
    };

    Eigen::VectorXd lo = Eigen::VectorXd::Constant(nb, -1.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(nb, 1.0);
    Eigen::VectorXd result(nb);
    std::vector<bool> done(nb, false);

    Eigen::VectorXd phi_lo = profile(lo);
    Eigen::VectorXd phi_hi = profile(hi);

    // Expand brackets until phi(lo) >= target >= phi(hi) on every block.
    while (true) {
        bool any_expansion = false;
        for (int b = 0; b < nb; ++b) {
            const bool need_lo = phi_lo(b) < target(b);
            const bool need_hi = phi_hi(b) > target(b);
            if ((need_lo && lo(b) <= -kBracketLimit) || (need_hi && hi(b) >= kBracketLimit)) {
                std::ostringstream msg;
                msg << "diagonal value " << target(b) << " unattainable on target block " << b;
                fail(ErrorKind::OutOfRange, msg.str());
            }
            if (need_lo) lo(b) *= 2.0;
            if (need_hi) hi(b) *= 2.0;
            any_expansion = any_expansion || need_lo || need_hi;
        }
        if (!any_expansion) break;
        phi_lo = profile(lo);
        phi_hi = profile(hi);
    }

    for (int iter = 0; iter < 260; ++iter) {
        bool any_active = false;
        Eigen::VectorXd probe(nb);
        for (int b = 0; b < nb; ++b) {
            probe(b) = done[b] ? result(b) : 0.5 * (lo(b) + hi(b));
            if (!done[b]) any_active = true;
        }
        if (!any_active) break;
        const Eigen::VectorXd phi = profile(probe);
        for (int b = 0; b < nb; ++b) {
            if (done[b]) continue;
            if (phi(b) > target(b)) {
                lo(b) = probe(b); // decreasing profile: solution lies right of probe
            } else {
                hi(b) = probe(b);
            }
            // Resolve both the value and the argument so downstream
            // identities hold in either scale.
            if (std::abs(phi(b) - target(b)) <= tol && hi(b) - lo(b) <= 1e-11 * (1.0 + std::abs(probe(b)))) {
                result(b) = probe(b);
                done[b] = true;
            }
        }
    }
    for (int b = 0; b < nb; ++b)
        if (!done[b]) result(b) = 0.5 * (lo(b) + hi(b));

    Eigen::VectorXd alpha(rho.space().n());
    for (int b = 0; b < nb; ++b)
        for (int state : blocks[b]) alpha(state) = result(b);
    return RandomVariable(rho.space(), std::move(alpha));
}

Crm normalize(const Crm& rho, double tol) {
    return Crm(rho.domain(), rho.target(), rho.dim(),
               NormalizedOf{std::make_shared<const Crm>(rho), tol});
}

Crm diagonal_realization(const Crm& rho) {
    const SigmaAlgebra full = SigmaAlgebra::discrete(rho.space());
    return Crm(full, full, rho.dim(), DiagonalRealizationOf{std::make_shared<const Crm>(rho)});
}

RandomVector random_vector(Rng& rng, const FiniteProbSpace& space, int dim, double lo, double hi) {
    Eigen::MatrixXd values(space.n(), dim);
    for (int i = 0; i < space.n(); ++i)
        for (int j = 0; j < dim; ++j) values(i, j) = rng.uniform(lo, hi);
    return RandomVector(space, std::move(values));
}

RandomVector random_measurable_vector(Rng& rng, const SigmaAlgebra& g, int dim, double lo, double hi) {
    Eigen::MatrixXd values(g.space().n(), dim);
    for (const auto& block : g.blocks()) {
        Eigen::RowVectorXd row(dim);
        for (int j = 0; j < dim; ++j) row(j) = rng.uniform(lo, hi);
        for (int state : block) values.row(state) = row;
    }
    return RandomVector(g.space(), std::move(values));
}

RandomVariable random_measurable_variable(Rng& rng, const SigmaAlgebra& g, double lo, double hi) {
    Eigen::VectorXd values(g.space().n());
    for (const auto& block : g.blocks()) {
        const double v = rng.uniform(lo, hi);
        for (int state : block) values(state) = v;
    }
    return RandomVariable(g.space(), std::move(values));
}

nlohmann::json to_json(const RandomVariable& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.n(); ++i) out.push_back(v(i));
    return out;
}

nlohmann::json to_json(const RandomVector& x) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < x.n(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < x.dim(); ++j) row.push_back(x.values()(i, j));
        out.push_back(row);
    }
    return out;
}

CheckReport check_strict_antitonicity(const Crm& rho, int trials, std::uint64_t rng_seed) {
    CheckReport report;
    report.check_name = "strict_antitonicity";
    const auto& domain_blocks = rho.domain().blocks();
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());
        // Nonnegative drop, constant per domain block so Y stays measurable.
        Eigen::MatrixXd drop = Eigen::MatrixXd::Zero(x.n(), x.dim());
        for (const auto& block : domain_blocks)
            for (int j = 0; j < x.dim(); ++j)
                if (rng.coin()) {
                    const double v = rng.uniform(0.0, 2.0);
                    for (int state : block) drop(state, j) = v;
                }
        // Guarantee a strict decrease somewhere.
        {
            const auto& block = domain_blocks[static_cast<std::size_t>(rng.index(static_cast<int>(domain_blocks.size())))];
            const int j = rng.index(x.dim());
            const double v = rng.uniform(0.5, 1.5);
            for (int state : block) drop(state, j) += v;
        }
        const RandomVector y(x.space(), x.values() - drop);

        const RandomVariable rx = eval(rho, x);
        const RandomVariable ry = eval(rho, y);
        bool leq_everywhere = true;
        bool strict_somewhere = false;
        for (int i = 0; i < rx.n(); ++i) {
            if (rx(i) > ry(i) + kValueTol) leq_everywhere = false;
            if (rx(i) < ry(i) - kValueTol) strict_somewhere = true;
            report.note_residual(std::max(0.0, rx(i) - ry(i)));
        }
        const bool ok = leq_everywhere && strict_somewhere;
        report.record(ok, trial, {{"X", to_json(x)}, {"Y", to_json(y)}},
                      {{"rho_X", to_json(rx)}, {"rho_Y", to_json(ry)}},
                      {{"leq_everywhere", true}, {"strict_somewhere", true}});
    }
    return report;
}

CheckReport check_locality(const Crm& rho, int trials, std::uint64_t rng_seed) {
    CheckReport report;
    report.check_name = "locality";
    const auto& blocks = rho.target().blocks();
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());
        const RandomVector y = random_measurable_vector(rng, rho.domain(), rho.dim());
        std::vector<bool> in_a(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) in_a[b] = rng.coin();

        Eigen::MatrixXd mixed(x.n(), x.dim());
        Eigen::VectorXd indicator(x.n());
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (int state : blocks[b]) {
                mixed.row(state) = in_a[b] ? x.row(state) : y.row(state);
                indicator(state) = in_a[b] ? 1.0 : 0.0;
            }
        const RandomVariable lhs = eval(rho, RandomVector(x.space(), std::move(mixed)));
        const RandomVariable rx = eval(rho, x);
        const RandomVariable ry = eval(rho, y);
        Eigen::VectorXd rhs =
            indicator.cwiseProduct(rx.values()) + (Eigen::VectorXd::Ones(x.n()) - indicator).cwiseProduct(ry.values());
        const double residual = (lhs.values() - rhs).cwiseAbs().maxCoeff();
        report.note_residual(residual);
        report.record(residual <= kCheckTol, trial,
                      {{"X", to_json(x)}, {"Y", to_json(y)}, {"A_indicator", to_json(RandomVariable(x.space(), indicator))}},
                      {{"residual", residual}}, {{"max_residual", kCheckTol}});
    }
    return report;
}

CheckReport check_cond_law_invariance(const Crm& rho, int trials, std::uint64_t rng_seed) {
    CheckReport report;
    report.check_name = "cond_law_invariance";
    const auto& g = rho.target();
    const auto& domain_blocks = rho.domain().blocks();
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());

        // Permute domain blocks of equal probability mass within each
        // target block; the conditional law given the target algebra is
        // preserved by construction and Y stays domain-measurable.
        std::vector<double> mass(domain_blocks.size(), 0.0);
        for (std::size_t b = 0; b < domain_blocks.size(); ++b)
            for (int state : domain_blocks[b]) mass[b] += x.space().prob(state);
        std::vector<int> source(domain_blocks.size());
        for (std::size_t b = 0; b < domain_blocks.size(); ++b) source[b] = static_cast<int>(b);
        bool any_swap_possible = false;
        for (int tb = 0; tb < g.block_count(); ++tb) {
            std::vector<std::vector<int>> groups; // domain-block ids of equal mass
            for (std::size_t b = 0; b < domain_blocks.size(); ++b) {
                if (g.block_of(domain_blocks[b].front()) != tb) continue;
                bool placed = false;
                for (auto& grp : groups)
                    if (std::abs(mass[static_cast<std::size_t>(grp.front())] - mass[b]) <= kValueTol) {
                        grp.push_back(static_cast<int>(b));
                        placed = true;
                        break;
                    }
                if (!placed) groups.push_back({static_cast<int>(b)});
            }
            for (auto& grp : groups) {
                if (grp.size() < 2) continue;
                any_swap_possible = true;
                for (std::size_t k = grp.size() - 1; k > 0; --k) {
                    const std::size_t r = static_cast<std::size_t>(rng.index(static_cast<int>(k) + 1));
                    std::swap(source[static_cast<std::size_t>(grp[k])], source[static_cast<std::size_t>(grp[r])]);
                }
            }
        }
        if (!any_swap_possible) {
            ++report.trials;
            ++report.skipped;
            continue;
        }
        Eigen::MatrixXd shuffled(x.n(), x.dim());
        for (std::size_t b = 0; b < domain_blocks.size(); ++b) {
            const Eigen::RowVectorXd row = x.row(domain_blocks[static_cast<std::size_t>(source[b])].front());
            for (int state : domain_blocks[b]) shuffled.row(state) = row;
        }
        const RandomVector y(x.space(), std::move(shuffled));

        const RandomVariable rx = eval(rho, x);
        const RandomVariable ry = eval(rho, y);
        const double residual = (rx.values() - ry.values()).cwiseAbs().maxCoeff();
        report.note_residual(residual);
        report.record(residual <= kCheckTol, trial, {{"X", to_json(x)}, {"Y", to_json(y)}},
                      {{"residual", residual}}, {{"max_residual", kCheckTol}});
    }
    return report;
}

} // namespace mcrm
