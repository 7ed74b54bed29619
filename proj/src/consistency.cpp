#include "mcrm/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcrm/roots.hpp"

namespace mcrm {

namespace {

void require_pair(const Crm& rho_g, const Crm& rho_h, const char* where) {
    require_same_space(rho_g.space(), rho_h.space(), where);
    if (rho_g.dim() != rho_h.dim()) fail(ErrorKind::DimMismatch, std::string(where) + ": dimensions differ");
    if (!(rho_g.domain() == rho_h.domain()))
        fail(ErrorKind::AlgebraMismatch, std::string(where) + ": domain algebras differ");
    if (!refines(rho_h.target(), rho_g.target()))
        fail(ErrorKind::AlgebraMismatch, std::string(where) + ": coarse target not contained in fine target");
}

/// Nonnegative perturbation, constant per domain block, about half of the
/// entries zero.
Eigen::MatrixXd nonneg_block_perturbation(Rng& rng, const SigmaAlgebra& domain, int dim, double hi) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(domain.space().n(), dim);
    for (const auto& block : domain.blocks())
        for (int j = 0; j < dim; ++j)
            if (rng.coin()) {
                const double v = rng.uniform(0.0, hi);
                for (int state : block) d(state, j) = v;
            }
    return d;
}

bool leq_everywhere(const RandomVariable& a, const RandomVariable& b, double slack) {
    return (a.values().array() <= b.values().array() + slack).all();
}

} // namespace

double realized_risk(const Crm& rho, const Eigen::RowVectorXd& x, int state) {
    return eval(rho, RandomVector::constant_rows(rho.space(), x))(state);
}

Decomposition::Decomposition(Crm rho, bool risk_antitone_warning)
    : rho_(std::move(rho)), warning_(risk_antitone_warning) {}

double Decomposition::lambda_point(const Eigen::RowVectorXd& x, int state) const {
    return -realized_risk(rho_, x, state);
}

RandomVariable Decomposition::lambda(const RandomVector& x) const {
    require_same_space(x.space(), rho_.space(), "Decomposition::lambda");
    if (x.dim() != rho_.dim()) fail(ErrorKind::DimMismatch, "Decomposition::lambda: dimension differs");
    Eigen::VectorXd out(x.n());
    for (int state = 0; state < x.n(); ++state) out(state) = lambda_point(x.row(state), state);
    return RandomVariable(rho_.space(), std::move(out));
}

double Decomposition::f_lambda(double t, int state) const {
    return lambda_point(Eigen::RowVectorXd::Constant(rho_.dim(), t), state);
}

double Decomposition::f_lambda_inverse(double y, int state, double tol) const {
    return solve_monotone([&](double t) { return f_lambda(t, state); }, y, tol, /*increasing=*/true);
}

RandomVariable Decomposition::f_lambda(const RandomVariable& f) const {
    Eigen::VectorXd out(f.n());
    for (int state = 0; state < f.n(); ++state) out(state) = f_lambda(f(state), state);
    return RandomVariable(rho_.space(), std::move(out));
}

RandomVariable Decomposition::f_lambda_inverse(const RandomVariable& f, double tol) const {
    Eigen::VectorXd out(f.n());
    for (int state = 0; state < f.n(); ++state) out(state) = f_lambda_inverse(f(state), state, tol);
    return RandomVariable(rho_.space(), std::move(out));
}

RandomVariable Decomposition::eta(const RandomVariable& f, double tol) const {
    const RandomVariable cash = f_lambda_inverse(f, tol);
    return eval(rho_, RandomVector::diagonal(cash, rho_.dim()));
}

CheckReport check_consistency_recursive(const Crm& rho_g, const Crm& rho_h, int trials, std::uint64_t rng_seed,
                                        double tol) {
    require_pair(rho_g, rho_h, "check_consistency_recursive");
    CheckReport report;
    report.check_name = "consistency_recursive";
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho_g.domain(), rho_g.dim());
        const RandomVariable lhs = eval(rho_g, x);
        const RandomVariable cash = f_rho_inverse(rho_h, eval(rho_h, x));
        const RandomVariable rhs = eval(rho_g, RandomVector::diagonal(cash, rho_g.dim()));
        const double residual = (lhs.values() - rhs.values()).cwiseAbs().maxCoeff();
        report.note_residual(residual);
        report.record(residual <= tol, trial, {{"X", to_json(x)}},
                      {{"rho_G_X", to_json(lhs)}, {"rho_G_recursed", to_json(rhs)}, {"residual", residual}},
                      {{"max_residual", tol}});
    }
    return report;
}

CheckReport check_consistency_definitional(const Crm& rho_g, const Crm& rho_h, int trials, std::uint64_t rng_seed,
                                           double tol) {
    require_pair(rho_g, rho_h, "check_consistency_definitional");
    CheckReport report;
    report.check_name = "consistency_definitional";
    const double hyp_slack = 1e-9;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho_g.domain(), rho_g.dim());
        const RandomVariable cash = f_rho_inverse(rho_h, eval(rho_h, x));
        const Eigen::MatrixXd base = RandomVector::diagonal(cash, rho_g.dim()).values();
        const Eigen::MatrixXd bump = nonneg_block_perturbation(rng, rho_g.domain(), rho_g.dim(), 2.0);

        bool ok = true;
        nlohmann::json detail = nlohmann::json::array();
        auto run_direction = [&](const RandomVector& low_risk, const RandomVector& high_risk, const char* name) {
            // hypothesis: rho_H(low_risk) <= rho_H(high_risk)
            if (!leq_everywhere(eval(rho_h, low_risk), eval(rho_h, high_risk), hyp_slack)) {
                ++report.skipped;
                return;
            }
            const RandomVariable g_low = eval(rho_g, low_risk);
            const RandomVariable g_high = eval(rho_g, high_risk);
            const double excess = (g_low.values() - g_high.values()).maxCoeff();
            report.note_residual(std::max(0.0, excess));
            if (excess > tol) {
                ok = false;
                detail.push_back({{"construction", name},
                                  {"X", to_json(high_risk)},
                                  {"Y", to_json(low_risk)},
                                  {"excess", excess}});
            }
        };

        // Y above the cash position: rho_H(Y) <= rho_H(X).
        run_direction(RandomVector(x.space(), base + bump), x, "cash_plus");
        // Y below the cash position: rho_H(Y) >= rho_H(X).
        run_direction(x, RandomVector(x.space(), base - bump), "cash_minus");
        // Rejection-sampled unconstrained pair.
        {
            const RandomVector x2 = random_measurable_vector(rng, rho_g.domain(), rho_g.dim());
            const RandomVector y2 = random_measurable_vector(rng, rho_g.domain(), rho_g.dim());
            if (leq_everywhere(eval(rho_h, x2), eval(rho_h, y2), 0.0)) {
                run_direction(x2, y2, "rejection");
            } else if (leq_everywhere(eval(rho_h, y2), eval(rho_h, x2), 0.0)) {
                run_direction(y2, x2, "rejection");
            }
        }
        report.record(ok, trial, {{"X", to_json(x)}}, detail, {{"max_excess", tol}});
    }
    return report;
}

CheckReport check_risk_antitonicity(const Crm& rho, int trials, std::uint64_t rng_seed) {
    CheckReport report;
    report.check_name = "risk_antitonicity";
    const auto& domain_blocks = rho.domain().blocks();
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());

        Decomposition view(rho, false);
        const RandomVariable lam_x = view.lambda(x);

        // Shift Y upward blockwise until its realized aggregation
        // dominates, so the realized risk of X dominates that of Y.
        RandomVector y = random_measurable_vector(rng, rho.domain(), rho.dim());
        for (double step = 1.0; step <= 1099511627776.0; step *= 2.0) {
            const RandomVariable lam_y = view.lambda(y);
            Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(y.n(), y.dim());
            bool deficient = false;
            for (const auto& block : domain_blocks) {
                bool block_deficient = false;
                for (int state : block)
                    if (lam_y(state) < lam_x(state)) block_deficient = true;
                if (block_deficient) {
                    deficient = true;
                    for (int state : block) shift.row(state).setConstant(step);
                }
            }
            if (!deficient) break;
            y = RandomVector(y.space(), y.values() + shift);
        }
        const RandomVariable lam_y = view.lambda(y);
        if (!(lam_y.values().array() >= lam_x.values().array() - kValueTol).all()) {
            ++report.trials;
            ++report.skipped;
            continue;
        }

        const RandomVariable rx = eval(rho, x);
        const RandomVariable ry = eval(rho, y);
        const double excess = (ry.values() - rx.values()).maxCoeff();
        report.note_residual(std::max(0.0, excess));
        report.record(excess <= kCheckTol, trial, {{"X", to_json(x)}, {"Y", to_json(y)}},
                      {{"rho_X", to_json(rx)}, {"rho_Y", to_json(ry)}, {"excess", excess}},
                      {{"rho_X_dominates", true}});
    }
    return report;
}

Decomposition extract_decomposition(const Crm& rho, int warn_trials, std::uint64_t warn_seed) {
    const bool antitone = check_risk_antitonicity(rho, warn_trials, warn_seed).passed();
    return Decomposition(rho, !antitone);
}

CheckReport verify_decomposition(const Crm& rho, const Decomposition& dec, int trials, std::uint64_t rng_seed,
                                 double tol) {
    CheckReport report;
    report.check_name = "verify_decomposition";
    const auto& domain_blocks = rho.domain().blocks();
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        bool ok = true;
        nlohmann::json detail = nlohmann::json::array();

        // reconstruction rho = eta o lambda
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());
        const RandomVariable direct = eval(rho, x);
        const RandomVariable rebuilt = dec.eta(dec.lambda(x));
        const double rec_residual = (direct.values() - rebuilt.values()).cwiseAbs().maxCoeff();
        report.note_residual(rec_residual);
        if (rec_residual > tol) {
            ok = false;
            detail.push_back({{"part", "reconstruction"}, {"X", to_json(x)}, {"residual", rec_residual}});
        }

        // eta(lambda(.)) = -lambda(.) on target-measurable positions
        const RandomVector xg = random_measurable_vector(rng, rho.target(), rho.dim());
        const RandomVariable lam_xg = dec.lambda(xg);
        const double const_residual =
            (dec.eta(lam_xg).values() + lam_xg.values()).cwiseAbs().maxCoeff();
        report.note_residual(const_residual);
        if (const_residual > tol) {
            ok = false;
            detail.push_back({{"part", "eta_on_measurable"}, {"X", to_json(xg)}, {"residual", const_residual}});
        }

        // strict isotonicity of lambda on a dominated pair
        {
            Eigen::MatrixXd bump = nonneg_block_perturbation(rng, rho.domain(), rho.dim(), 1.5);
            const auto& block = domain_blocks[static_cast<std::size_t>(rng.index(static_cast<int>(domain_blocks.size())))];
            const int j = rng.index(rho.dim());
            for (int state : block) bump(state, j) += 0.5;
            const RandomVector above(x.space(), x.values() + bump);
            const RandomVariable lam_low = dec.lambda(x);
            const RandomVariable lam_high = dec.lambda(above);
            const bool isotone = (lam_high.values().array() >= lam_low.values().array() - kValueTol).all() &&
                                 (lam_high.values().array() > lam_low.values().array() + kValueTol).any();
            if (!isotone) {
                ok = false;
                detail.push_back({{"part", "lambda_isotonicity"}, {"X", to_json(x)}});
            }
        }

        // locality of lambda across a random union of domain blocks
        {
            const RandomVector y = random_measurable_vector(rng, rho.domain(), rho.dim());
            Eigen::MatrixXd mixed(x.n(), x.dim());
            Eigen::VectorXd indicator(x.n());
            for (const auto& block : domain_blocks) {
                const bool in_a = rng.coin();
                for (int state : block) {
                    mixed.row(state) = in_a ? x.row(state) : y.row(state);
                    indicator(state) = in_a ? 1.0 : 0.0;
                }
            }
            const RandomVariable lam_mixed = dec.lambda(RandomVector(x.space(), std::move(mixed)));
            const Eigen::VectorXd expected = indicator.cwiseProduct(dec.lambda(x).values()) +
                                             (Eigen::VectorXd::Ones(x.n()) - indicator)
                                                 .cwiseProduct(dec.lambda(y).values());
            const double loc_residual = (lam_mixed.values() - expected).cwiseAbs().maxCoeff();
            report.note_residual(loc_residual);
            if (loc_residual > tol) {
                ok = false;
                detail.push_back({{"part", "lambda_locality"}, {"residual", loc_residual}});
            }
        }

        report.record(ok, trial, {{"X", to_json(x)}}, detail, {{"max_residual", tol}});
    }
    return report;
}

CheckReport check_aggregation_consistency(const Decomposition& dec_g, const Decomposition& dec_f, int trials,
                                          std::uint64_t rng_seed, double tol) {
    const Crm& rho_g = dec_g.source();
    const Crm& rho_f = dec_f.source();
    require_same_space(rho_g.space(), rho_f.space(), "check_aggregation_consistency");
    if (rho_g.dim() != rho_f.dim())
        fail(ErrorKind::DimMismatch, "check_aggregation_consistency: dimensions differ");
    // The diagonal cash position of a deterministic point must itself be
    // deterministic on both sides before the aggregations are compared.
    for (const Crm* rho : {&rho_g, &rho_f}) {
        for (double c : {-1.5, 0.0, 2.0}) {
            Eigen::RowVectorXd point = Eigen::RowVectorXd::Constant(rho->dim(), c);
            point(0) += 0.5; // off the diagonal
            const RandomVector x = RandomVector::constant_rows(rho->space(), point);
            const RandomVariable cash = f_rho_inverse(*rho, eval(*rho, x));
            if (cash.values().maxCoeff() - cash.values().minCoeff() > 1e-8)
                fail(ErrorKind::ValidationError,
                     "check_aggregation_consistency: diagonal cash of a deterministic point is not deterministic");
        }
    }
    const SigmaAlgebra common = join(rho_g.domain(), rho_f.domain());

    CheckReport report;
    report.check_name = "aggregation_consistency";
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x = random_measurable_vector(rng, common, rho_g.dim());

        bool ok = true;
        nlohmann::json detail = nlohmann::json::array();

        // identity form: the diagonal cash positions of both aggregations agree
        const RandomVariable cash_g = dec_g.f_lambda_inverse(dec_g.lambda(x));
        const RandomVariable cash_f = dec_f.f_lambda_inverse(dec_f.lambda(x));
        const double residual = (cash_g.values() - cash_f.values()).cwiseAbs().maxCoeff();
        report.note_residual(residual);
        if (residual > tol) {
            ok = false;
            detail.push_back({{"part", "cash_identity"}, {"residual", residual}});
        }

        // implication form on a constructed ordered pair: dominate through
        // the diagonal of the full-information aggregation
        {
            const Eigen::MatrixXd base = RandomVector::diagonal(cash_f, rho_g.dim()).values();
            const Eigen::MatrixXd bump = nonneg_block_perturbation(rng, common, rho_g.dim(), 1.0);
            const RandomVector y(x.space(), base + bump);
            const RandomVariable lam_f_x = dec_f.lambda(x);
            const RandomVariable lam_f_y = dec_f.lambda(y);
            if ((lam_f_x.values().array() <= lam_f_y.values().array() + 1e-9).all()) {
                const RandomVariable lam_g_x = dec_g.lambda(x);
                const RandomVariable lam_g_y = dec_g.lambda(y);
                const double excess = (lam_g_x.values() - lam_g_y.values()).maxCoeff();
                report.note_residual(std::max(0.0, excess));
                if (excess > tol) {
                    ok = false;
                    detail.push_back({{"part", "ordered_pair"}, {"Y", to_json(y)}, {"excess", excess}});
                }
            } else {
                ++report.skipped;
            }
        }

        report.record(ok, trial, {{"X", to_json(x)}}, detail, {{"max_residual", tol}});
    }
    return report;
}

CheckReport check_lemma_independent_constant(const Crm& rho, const Crm& rho_h, const RandomVector& x, double tol) {
    require_same_space(rho.space(), rho_h.space(), "check_lemma_independent_constant");
    if (rho.dim() != rho_h.dim())
        fail(ErrorKind::DimMismatch, "check_lemma_independent_constant: dimensions differ");
    if (!rho.target().is_trivial())
        fail(ErrorKind::AlgebraMismatch, "check_lemma_independent_constant: rho must condition on the trivial algebra");
    if (!is_independent_of(x, rho_h.target()))
        fail(ErrorKind::NotIndependent, "check_lemma_independent_constant: X depends on rho_H's target algebra");

    CheckReport report;
    report.check_name = "independent_constant";
    const RandomVariable through_h = f_rho_inverse(rho_h, eval(rho_h, x));
    const RandomVariable through_triv = f_rho_inverse(rho, eval(rho, x));
    const double residual = (through_h.values() - through_triv.values()).cwiseAbs().maxCoeff();
    report.note_residual(residual);
    report.record(residual <= tol, 0, {{"X", to_json(x)}},
                  {{"via_rho_H", to_json(through_h)}, {"via_rho", to_json(through_triv)}, {"residual", residual}},
                  {{"max_residual", tol}});
    return report;
}

AffineFit fit_affine(const StochasticUtility& u, const StochasticUtility& u_tilde, const SigmaAlgebra& h,
                     const std::vector<double>& sample_points) {
    require_same_space(u.space(), h.space(), "fit_affine");
    require_same_space(u_tilde.space(), h.space(), "fit_affine");
    if (sample_points.size() < 2) fail(ErrorKind::ValidationError, "fit_affine needs at least two sample points");

    const int n = h.space().n();
    Eigen::VectorXd alpha(n), beta(n);
    double residual = 0.0;
    for (const auto& block : h.blocks()) {
        double sw = 0, swu = 0, swuu = 0, swv = 0, swuv = 0;
        for (int state : block) {
            const double w = h.space().prob(state);
            for (double t : sample_points) {
                const double uv = u.eval(t, state);
                const double vv = u_tilde.eval(t, state);
                sw += w;
                swu += w * uv;
                swuu += w * uv * uv;
                swv += w * vv;
                swuv += w * uv * vv;
            }
        }
        const double det = sw * swuu - swu * swu;
        if (std::abs(det) <= 1e-12 * sw * (1.0 + swuu)) {
            std::ostringstream msg;
            msg << "base utility is flat over the grid on block of state " << block.front();
            fail(ErrorKind::DegenerateFit, msg.str());
        }
        const double a = (sw * swuv - swu * swv) / det;
        const double b = (swv - a * swu) / sw;
        if (!(a > 1e-9)) {
            std::ostringstream msg;
            msg << "fitted slope " << a << " is not positive on block of state " << block.front();
            fail(ErrorKind::DegenerateFit, msg.str());
        }
        for (int state : block) {
            alpha(state) = a;
            beta(state) = b;
            for (double t : sample_points)
                residual = std::max(residual, std::abs(u_tilde.eval(t, state) - a * u.eval(t, state) - b));
        }
    }
    return AffineFit{RandomVariable(h.space(), std::move(alpha)), RandomVariable(h.space(), std::move(beta)),
                     residual};
}

const char* to_string(DiagonalClass c) {
    switch (c) {
        case DiagonalClass::Linear: return "Linear";
        case DiagonalClass::Entropic: return "Entropic";
        case DiagonalClass::Neither: return "Neither";
    }
    return "Neither";
}

Classification classify_diagonal(const Crm& rho, const std::vector<double>& grid, double tol) {
    if (grid.size() < 5) fail(ErrorKind::ValidationError, "classify_diagonal needs a denser grid");
    const double h = grid[1] - grid[0];
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (std::abs((grid[k] - grid[k - 1]) - h) > 1e-9)
            fail(ErrorKind::ValidationError, "classify_diagonal needs an equispaced grid");

    // The measure must be normalized on constants before its diagonal
    // utility is interpreted.
    for (double t : grid) {
        const RandomVariable ft = f_rho(rho, RandomVariable::constant(rho.space(), t));
        if ((ft.values().array() + t).abs().maxCoeff() > 1e-8)
            fail(ErrorKind::NotNormalized, "classify_diagonal: diagonal risk profile is not minus the identity");
    }

    const Utility* core = rho.core_utility();
    if (core == nullptr)
        fail(ErrorKind::NotNormalized, "classify_diagonal: measure has no certainty-equivalent core");

    Classification result;

    // cash-additivity and convexity of the diagonal risk profile
    {
        Rng rng(0xC1A551F1u);
        result.cash_additive = true;
        result.convex = true;
        auto eta = [&](const RandomVariable& f) {
            return eval(rho, RandomVector::diagonal(f, rho.dim()));
        };
        for (int rep = 0; rep < 12; ++rep) {
            const RandomVariable f = random_measurable_variable(rng, rho.domain(), -2.0, 2.0);
            const RandomVariable g = random_measurable_variable(rng, rho.domain(), -2.0, 2.0);
            const double m = rng.uniform(-2.0, 2.0);
            const double lam = rng.uniform(0.05, 0.95);
            const RandomVariable eta_f = eta(f);
            const Eigen::VectorXd shifted =
                eta(RandomVariable(rho.space(), f.values().array() + m)).values();
            if ((shifted - (eta_f.values().array() - m).matrix()).cwiseAbs().maxCoeff() > 1e-7)
                result.cash_additive = false;
            const RandomVariable mix(rho.space(), lam * f.values() + (1.0 - lam) * g.values());
            const Eigen::VectorXd convex_bound = lam * eta_f.values() + (1.0 - lam) * eta(g).values();
            if (((eta(mix).values() - convex_bound).array() > 1e-7).any()) result.convex = false;
        }
    }

    // diagonal utility samples
    const std::size_t m = grid.size();
    Eigen::VectorXd y(static_cast<int>(m));
    for (std::size_t k = 0; k < m; ++k) y(static_cast<int>(k)) = f_u(*core, grid[k]);

    // linear model by least squares
    {
        Eigen::MatrixXd design(static_cast<int>(m), 2);
        for (std::size_t k = 0; k < m; ++k) {
            design(static_cast<int>(k), 0) = grid[k];
            design(static_cast<int>(k), 1) = 1.0;
        }
        const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
        result.linear_residual = (y - design * coef).cwiseAbs().maxCoeff();
        if (result.linear_residual <= tol) {
            result.a = coef(0);
            result.b = coef(1);
        }
    }

    // entropic model from the log-regression of forward differences:
    // y(k+1) - y(k) = a e^{-beta x_k} (1 - e^{-beta h})
    {
        bool usable = true;
        Eigen::VectorXd logd(static_cast<int>(m) - 1);
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const double d = y(static_cast<int>(k) + 1) - y(static_cast<int>(k));
            if (!(d > 0.0)) usable = false;
            else logd(static_cast<int>(k)) = std::log(d);
        }
        result.entropic_residual = std::numeric_limits<double>::infinity();
        if (usable) {
            Eigen::MatrixXd design(static_cast<int>(m) - 1, 2);
            for (std::size_t k = 0; k + 1 < m; ++k) {
                design(static_cast<int>(k), 0) = grid[k];
                design(static_cast<int>(k), 1) = 1.0;
            }
            const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(logd);
            const double beta_hat = -coef(0);
            if (beta_hat > 1e-12) {
                const double c = std::exp(coef(1));
                const double a_hat = c / (1.0 - std::exp(-beta_hat * h));
                double b_acc = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    b_acc += y(static_cast<int>(k)) + a_hat * std::exp(-beta_hat * grid[k]);
                const double b_hat = b_acc / static_cast<double>(m);
                double res = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    res = std::max(res,
                                   std::abs(y(static_cast<int>(k)) - (-a_hat * std::exp(-beta_hat * grid[k]) + b_hat)));
                result.entropic_residual = res;
                if (res <= tol && result.linear_residual > tol) {
                    result.a = a_hat;
                    result.b = b_hat;
                    result.beta = beta_hat;
                }
            }
        }
    }

    const bool hypotheses = result.cash_additive && result.convex;
    if (hypotheses && result.linear_residual <= tol) {
        result.kind = DiagonalClass::Linear; // entropic converges to linear as beta -> 0
    } else if (hypotheses && result.entropic_residual <= tol) {
        result.kind = DiagonalClass::Entropic;
    } else {
        result.kind = DiagonalClass::Neither;
    }
    return result;
}

} // namespace mcrm
