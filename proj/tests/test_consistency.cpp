#include <doctest.h>

#include <cmath>

#include "mcrm/consistency.hpp"

using namespace mcrm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Utility entropic_utility(double beta, int d) {
    return Utility::exponential_weighted(1.0, 0.0, beta, Eigen::VectorXd::Constant(d, 1.0 / d));
}

Utility mean_utility(int d) {
    return Utility::linear_weighted(1.0, 0.0, Eigen::VectorXd::Constant(d, 1.0 / d));
}

/// Utility whose extracted aggregation genuinely depends on beta:
/// a sum of exponential component utilities (tabulated).
Utility sum_exp_utility(double beta, int d) {
    std::vector<PiecewiseLinear> parts;
    for (int j = 0; j < d; ++j)
        parts.push_back(tabulate(-9.0, 9.0, 361, [beta, d](double t) { return -std::exp(-beta * t) / d; }));
    return Utility::sum_of_univariate(std::move(parts));
}

struct Fixture {
    FiniteProbSpace space = uniform_space(4);
    SigmaAlgebra triv = SigmaAlgebra::trivial(space);
    SigmaAlgebra mid = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    SigmaAlgebra full = SigmaAlgebra::discrete(space);
};

} // namespace

TEST_CASE("recursion holds for shared-utility pairs and fails across rates") {
    Fixture fx;
    const auto u1 = entropic_utility(1.0, 2);
    const auto u2 = entropic_utility(2.0, 2);

    const auto rho_g1 = make_cert_equiv(u1, OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_h1 = make_cert_equiv(u1, OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto rho_h1_outer = make_cert_equiv(u1, OuterMap::affine_neg(fx.space, 3.0, -0.5), fx.full, fx.mid);
    const auto rho_h2 = make_cert_equiv(u2, OuterMap::negation(fx.space), fx.full, fx.mid);

    const auto pass = check_consistency_recursive(rho_g1, rho_h1, 100, 41, 1e-8);
    CHECK(pass.passed());
    CHECK(pass.max_residual <= 1e-8);

    // the outer map of the fine measure cancels inside the recursion
    CHECK(check_consistency_recursive(rho_g1, rho_h1_outer, 100, 42, 1e-8).passed());

    const auto fail_report = check_consistency_recursive(rho_g1, rho_h2, 100, 43, 1e-8);
    CHECK_FALSE(fail_report.passed());
    CHECK(fail_report.failures.size() >= 1);

    CHECK_THROWS_AS(check_consistency_recursive(rho_h1, rho_g1, 10, 1, 1e-8), Error); // targets reversed
}

TEST_CASE("definitional check agrees with the recursion check on catalog pairs") {
    Fixture fx;
    const auto u1 = entropic_utility(1.0, 2);
    const auto u2 = entropic_utility(2.0, 2);
    const auto rho_g1 = make_cert_equiv(u1, OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_h1 = make_cert_equiv(u1, OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto rho_g2 = make_cert_equiv(u2, OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_h2 = make_cert_equiv(u2, OuterMap::negation(fx.space), fx.full, fx.mid);

    struct Pair {
        const Crm* g;
        const Crm* h;
    };
    const Pair pairs[] = {{&rho_g1, &rho_h1}, {&rho_g2, &rho_h2}, {&rho_g1, &rho_h2}, {&rho_g2, &rho_h1}};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto rec = check_consistency_recursive(*pairs[k].g, *pairs[k].h, 100, 50 + k, 1e-8);
        const auto def = check_consistency_definitional(*pairs[k].g, *pairs[k].h, 100, 60 + k, 1e-8);
        CHECK(rec.passed() == def.passed()); // the two formulations agree pair by pair
        if (!rec.passed()) CHECK(def.failures.size() >= 1);
    }
}

TEST_CASE("a coarse measure pins down the normalized fine measure") {
    Fixture fx;
    const auto u = entropic_utility(1.3, 2);
    const auto rho_g = make_cert_equiv(u, OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_h_a = make_cert_equiv(u, OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto rho_h_b = make_cert_equiv(u, OuterMap::affine_neg(fx.space, 2.0, 1.0), fx.full, fx.mid);

    REQUIRE(check_consistency_recursive(rho_g, rho_h_a, 50, 70, 1e-8).passed());
    REQUIRE(check_consistency_recursive(rho_g, rho_h_b, 50, 71, 1e-8).passed());

    Rng rng(72);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = random_vector(rng, fx.space, 2);
        const auto norm_a = f_rho_inverse(rho_h_a, eval(rho_h_a, x));
        const auto norm_b = f_rho_inverse(rho_h_b, eval(rho_h_b, x));
        CHECK((norm_a.values() - norm_b.values()).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("extracted aggregation of a plain certainty equivalent") {
    Fixture fx;
    const auto u = Utility::exponential_weighted(1.0, 0.0, 1.3, vec({0.4, 0.6}));
    const auto rho = make_cert_equiv(u, OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto dec = extract_decomposition(rho);
    CHECK_FALSE(dec.warning());

    Rng rng(73);
    for (int rep = 0; rep < 50; ++rep) {
        const auto x = random_vector(rng, fx.space, 2);
        // aggregation is the diagonal certainty equivalent of the row:
        // for this utility kind that is the weighted mean of coordinates
        const auto lam = dec.lambda(x);
        const Eigen::VectorXd expected = 0.4 * x.values().col(0) + 0.6 * x.values().col(1);
        CHECK((lam.values() - expected).cwiseAbs().maxCoeff() <= 1e-9);

        // eta is the univariate certainty equivalent of the diagonal utility
        const auto f = RandomVariable(fx.space, Eigen::VectorXd(x.values().col(0)));
        const Eigen::VectorXd eta_expected =
            -apply_f_u_inverse(u, cond_expectation(apply_f_u(u, f), fx.mid)).values();
        CHECK((dec.eta(f).values() - eta_expected).cwiseAbs().maxCoeff() <= 1e-8);
    }

    CHECK(verify_decomposition(rho, dec, 60, 74, 1e-8).passed());

    // a decomposition extracted from a different measure is rejected
    const auto other = make_cert_equiv(entropic_utility(0.4, 2), OuterMap::negation(fx.space), fx.full, fx.mid);
    CHECK_FALSE(verify_decomposition(rho, extract_decomposition(other), 60, 75, 1e-8).passed());
}

TEST_CASE("risk-antitonicity: certainty equivalents pass, mixed utilities fail") {
    Fixture fx;
    const auto rho = make_cert_equiv(entropic_utility(1.0, 2), OuterMap::negation(fx.space), fx.full, fx.mid);
    CHECK(check_risk_antitonicity(rho, 80, 80).passed());

    const auto mixed = make_mixed_utility(
        fx.full, fx.triv, fx.mid,
        {Utility::linear_weighted(1.0, 0.0, vec({0.9, 0.1})), Utility::linear_weighted(1.0, 0.0, vec({0.1, 0.9}))});

    // hand witness: equal realized risks, strictly ordered measured risks
    Eigen::MatrixXd xv(4, 2), yv(4, 2);
    xv << 1, 0, 1, 0, 0, 1, 0, 1;
    yv << 0, 1, 0, 1, 1, 0, 1, 0;
    const RandomVector xw(fx.space, xv), yw(fx.space, yv);
    for (int state = 0; state < 4; ++state)
        CHECK(realized_risk(mixed, xw.row(state), state) ==
              doctest::Approx(realized_risk(mixed, yw.row(state), state)).epsilon(1e-12));
    CHECK(eval(mixed, xw)(0) == doctest::Approx(-0.9).epsilon(1e-12));
    CHECK(eval(mixed, yw)(0) == doctest::Approx(-0.1).epsilon(1e-12));

    const auto report = check_risk_antitonicity(mixed, 80, 81);
    CHECK_FALSE(report.passed());
    CHECK(report.failures.size() >= 1);
}

TEST_CASE("three-way equivalence on the catalog and its negative control") {
    Fixture fx;
    std::vector<Crm> catalog;
    catalog.push_back(make_cert_equiv(entropic_utility(1.0, 2), OuterMap::negation(fx.space), fx.full, fx.mid));
    catalog.push_back(make_cert_equiv(mean_utility(2), OuterMap::affine_neg(fx.space, 2.0, 0.5), fx.full, fx.triv));
    catalog.push_back(make_cert_equiv(sum_exp_utility(1.0, 2), OuterMap::negation(fx.space), fx.full, fx.mid));

    int seed = 90;
    for (const auto& rho : catalog) {
        CHECK(check_risk_antitonicity(rho, 60, seed++).passed());
        const auto dec = extract_decomposition(rho);
        CHECK(verify_decomposition(rho, dec, 60, seed++, 1e-8).passed());
        CHECK(check_consistency_recursive(rho, diagonal_realization(rho), 60, seed++, 1e-8).passed());
    }

    const auto mixed = make_mixed_utility(
        fx.full, fx.triv, fx.mid,
        {Utility::linear_weighted(1.0, 0.0, vec({0.9, 0.1})), Utility::linear_weighted(1.0, 0.0, vec({0.1, 0.9}))});
    CHECK_FALSE(check_risk_antitonicity(mixed, 60, 97).passed());
    const auto dec = extract_decomposition(mixed, 60, 98);
    CHECK(dec.warning());
    CHECK_FALSE(verify_decomposition(mixed, dec, 60, 98, 1e-8).passed());
    CHECK_FALSE(check_consistency_recursive(mixed, diagonal_realization(mixed), 60, 99, 1e-8).passed());
}

TEST_CASE("aggregation consistency across information levels") {
    Fixture fx;
    const auto u = entropic_utility(1.0, 2);
    const auto rho_g = make_cert_equiv(u, OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_f = make_cert_equiv(u, OuterMap::negation(fx.space), fx.full, fx.full);
    const auto dec_g = extract_decomposition(rho_g);
    const auto dec_f = extract_decomposition(rho_f);
    CHECK(check_aggregation_consistency(dec_g, dec_f, 60, 100, 1e-8).passed());

    // different weighted means disagree already on the cash identity
    const auto rho_w = make_cert_equiv(Utility::linear_weighted(1.0, 0.0, vec({0.8, 0.2})),
                                       OuterMap::negation(fx.space), fx.full, fx.full);
    CHECK_FALSE(check_aggregation_consistency(dec_g, extract_decomposition(rho_w), 60, 101, 1e-8).passed());

    // summed exponential utilities aggregate differently per rate
    const auto rho_s1 = make_cert_equiv(sum_exp_utility(1.0, 2), OuterMap::negation(fx.space), fx.full, fx.triv);
    const auto rho_s2 = make_cert_equiv(sum_exp_utility(2.0, 2), OuterMap::negation(fx.space), fx.full, fx.full);
    CHECK_FALSE(
        check_aggregation_consistency(extract_decomposition(rho_s1), extract_decomposition(rho_s2), 60, 102, 1e-8)
            .passed());

    // diagonal positions agree exactly under both aggregations
    Rng rng(103);
    for (int rep = 0; rep < 20; ++rep) {
        const auto alpha = random_measurable_variable(rng, fx.full);
        const auto diag = RandomVector::diagonal(alpha, 2);
        const auto cash_g = dec_g.f_lambda_inverse(dec_g.lambda(diag));
        const auto cash_f = dec_f.f_lambda_inverse(dec_f.lambda(diag));
        CHECK((cash_g.values() - alpha.values()).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((cash_f.values() - alpha.values()).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("independent positions give the same cash level at both resolutions") {
    const auto factor1 = new_space(vec({0.2, 0.3, 0.1, 0.4}));
    const auto factor2 = new_space(vec({0.25, 0.25, 0.25, 0.25}));
    const auto prod = product_space(factor1, factor2);
    const auto full = SigmaAlgebra::discrete(prod.space);
    const auto u = entropic_utility(0.8, 2);
    const auto rho = make_cert_equiv(u, OuterMap::negation(prod.space), full, SigmaAlgebra::trivial(prod.space));
    const auto rho_h = make_cert_equiv(u, OuterMap::negation(prod.space), full, prod.factor1);

    Rng rng(110);
    for (int rep = 0; rep < 25; ++rep) {
        const auto x2 = random_vector(rng, factor2, 2);
        const auto x = prod.lift_factor2(x2);
        const auto report = check_lemma_independent_constant(rho, rho_h, x, 1e-8);
        CHECK(report.passed());
    }

    // constant positions are independent of everything
    const auto c = RandomVector::constant_rows(prod.space, Eigen::RowVectorXd::Constant(2, 1.75));
    CHECK(check_lemma_independent_constant(rho, rho_h, c, 1e-8).passed());

    // positions built from factor one are rejected
    const auto x1 = prod.lift_factor1(random_vector(rng, factor1, 2));
    CHECK_THROWS_AS(check_lemma_independent_constant(rho, rho_h, x1, 1e-8), Error);
}

TEST_CASE("affine fits recover injected transformations") {
    const auto space = new_space(vec({0.1, 0.2, 0.3, 0.4}));
    const auto full = SigmaAlgebra::discrete(space);
    const auto mid = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto base = StochasticUtility::identity(space);
    std::vector<double> grid;
    for (double t = -2.0; t <= 2.0 + 1e-9; t += 0.2) grid.push_back(t);

    const auto tilde = affine_transform(base, RandomVariable::constant(space, 2.0),
                                        RandomVariable(space, vec({1.0, -1.0, 0.5, 2.0})));
    const auto fit = fit_affine(base, tilde, full, grid);
    CHECK(fit.residual <= 1e-8);
    CHECK((fit.alpha.values().array() - 2.0).abs().maxCoeff() <= 1e-6);
    CHECK((fit.beta.values() - vec({1.0, -1.0, 0.5, 2.0})).cwiseAbs().maxCoeff() <= 1e-6);

    const auto self = fit_affine(base, base, full, grid);
    CHECK((self.alpha.values().array() - 1.0).abs().maxCoeff() <= 1e-9);
    CHECK(self.beta.values().cwiseAbs().maxCoeff() <= 1e-9);

    // the coarse fit keeps the slope and projects the intercept
    const auto coarse = fit_affine(base, tilde, mid, grid);
    CHECK((coarse.alpha.values().array() - 2.0).abs().maxCoeff() <= 1e-6);
    const auto projected = cond_expectation(fit.beta, mid);
    CHECK((coarse.beta.values() - projected.values()).cwiseAbs().maxCoeff() <= 1e-8);

    // a cubic perturbation is not an affine transform
    std::vector<PiecewiseLinear> cubes;
    for (int i = 0; i < 4; ++i)
        cubes.push_back(tabulate(-2.0, 2.0, static_cast<int>(grid.size()), [](double t) { return t * t * t; }));
    const auto cubic = StochasticUtility::from_tables(space, std::move(cubes));
    const auto reject = fit_affine(base, cubic, full, grid);
    CHECK(reject.residual > 0.1);

    // flat base over the grid cannot be fitted
    std::vector<PiecewiseLinear> flats;
    for (int i = 0; i < 4; ++i) flats.push_back(PiecewiseLinear({-1e6, 1e6}, {-1e-3, 1e-3}));
    const auto nearly_flat = StochasticUtility::from_tables(space, std::move(flats));
    CHECK_THROWS_AS(fit_affine(nearly_flat, tilde, full, grid), Error);
}

TEST_CASE("diagonal classifier") {
    Fixture fx;
    std::vector<double> grid;
    for (int k = 0; k < 41; ++k) grid.push_back(-5.0 + 0.25 * k);

    const auto entropic = make_cert_equiv(Utility::exponential_weighted(1.7, 0.3, 1.25, vec({0.5, 0.5})),
                                          OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto c1 = classify_diagonal(entropic, grid, 1e-6);
    CHECK(c1.kind == DiagonalClass::Entropic);
    CHECK(std::abs(c1.beta - 1.25) <= 1e-6);
    CHECK(std::abs(c1.a - 1.7) <= 1e-5);
    CHECK(std::abs(c1.b - 0.3) <= 1e-5);
    CHECK(c1.cash_additive);
    CHECK(c1.convex);

    const auto linear = make_cert_equiv(Utility::linear_weighted(2.0, -0.5, vec({0.3, 0.7})),
                                        OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto c2 = classify_diagonal(linear, grid, 1e-6);
    CHECK(c2.kind == DiagonalClass::Linear);
    CHECK(std::abs(c2.a - 2.0) <= 1e-8);
    CHECK(std::abs(c2.b + 0.5) <= 1e-8);

    std::vector<PiecewiseLinear> cubic_parts;
    cubic_parts.push_back(tabulate(-8.0, 8.0, 321, [](double t) { return t * t * t + t; }));
    const auto cubic = make_cert_equiv(Utility::sum_of_univariate(std::move(cubic_parts)),
                                       OuterMap::negation(fx.space), fx.full, fx.mid);
    const auto c3 = classify_diagonal(cubic, grid, 1e-6);
    CHECK(c3.kind == DiagonalClass::Neither);

    const auto shifted = make_cert_equiv(entropic_utility(1.0, 2), OuterMap::affine_neg(fx.space, 2.0, 1.0),
                                         fx.full, fx.mid);
    CHECK_THROWS_AS(classify_diagonal(shifted, grid, 1e-6), Error);
    const auto renormalized = classify_diagonal(normalize(shifted), grid, 1e-6);
    CHECK(renormalized.kind == DiagonalClass::Entropic);
    CHECK(std::abs(renormalized.beta - 1.0) <= 1e-6);
}
