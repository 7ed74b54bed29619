#include <doctest.h>

#include <cmath>

#include "mcrm/crm.hpp"

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

} // namespace

TEST_CASE("entropic evaluation on a two-state space") {
    const auto space = uniform_space(2);
    const auto triv = SigmaAlgebra::trivial(space);
    const auto full = SigmaAlgebra::discrete(space);
    const auto rho = make_cert_equiv(entropic_utility(1.0, 1), OuterMap::negation(space), full, triv);

    const RandomVector x(space, vec({0.0, std::log(3.0)}));
    const auto r = eval(rho, x);
    CHECK(r(0) == doctest::Approx(-0.4054651081081644).epsilon(1e-12));
    CHECK(r(1) == doctest::Approx(-0.4054651081081644).epsilon(1e-12));
}

TEST_CASE("linear certainty equivalent is minus the conditional mean") {
    const auto space = new_space(vec({0.1, 0.4, 0.2, 0.3}));
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);
    const auto rho = make_cert_equiv(mean_utility(2), OuterMap::negation(space), full, g);
    Rng rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        const auto x = random_vector(rng, space, 2);
        const auto r = eval(rho, x);
        const auto mean = cond_expectation(
            RandomVariable(space, 0.5 * (x.values().col(0) + x.values().col(1))), g);
        CHECK((r.values() + mean.values()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("diagonal evaluation matches the definition and the outer map") {
    const auto space = uniform_space(4);
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);
    const auto outer = OuterMap::affine_neg(space, 2.0, 1.0);
    const auto rho = make_cert_equiv(entropic_utility(1.0, 3), outer, full, g);

    Rng rng(77);
    for (int rep = 0; rep < 25; ++rep) {
        const auto alpha = random_measurable_variable(rng, g);
        // a diagonal position evaluates through f_rho by definition
        const auto lhs = eval(rho, RandomVector::diagonal(alpha, 3));
        const auto rhs = f_rho(rho, alpha);
        CHECK((lhs.values() - rhs.values()).cwiseAbs().maxCoeff() == 0.0);
        // and the diagonal profile is exactly the outer map
        CHECK((rhs.values() - outer.eval(alpha).values()).cwiseAbs().maxCoeff() <= 1e-9);
    }

    // a G-measurable diagonal input is f_rho(alpha): eval(alpha 1_d) = -2 alpha + 1
    const auto alpha = RandomVariable(space, vec({1.0, 1.0, -2.0, -2.0}));
    const auto r = f_rho(rho, alpha);
    CHECK(r(0) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(r(3) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("eval validates inputs") {
    const auto space = uniform_space(4);
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto rho = make_cert_equiv(mean_utility(2), OuterMap::negation(space), g, g);
    Rng rng(5);
    CHECK_THROWS_AS(eval(rho, random_vector(rng, space, 3)), Error); // wrong dimension
    bool threw = false;
    for (int rep = 0; rep < 5 && !threw; ++rep) {
        try {
            eval(rho, random_vector(rng, space, 2)); // generic X not g-measurable
        } catch (const Error& e) {
            threw = e.kind() == ErrorKind::NotMeasurable;
        }
    }
    CHECK(threw);
    CHECK_THROWS_AS(make_cert_equiv(mean_utility(2), OuterMap::negation(space), g, SigmaAlgebra::discrete(space)),
                    Error); // target not contained in domain
}

TEST_CASE("f_rho_inverse inverts the diagonal blockwise") {
    const auto space = new_space(vec({0.15, 0.35, 0.3, 0.2}));
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);

    const auto neg = make_cert_equiv(entropic_utility(2.0, 2), OuterMap::negation(space), full, g);
    const auto aff = make_cert_equiv(entropic_utility(1.0, 2), OuterMap::affine_neg(space, 2.0, 1.0), full, g);

    Rng rng(99);
    for (int rep = 0; rep < 25; ++rep) {
        const auto alpha = random_measurable_variable(rng, g);
        for (const auto& rho : {neg, aff}) {
            const auto beta = f_rho(rho, alpha);
            const auto back = f_rho_inverse(rho, beta);
            CHECK((back.values() - alpha.values()).cwiseAbs().maxCoeff() <= 1e-8);
            const auto forward = f_rho(rho, back);
            CHECK((forward.values() - beta.values()).cwiseAbs().maxCoeff() <= 1e-9);
        }
        // affine outer: f_rho(t) = -2t + 1, so the inverse is (1 - beta) / 2
        const auto beta = random_measurable_variable(rng, g);
        const auto inv = f_rho_inverse(aff, beta);
        CHECK((inv.values() - (1.0 - beta.values().array()).matrix() / 2.0).cwiseAbs().maxCoeff() <= 1e-9);
    }

    // image identity: the inverse accepts every attained risk level
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_vector(rng, space, 2);
        const auto alpha = f_rho_inverse(neg, eval(neg, x));
        CHECK(is_measurable(alpha, g));
    }

    // unattainable target on a constant evaluator
    const auto broken = make_constant_zero(full, g, 2);
    CHECK_THROWS_AS(f_rho_inverse(broken, RandomVariable::constant(space, 0.5)), Error);
    const auto ok = f_rho_inverse(broken, RandomVariable::constant(space, 0.0));
    CHECK(ok.n() == 4);
}

TEST_CASE("conditioning on the own algebra leaves only the aggregation") {
    const auto space = new_space(vec({0.2, 0.3, 0.1, 0.4}));
    const auto g = SigmaAlgebra(space, {{0, 2}, {1, 3}});
    const auto u = Utility::exponential_weighted(1.0, 0.0, 2.0, vec({0.25, 0.75}));
    const auto rho = make_cert_equiv(u, OuterMap::negation(space), g, g);
    Rng rng(808);
    for (int rep = 0; rep < 30; ++rep) {
        const auto x = random_measurable_vector(rng, g, 2);
        const auto r = eval(rho, x);
        for (int state = 0; state < 4; ++state)
            CHECK(r(state) == doctest::Approx(-f_u_inverse(u, eval_utility(u, x.row(state)))).epsilon(1e-10));
    }
}

TEST_CASE("the diagonal profile and its inverse inherit antitonicity and locality") {
    const auto space = new_space(vec({0.15, 0.35, 0.3, 0.2}));
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);
    const auto rho = make_cert_equiv(Utility::exponential_weighted(1.0, 0.0, 1.0, vec({0.5, 0.5})),
                                     OuterMap::affine_neg(space, 1.5, 0.75), full, g);
    Rng rng(909);
    for (int rep = 0; rep < 60; ++rep) {
        // strict antitonicity of the diagonal profile
        const auto low = random_measurable_variable(rng, g);
        Eigen::VectorXd bump(4);
        const double b0 = rng.coin() ? rng.uniform(0.0, 2.0) : 0.0;
        double b1 = rng.coin() ? rng.uniform(0.0, 2.0) : 0.0;
        if (b0 == 0.0 && b1 == 0.0) b1 = 1.0;
        bump << b0, b0, b1, b1;
        const RandomVariable high(space, low.values() + bump);
        const auto f_low = f_rho(rho, low);
        const auto f_high = f_rho(rho, high);
        CHECK((f_high.values().array() <= f_low.values().array() + 1e-12).all());
        CHECK((f_high.values().array() < f_low.values().array() - 1e-12).any());
        // and of the inverse (reversing through the image)
        const auto back_low = f_rho_inverse(rho, f_low);
        const auto back_high = f_rho_inverse(rho, f_high);
        CHECK((back_high.values().array() >= back_low.values().array() - 1e-9).all());

        // locality across a union of target blocks
        const auto other = random_measurable_variable(rng, g);
        Eigen::VectorXd mixed(4), f_mixed_expected(4);
        const bool first_in = rng.coin();
        for (int state = 0; state < 4; ++state) {
            const bool in_a = (g.block_of(state) == 0) ? first_in : !first_in;
            mixed(state) = in_a ? low(state) : other(state);
            f_mixed_expected(state) = in_a ? f_low(state) : f_rho(rho, other)(state);
        }
        const auto f_mixed = f_rho(rho, RandomVariable(space, mixed));
        CHECK((f_mixed.values() - f_mixed_expected).cwiseAbs().maxCoeff() <= 1e-9);
        const auto inv_mixed = f_rho_inverse(rho, RandomVariable(space, f_mixed_expected));
        CHECK((inv_mixed.values() - mixed).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("normalization") {
    const auto space = uniform_space(4);
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);
    const auto u = entropic_utility(1.5, 2);
    const auto rho = make_cert_equiv(u, OuterMap::affine_neg(space, 2.0, 1.0), full, g);
    const auto bar = normalize(rho);

    Rng rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const auto alpha = random_measurable_variable(rng, g);
        const auto diag = f_rho(bar, alpha);
        CHECK((diag.values() + alpha.values()).cwiseAbs().maxCoeff() <= 1e-8);
    }

    // normalized evaluation is minus the conditional certainty equivalent
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = random_vector(rng, space, 2);
        const auto lhs = eval(bar, x);
        const auto ce = apply_f_u_inverse(u, cond_expectation(apply_utility(u, x), g));
        CHECK((lhs.values() + ce.values()).cwiseAbs().maxCoeff() <= 1e-8);
    }

    // idempotence within tolerance
    const auto bar2 = normalize(bar);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = random_vector(rng, space, 2);
        CHECK((eval(bar2, x).values() - eval(bar, x).values()).cwiseAbs().maxCoeff() <= 1e-8);
    }

    // an already-normalized measure is unchanged
    const auto plain = make_cert_equiv(u, OuterMap::negation(space), full, g);
    const auto plain_bar = normalize(plain);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = random_vector(rng, space, 2);
        CHECK((eval(plain_bar, x).values() - eval(plain, x).values()).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("axiom checkers on positive and negative controls") {
    const auto space = uniform_space(4);
    const auto g = SigmaAlgebra(space, {{0, 1}, {2, 3}});
    const auto full = SigmaAlgebra::discrete(space);

    const auto entropic = make_cert_equiv(entropic_utility(1.0, 2), OuterMap::negation(space), full, g);
    const auto linear = make_cert_equiv(mean_utility(2), OuterMap::negation(space), full, g);

    CHECK(check_strict_antitonicity(entropic, 100, 11).passed());
    CHECK(check_strict_antitonicity(linear, 100, 12).passed());
    CHECK_FALSE(check_strict_antitonicity(make_constant_zero(full, g, 2), 50, 13).passed());

    CHECK(check_locality(entropic, 100, 14).passed());
    CHECK(check_locality(linear, 100, 15).passed());

    CHECK(check_cond_law_invariance(entropic, 100, 16).passed());
    const auto state_weighted = make_state_weighted(full, 2, vec({0, 1, 2, 3}));
    const auto law_report = check_cond_law_invariance(state_weighted, 100, 17);
    CHECK_FALSE(law_report.passed());

    // one-state blocks admit only trivial permutations: every trial skips
    const auto skew = new_space(vec({0.1, 0.2, 0.3, 0.4}));
    const auto skew_rho = make_cert_equiv(mean_utility(1), OuterMap::negation(skew),
                                          SigmaAlgebra::discrete(skew), SigmaAlgebra::trivial(skew));
    const auto skipped = check_cond_law_invariance(skew_rho, 20, 18);
    CHECK(skipped.passed());
    CHECK(skipped.skipped == 20);
}

TEST_CASE("reports serialize with witnesses") {
    const auto space = uniform_space(2);
    const auto full = SigmaAlgebra::discrete(space);
    const auto bad = make_constant_zero(full, SigmaAlgebra::trivial(space), 1);
    const auto report = check_strict_antitonicity(bad, 10, 3);
    CHECK_FALSE(report.passed());
    const auto j = report.to_json();
    CHECK(j["check_name"] == "strict_antitonicity");
    CHECK(j["trials"] == 10);
    CHECK(j["failures"].size() == report.failures.size());
    CHECK(j["failures"][0].contains("witness"));
    const auto round = check_report_from_json(j);
    CHECK(round.to_json() == j);
}
