#include <doctest.h>

#include <cmath>

#include "mcrm/rng.hpp"
#include "mcrm/utility.hpp"

using namespace mcrm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Eigen::RowVectorXd point(std::initializer_list<double> xs) {
    Eigen::RowVectorXd v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Utility cubic_like(int d) {
    std::vector<PiecewiseLinear> parts;
    for (int j = 0; j < d; ++j)
        parts.push_back(tabulate(-8.0, 8.0, 161, [](double t) { return t * t * t + t; }));
    return Utility::sum_of_univariate(std::move(parts));
}

} // namespace

TEST_CASE("utility evaluation") {
    const auto lin = Utility::linear_weighted(1.0, 0.0, vec({0.5, 0.5}));
    CHECK(eval_utility(lin, point({2, 4})) == doctest::Approx(3.0).epsilon(1e-12));

    const auto exp1 = Utility::exponential_weighted(1.0, 0.0, 1.0, vec({1.0}));
    CHECK(eval_utility(exp1, point({0})) == doctest::Approx(-1.0).epsilon(1e-12));

    const auto exp2 = Utility::exponential_weighted(1.0, 0.0, 1.0, vec({0.5, 0.5}));
    CHECK(eval_utility(exp2, point({std::log(4.0), std::log(4.0)})) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("diagonal values") {
    const auto lin = Utility::linear_weighted(1.0, 0.0, vec({0.2, 0.8}));
    for (double t : {-3.0, 0.0, 1.5}) CHECK(f_u(lin, t) == doctest::Approx(t).epsilon(1e-12));

    const auto exp2 = Utility::exponential_weighted(1.0, 0.0, 2.0, vec({1.0}));
    CHECK(f_u(exp2, 1.0) == doctest::Approx(-0.1353352832366127).epsilon(1e-12));

    std::vector<PiecewiseLinear> ids;
    for (int j = 0; j < 3; ++j) ids.push_back(PiecewiseLinear({-1.0, 1.0}, {-1.0, 1.0}));
    const auto sum3 = Utility::sum_of_univariate(std::move(ids));
    CHECK(f_u(sum3, 2.5) == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("diagonal inversion") {
    const auto lin = Utility::linear_weighted(1.0, 0.0, vec({0.5, 0.5}));
    CHECK(f_u_inverse(lin, 0.875) == doctest::Approx(0.875).epsilon(1e-12));

    const auto exp1 = Utility::exponential_weighted(1.0, 0.0, 1.0, vec({1.0}));
    CHECK(f_u_inverse(exp1, -0.5) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK_THROWS_AS(f_u_inverse(exp1, 0.5), Error); // range is (-inf, 0)

    // round trip on t in [-50, 50], all kinds
    const auto cub = cubic_like(2);
    Rng rng(555);
    for (int rep = 0; rep < 200; ++rep) {
        const double t = rng.uniform(-50.0, 50.0);
        CHECK(std::abs(f_u_inverse(lin, f_u(lin, t)) - t) <= 1e-9);
        CHECK(std::abs(f_u_inverse(exp1, f_u(exp1, t)) - t) <= 1e-8);
        CHECK(std::abs(f_u(cub, f_u_inverse(cub, f_u(cub, t))) - f_u(cub, t)) <= 1e-9);
    }
}

TEST_CASE("bisection agrees with the closed-form exponential inverse") {
    const auto pure = Utility::exponential_weighted(1.0, 0.0, 2.0, vec({0.5, 0.5}));
    const auto shifted = Utility::exponential_weighted(1.5, 0.25, 2.0, vec({0.5, 0.5}));
    Rng rng(808);
    for (int rep = 0; rep < 200; ++rep) {
        const double t = rng.uniform(-10.0, 10.0);
        CHECK(std::abs(f_u_inverse(pure, f_u(pure, t)) - f_u_inverse_bisect(pure, f_u(pure, t))) <= 1e-10);
        // away from the flat tail, where doubles still resolve the argument
        const double s = rng.uniform(-8.0, 1.0);
        CHECK(std::abs(f_u_inverse(shifted, f_u(shifted, s)) - f_u_inverse_bisect(shifted, f_u(shifted, s))) <= 1e-10);
    }
}

TEST_CASE("strict isotonicity by sampling") {
    const auto lin = Utility::linear_weighted(2.0, -1.0, vec({0.3, 0.7}));
    const auto expw = Utility::exponential_weighted(1.0, 0.5, 0.7, vec({0.6, 0.4}));
    const auto cub = cubic_like(2);
    Rng rng(1000);
    for (int rep = 0; rep < 1000; ++rep) {
        Eigen::RowVectorXd y(2), x(2);
        for (int j = 0; j < 2; ++j) {
            y(j) = rng.uniform(-5, 5);
            x(j) = y(j) + (rng.coin() ? rng.uniform(0.0, 2.0) : 0.0);
        }
        x(rng.index(2)) += rng.uniform(0.01, 1.0);
        for (const auto& u : {lin, expw, cub}) CHECK(eval_utility(u, x) > eval_utility(u, y));
    }
}

TEST_CASE("stochastic utility affine transforms") {
    const auto space = uniform_space(2);
    const auto base = StochasticUtility::identity(space);

    const auto unchanged =
        affine_transform(base, RandomVariable::constant(space, 1.0), RandomVariable::constant(space, 0.0));
    CHECK(unchanged.eval(0.7, 0) == doctest::Approx(0.7));
    CHECK(unchanged.eval(0.7, 1) == doctest::Approx(0.7));

    const auto scaled =
        affine_transform(base, RandomVariable::constant(space, 2.0), RandomVariable::constant(space, 1.0));
    CHECK(scaled.eval(3.0, 0) == doctest::Approx(7.0));
    CHECK(scaled.invert(7.0, 0) == doctest::Approx(3.0));

    const auto statewise = affine_transform(base, RandomVariable(space, vec({1.0, 2.0})),
                                            RandomVariable(space, vec({0.0, 0.0})));
    CHECK(statewise.eval(1.5, 0) == doctest::Approx(1.5));
    CHECK(statewise.eval(1.5, 1) == doctest::Approx(3.0));

    CHECK_THROWS_AS(
        affine_transform(base, RandomVariable(space, vec({1.0, 0.0})), RandomVariable::constant(space, 0.0)),
        Error);

    // composed affine wraps stay strictly isotone statewise
    const auto twice = affine_transform(scaled, RandomVariable(space, vec({3.0, 0.5})),
                                        RandomVariable(space, vec({-1.0, 2.0})));
    Rng rng(17);
    for (int rep = 0; rep < 1000; ++rep) {
        const double a = rng.uniform(-10, 10);
        const double b = a + rng.uniform(1e-6, 3.0);
        for (int state = 0; state < 2; ++state) CHECK(twice.eval(b, state) > twice.eval(a, state));
    }

    // diagonal-based stochastic utility inverts through the closed form
    const auto du = StochasticUtility::from_diagonal(space, Utility::exponential_weighted(1, 0, 1, vec({1.0})));
    const auto wrapped = affine_transform(du, RandomVariable(space, vec({2.0, 1.0})),
                                          RandomVariable(space, vec({0.5, -0.5})));
    for (int state = 0; state < 2; ++state) {
        const double y = wrapped.eval(1.25, state);
        CHECK(wrapped.invert(y, state) == doctest::Approx(1.25).epsilon(1e-9));
    }
}
