#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "rgexpect/montecarlo.hpp"

using namespace rgexpect;

TEST_CASE("constant payoff has zero spread") {
    TimeGrid g(1.0, 6);
    auto pol = constant_policy(g, 2.0);
    auto est = simulate(pol, constant_payoff(3.25), 5000, 7, McModel::binomial);
    CHECK(est.mean == 3.25);
    CHECK(est.std_error == 0.0);
    CHECK(est.violations == 0);
}

TEST_CASE("same seed, same estimate") {
    TimeGrid g(1.0, 8);
    auto pol = constant_policy(g, 1.5);
    auto xi = terminal_square(max_abs_state(g, 4.0));
    auto a = simulate(pol, xi, 20000, 42, McModel::binomial);
    auto b = simulate(pol, xi, 20000, 42, McModel::binomial);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    auto c = simulate(pol, xi, 20000, 43, McModel::binomial);
    CHECK(a.mean != c.mean);
}

TEST_CASE("binomial mean matches the exact policy value") {
    TimeGrid g(1.0, 8);
    auto pol = constant_policy(g, 1.0);
    auto xi = terminal_square(max_abs_state(g, 4.0));
    // exact value is 1.0 (variance telescopes)
    auto est = simulate(pol, xi, 100000, 11, McModel::binomial);
    CHECK(std::abs(est.mean - 1.0) <= 3.0 * est.std_error);
}

TEST_CASE("stratified enumeration reproduces policy_value bit for bit") {
    TimeGrid g(1.0, 10);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto dom = testutil::random_domain(seed);
        auto xi = testutil::random_uc_payoff(seed, g, dom.max_hi());
        auto pol = make_feedback_policy(g, [&](int k, std::span<const double> pre) {
            const auto iv = dom.at(k, pre);
            return iv.lo + 0.5 * (iv.hi - iv.lo);
        });
        admissibility_margin(pol, dom);
        auto est = stratified_expectation(pol, xi);
        CHECK(est.mean == policy_value(pol, xi));
        CHECK(est.n == (std::uint64_t{1} << 10));
    }
}

TEST_CASE("gaussian model reproduces the heat-kernel integral") {
    // alpha = 1 constant, payoff cos(x_T): limit value exp(-T/2) by quadrature
    TimeGrid g(1.0, 16);
    auto pol = constant_policy(g, 1.0);
    auto est = simulate(pol, terminal_cos(), 200000, 5, McModel::gaussian);
    CHECK(std::abs(est.mean - std::exp(-0.5)) <= 3.0 * est.std_error + 1e-3);
}

TEST_CASE("feedback simulation counts band violations") {
    TimeGrid g(1.0, 6);
    auto dom = DomainProcess::constant(1.0, 4.0);
    auto inside = simulate_feedback([](int, double) { return 2.0; }, dom, terminal_cos(), g,
                                    2000, 3, McModel::binomial);
    CHECK(inside.violations == 0);
    auto outside = simulate_feedback([](int, double x) { return x > 0.0 ? 5.0 : 2.0; }, dom,
                                     terminal_cos(), g, 2000, 3, McModel::binomial);
    CHECK(outside.violations > 0);
}

TEST_CASE("lower bound check brackets the root value") {
    TimeGrid g(1.0, 8);
    auto dom = DomainProcess::constant(1.0, 4.0);
    auto xi = terminal_square(max_abs_state(g, 4.0));
    auto result = solve(xi, dom, g, 0.0, 2);
    CHECK(result.field.root() == doctest::Approx(4.0).epsilon(1e-12));
    auto rep = lower_bound_check(result, xi, 50000, 17);
    CHECK(rep.within_band);
    // a suboptimal policy sits strictly below the worst case
    auto pol = constant_policy(g, 2.0);
    admissibility_margin(pol, dom);
    auto est = simulate(pol, xi, 50000, 17, McModel::binomial);
    CHECK(est.mean < 4.0);
    CHECK(std::abs(est.mean - 2.0) <= 3.0 * est.std_error);
}

TEST_CASE("dominance tail bound over many seeds") {
    TimeGrid g(1.0, 6);
    auto dom = DomainProcess::constant(1.0, 4.0);
    auto xi = terminal_square(max_abs_state(g, 4.0));
    auto result = solve(xi, dom, g, 0.0, 2);
    int above = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto est = simulate(result.optimal.policy, xi, 4000, seed, McModel::binomial);
        if (est.mean > result.field.root() + 3.0 * est.std_error) ++above;
    }
    CHECK(above <= 1);
}

TEST_CASE("sample count validation") {
    TimeGrid g(1.0, 4);
    auto pol = constant_policy(g, 1.0);
    CHECK_THROWS_AS(simulate(pol, constant_payoff(1.0), 0, 1, McModel::binomial), ArgumentError);
}
