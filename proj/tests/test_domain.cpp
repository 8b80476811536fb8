#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "rgexpect/domain.hpp"

using namespace rgexpect;

TEST_CASE("delta_interior") {
    VolatilityInterval iv(1.0, 4.0);
    auto r = delta_interior(iv, 0.5);
    REQUIRE(r.has_value());
    CHECK(r->lo == 1.5);
    CHECK(r->hi == 3.5);
    auto full = delta_interior(iv, 0.0);
    REQUIRE(full.has_value());
    CHECK(full->lo == 1.0);
    CHECK(full->hi == 4.0);
    CHECK(!delta_interior(iv, 2.0).has_value());
    CHECK_THROWS_AS(delta_interior(iv, -0.1), ArgumentError);
}

TEST_CASE("delta_interior monotone in delta") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const double lo = rng::uniform(rng::stream(seed, 1), 0.0, 2.0);
        const double hi = lo + rng::uniform(rng::stream(seed, 2), 0.5, 3.0);
        const double d1 = rng::uniform(rng::stream(seed, 3), 0.0, 1.0);
        const double d2 = d1 + rng::uniform(rng::stream(seed, 4), 0.0, 1.0);
        VolatilityInterval iv(lo, hi);
        auto a = delta_interior(iv, d1);
        auto b = delta_interior(iv, d2);
        if (b.has_value()) {
            REQUIRE(a.has_value());
            CHECK(a->lo <= b->lo);
            CHECK(b->hi <= a->hi);
        }
    }
}

TEST_CASE("interval invariants") {
    CHECK_THROWS_AS(VolatilityInterval(-0.1, 1.0), ArgumentError);
    CHECK_THROWS_AS(VolatilityInterval(2.0, 2.0), ArgumentError);
    CHECK_THROWS_AS(VolatilityInterval(3.0, 2.0), ArgumentError);
}

TEST_CASE("admissibility margins on a constant band") {
    TimeGrid g(1.0, 3);
    auto dom = DomainProcess::constant(1.0, 4.0);

    auto p2 = constant_policy(g, 2.0);
    auto r2 = admissibility_margin(p2, dom);
    CHECK(r2.margin == doctest::Approx(1.0));
    CHECK(r2.deg == doctest::Approx(0.5));
    CHECK(r2.admissible);
    CHECK(p2.margin_known);

    auto p1 = constant_policy(g, 1.0); // on the boundary
    auto r1 = admissibility_margin(p1, dom);
    CHECK(r1.margin == doctest::Approx(0.0));
    CHECK_FALSE(r1.admissible);
    CHECK(r1.deg == 0.0);
    CHECK(r1.bad_level >= 0);

    auto p25 = constant_policy(g, 2.5);
    auto r25 = admissibility_margin(p25, dom);
    CHECK(r25.margin == doctest::Approx(1.5));
    CHECK(r25.deg == doctest::Approx(0.75));

    auto pout = constant_policy(g, 5.0);
    auto rout = admissibility_margin(pout, dom);
    CHECK(rout.margin < 0.0);
    CHECK_FALSE(rout.admissible);
}

TEST_CASE("interval domain moduli") {
    SUBCASE("constant band") {
        auto dom = DomainProcess::constant(1.0, 4.0);
        CHECK(dom.modulus(0.4) == doctest::Approx(0.2)); // delta/2
    }
    SUBCASE("state band, Lipschitz 1/2") {
        auto dom = DomainProcess::state_dependent(
            PiecewiseLinear({-1.0, 0.0, 1.0}, {1.5, 1.0, 1.5}),
            PiecewiseLinear::constant(4.0));
        CHECK(dom.modulus(0.4) == doctest::Approx(0.2)); // min(delta, delta/2)
        CHECK(dom.at_state(0.0).lo == doctest::Approx(1.0));
        CHECK(dom.at_state(2.0).lo == doctest::Approx(1.5));
        CHECK(dom.at_state(-0.5).lo == doctest::Approx(1.25));
    }
    SUBCASE("path band, Lipschitz 0.2") {
        auto dom = DomainProcess::path_running_max(1.0, 0.2, 4.0, 0.0, 1.0);
        CHECK(dom.modulus(0.4) == doctest::Approx(0.2)); // min(delta/0.4, delta/2)
        TimeGrid g(1.0, 4);
        std::vector<double> pre{0.0, 0.7, 0.3};
        CHECK(dom.at(2, {pre.data(), pre.size()}).lo == doctest::Approx(1.0 + 0.2 * 0.7));
    }
    SUBCASE("degenerate band rejected") {
        CHECK_THROWS_AS(DomainProcess::state_dependent(
                            PiecewiseLinear({-1.0, 1.0}, {1.0, 3.0}),
                            PiecewiseLinear::constant(2.0)),
                        ArgumentError);
    }
}

TEST_CASE("progressive measurability: longer prefixes do not change the band") {
    auto dom = testutil::random_path_domain(7);
    std::vector<double> pre{0.0, 0.4, 0.9, 0.2, 1.5, -0.3};
    auto short_iv = dom.at(2, std::span<const double>(pre.data(), 3));
    auto long_iv = dom.at(2, std::span<const double>(pre.data(), pre.size()));
    CHECK(short_iv.lo == long_iv.lo);
    CHECK(short_iv.hi == long_iv.hi);
}

TEST_CASE("uc_check") {
    TimeGrid g(1.0, 8);
    SUBCASE("constant band passes") {
        auto dom = DomainProcess::constant(1.0, 4.0);
        CHECK(uc_check(dom, g, 0.3, 2000, 42).worst == 0.0);
    }
    SUBCASE("state band from the Lipschitz construction passes") {
        auto dom = DomainProcess::state_dependent(
            PiecewiseLinear({-1.0, 0.0, 1.0}, {1.5, 1.0, 1.5}),
            PiecewiseLinear::constant(4.0));
        CHECK(uc_check(dom, g, 0.2, 10000, 42).worst == 0.0);
    }
    SUBCASE("path band passes") {
        auto dom = DomainProcess::path_running_max(1.0, 0.2, 4.0, 0.0, 1.0);
        CHECK(uc_check(dom, g, 0.2, 10000, 42).worst == 0.0);
    }
    SUBCASE("band with a jump is flagged") {
        // lower bound jumps by 0.8 once the running max crosses 0.3; no modulus
        // certificate can hold, so the declared one must be violated
        auto dom = DomainProcess::custom(
            DomainProcess::Kind::path,
            [](int k, std::span<const double> pre) {
                double m = 0.0;
                for (int j = 0; j <= k; ++j) m = std::max(m, pre[static_cast<std::size_t>(j)]);
                return VolatilityInterval(m > 0.3 ? 1.8 : 1.0, 4.0);
            },
            lipschitz_modulus(0.5), 1.0, 4.0);
        CHECK(uc_check(dom, g, 0.4, 20000, 42).worst > 0.0);
    }
}

TEST_CASE("stability radius") {
    TimeGrid g(1.0, 3);
    SUBCASE("constant band") {
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto pol = constant_policy(g, 2.0); // margin 1, deg 0.5
        const double zero = 0.0;
        const double eps = stability_radius(0, 0, std::span<const double>(&zero, 1), pol, dom);
        CHECK(eps == doctest::Approx(0.125));
    }
    SUBCASE("boundary policy rejected") {
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto pol = constant_policy(g, 1.0);
        const double zero = 0.0;
        CHECK_THROWS_AS(stability_radius(0, 0, std::span<const double>(&zero, 1), pol, dom),
                        ArgumentError);
    }
    SUBCASE("state band with deg 3/8") {
        auto dom = DomainProcess::state_dependent(
            PiecewiseLinear({-1.0, 0.0, 1.0}, {1.5, 1.0, 1.5}),
            PiecewiseLinear::constant(4.0));
        auto pol = constant_policy(g, 2.25);
        auto rep = admissibility_margin(pol, dom);
        CHECK(rep.margin == doctest::Approx(0.75));
        CHECK(rep.deg == doctest::Approx(0.375));
        const double zero = 0.0;
        const double eps = stability_radius(0, 0, std::span<const double>(&zero, 1), pol, dom);
        CHECK(eps == doctest::Approx(0.09375));
    }
}

TEST_CASE("stability radius contract under perturbed prefixes") {
    TimeGrid g(1.0, 5);
    auto doms = {DomainProcess::constant(1.0, 4.0),
                 DomainProcess::state_dependent(
                     PiecewiseLinear({-1.0, 0.0, 1.0}, {1.5, 1.0, 1.5}),
                     PiecewiseLinear::constant(4.0)),
                 DomainProcess::path_running_max(1.0, 0.2, 4.0, 0.0, 1.0)};
    for (const auto& dom : doms) {
        auto pol = constant_policy(g, 2.0);
        const int k = 2;
        const std::uint64_t node = 1;
        // realized prefix of that node under the policy
        auto states = policy_states(pol);
        std::vector<double> pre(static_cast<std::size_t>(k) + 1);
        for (int j = 0; j <= k; ++j)
            pre[static_cast<std::size_t>(j)] = states[static_cast<std::size_t>(j)][node >> (k - j)];
        const double eps = stability_radius(k, node, {pre.data(), pre.size()}, pol, dom);
        REQUIRE(eps > 0.0);
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            auto pert = pre;
            for (int j = 1; j <= k; ++j)
                pert[static_cast<std::size_t>(j)] +=
                    rng::uniform(rng::stream(seed, j), -eps, eps);
            auto rep = subtree_margin(pol, dom, k, node, {pert.data(), pert.size()});
            REQUIRE(rep.admissible);
            CHECK(rep.deg >= eps - 1e-12);
        }
    }
}
