#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "rgexpect/tree_solver.hpp"

using namespace rgexpect;
using testutil::random_domain;
using testutil::random_uc_payoff;

namespace {
const TimeGrid kG3(1.0, 3);
const auto kBand14 = DomainProcess::constant(1.0, 4.0);
} // namespace

TEST_CASE("solve on trivial payoffs") {
    SUBCASE("constant payoff is preserved at every node") {
        auto r = solve(constant_payoff(5.0), kBand14, kG3, 0.0, 4);
        for (int k = 0; k <= 3; ++k)
            for (double v : r.field.value[static_cast<std::size_t>(k)]) CHECK(v == 5.0);
    }
    SUBCASE("affine payoff has zero value") {
        auto xi = path_payoff([](std::span<const double> p) { return p.back(); }, 10.0,
                              [](double r) { return r; });
        auto r = solve(xi, kBand14, kG3, 0.0, 4);
        CHECK(std::abs(r.field.root()) < 1e-14);
    }
}

TEST_CASE("convex and concave closed forms at small depth") {
    const double xmax = max_abs_state(kG3, 4.0);
    auto r = solve(terminal_square(xmax), kBand14, kG3, 0.0, 4);
    CHECK(r.field.root() == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(enumerate_policies(terminal_square(xmax), kBand14, kG3, 0.0, 4) ==
          doctest::Approx(4.0).epsilon(1e-13));
    // optimal policy sits on the upper edge everywhere
    for (const auto& row : r.optimal.policy.alpha)
        for (double a : row) CHECK(a == 4.0);

    auto neg = payoff_scale(terminal_square(xmax), -1.0);
    CHECK(root_value(neg, kBand14, kG3, 0.0, 4) == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(enumerate_policies(neg, kBand14, kG3, 0.0, 4) == doctest::Approx(-1.0).epsilon(1e-13));
}

TEST_CASE("ties break toward the smaller volatility") {
    // constant payoff makes every grid choice tie
    auto r = solve(constant_payoff(1.0), kBand14, kG3, 0.25, 4);
    for (const auto& row : r.optimal.policy.alpha)
        for (double a : row) CHECK(a == 1.25); // lo + delta
    for (const auto& row : r.optimal.choice)
        for (int j : row) CHECK(j == 0);
}

TEST_CASE("enumerate_policies basics") {
    SUBCASE("one step: best single grid value") {
        TimeGrid g1(1.0, 1);
        auto xi = terminal_square(max_abs_state(g1, 4.0));
        // value under volatility a is a*dt = a, so the best grid point is 4
        CHECK(enumerate_policies(xi, kBand14, g1, 0.0, 4) == doctest::Approx(4.0));
    }
    SUBCASE("depth cap enforced") {
        TimeGrid g5(1.0, 5);
        CHECK_THROWS_AS(enumerate_policies(constant_payoff(1.0), kBand14, g5, 0.0, 2),
                        RefusalError);
    }
}

TEST_CASE("oracle equivalence on randomized instances") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const int n = 2 + static_cast<int>(rng::stream(seed, 501) % 3); // 2..4
        const int m = 2 + static_cast<int>(rng::stream(seed, 502) % 3); // 2..4
        TimeGrid g(rng::uniform(rng::stream(seed, 503), 0.5, 2.0), n);
        auto dom = random_domain(seed);
        auto xi = random_uc_payoff(seed, g, dom.max_hi());
        const double via_solve = solve(xi, dom, g, 0.0, m).field.root();
        const double via_enum = enumerate_policies(xi, dom, g, 0.0, m);
        CHECK(std::abs(via_solve - via_enum) <= 1e-12);
    }
}

TEST_CASE("optimal policy reproduces the root value") {
    for (std::uint64_t seed = 100; seed < 112; ++seed) {
        TimeGrid g(1.0, 5);
        auto dom = random_domain(seed);
        auto xi = random_uc_payoff(seed, g, dom.max_hi());
        auto r = solve(xi, dom, g, 0.0, 3);
        CHECK(std::abs(policy_value(r.optimal.policy, xi) - r.field.root()) <= 1e-12);
    }
}

TEST_CASE("policy_value telescopes the variance") {
    TimeGrid g(1.0, 8);
    auto pol = constant_policy(g, 1.0);
    auto dom = kBand14;
    admissibility_margin(pol, dom);
    CHECK(policy_value(pol, terminal_square(max_abs_state(g, 4.0))) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(policy_value(pol, constant_payoff(7.5)) == 7.5);
}

TEST_CASE("dominance: admissible grid policies stay below the solve value") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
        TimeGrid g(1.0, 4);
        auto dom = random_domain(seed);
        auto xi = random_uc_payoff(seed, g, dom.max_hi());
        const double v0 = root_value(xi, dom, g, 0.0, 3);
        // random adapted policy on the same grid points (endpoints taken verbatim)
        auto pol = make_feedback_policy(g, [&](int k, std::span<const double> pre) {
            const auto iv = dom.at(k, pre);
            switch (rng::stream(seed, 900 + static_cast<std::uint64_t>(k)) % 3) {
                case 0: return iv.lo;
                case 1: return iv.lo + (iv.hi - iv.lo) * 0.5;
                default: return iv.hi;
            }
        });
        admissibility_margin(pol, dom);
        CHECK(policy_value(pol, xi) <= v0 + 1e-12);
    }
}

TEST_CASE("dpp residuals vanish") {
    SUBCASE("whole horizon and single steps") {
        TimeGrid g(1.0, 6);
        auto dom = random_domain(7);
        auto xi = random_uc_payoff(7, g, dom.max_hi());
        auto r = solve(xi, dom, g, 0.0, 3);
        CHECK(dpp_check(r.field, xi, dom, 0.0, 3, 0, 6) <= 1e-12);
        CHECK(dpp_check(r.field, xi, dom, 0.0, 3, 0, 1) <= 1e-12);
        CHECK(dpp_check(r.field, xi, dom, 0.0, 3, 3, 3) == 0.0);
    }
    SUBCASE("path-dependent band, interior window") {
        TimeGrid g(1.0, 8);
        auto dom = testutil::random_path_domain(11);
        auto xi = random_uc_payoff(11, g, dom.max_hi());
        auto r = solve(xi, dom, g, 0.0, 2);
        CHECK(dpp_check(r.field, xi, dom, 0.0, 2, 2, 5) <= 1e-12);
    }
    SUBCASE("mismatched parameters rejected") {
        auto r = solve(terminal_cos(), kBand14, kG3, 0.0, 4);
        CHECK_THROWS_AS(dpp_check(r.field, terminal_cos(), kBand14, 0.1, 4, 0, 3), ArgumentError);
        CHECK_THROWS_AS(dpp_check(r.field, terminal_cos(), kBand14, 0.0, 3, 0, 3), ArgumentError);
    }
}

TEST_CASE("delta monotonicity of the root value") {
    TimeGrid g(1.0, 6);
    const double xmax = max_abs_state(g, 4.0);
    double prev = -1e300;
    for (double delta : {0.5, 0.2, 0.05, 0.0}) {
        const double v = root_value(terminal_square(xmax), kBand14, g, delta, 3);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    CHECK(prev == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("vol-grid refinement monotonicity on nested grids") {
    TimeGrid g(1.0, 4);
    for (std::uint64_t seed = 300; seed < 306; ++seed) {
        auto dom = random_domain(seed, /*allow_path=*/false);
        auto xi = random_uc_payoff(seed, g, dom.max_hi());
        const double v2 = root_value(xi, dom, g, 0.0, 2);
        const double v3 = root_value(xi, dom, g, 0.0, 3);
        const double v5 = root_value(xi, dom, g, 0.0, 5);
        CHECK(v2 <= v3 + 1e-12);
        CHECK(v3 <= v5 + 1e-12);
    }
}

TEST_CASE("infeasible interior is reported with the node") {
    TimeGrid g(1.0, 3);
    CHECK_THROWS_AS(root_value(terminal_cos(), kBand14, g, 1.6, 2), InfeasibleError);
    // band narrows once the running max crosses a threshold; delta then empties it
    auto dom = DomainProcess::custom(
        DomainProcess::Kind::path,
        [](int k, std::span<const double> pre) {
            double m = 0.0;
            for (int j = 0; j <= k; ++j) m = std::max(m, pre[static_cast<std::size_t>(j)]);
            return m > 0.4 ? VolatilityInterval(1.0, 1.5) : VolatilityInterval(1.0, 4.0);
        },
        lipschitz_modulus(0.0), 1.0, 4.0);
    try {
        root_value(terminal_cos(), dom, g, 0.3, 2);
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(e.level >= 1);
    }
}

TEST_CASE("value field stores exact half-sums along the optimal tree") {
    TimeGrid g(1.0, 7);
    auto dom = random_domain(17);
    auto xi = random_uc_payoff(17, g, dom.max_hi());
    auto r = solve(xi, dom, g, 0.0, 3);
    for (int k = 0; k < 7; ++k)
        for (std::uint64_t i = 0; i < (std::uint64_t{1} << k); ++i) {
            const double half = 0.5 * (r.field.value[static_cast<std::size_t>(k) + 1][2 * i + 1] +
                                       r.field.value[static_cast<std::size_t>(k) + 1][2 * i]);
            CHECK(r.field.value[static_cast<std::size_t>(k)][i] == half);
        }
}

TEST_CASE("memoized and direct recursions agree on constant bands") {
    // depth small enough for the plain path recursion, payoff terminal so the
    // memoized route engages inside solve
    TimeGrid g(1.0, 9);
    const double xmax = max_abs_state(g, 3.1);
    auto dom = DomainProcess::constant(0.7, 3.1);
    auto xi = terminal_table(PiecewiseLinear({-2.0, -0.5, 0.4, 1.7}, {0.3, -0.6, 1.1, 0.2}));
    const double memo_root = root_value(xi, dom, g, 0.0, 3);
    // force the generic path by wrapping the payoff without terminal structure
    auto opaque = path_payoff([f = xi.evaluate](std::span<const double> p) { return f(p); },
                              xi.bound, xi.modulus);
    const double plain_root = root_value(opaque, dom, g, 0.0, 3);
    CHECK(std::abs(memo_root - plain_root) <= 1e-12);
    (void)xmax;
}

TEST_CASE("lower semicontinuity bound for constant bands") {
    // perturbing the anchor prefix costs at most the payoff modulus
    TimeGrid g(1.0, 6);
    auto dom = DomainProcess::constant(1.0, 4.0);
    const double xmax = max_abs_state(g, 4.0);
    auto xi = running_max_payoff(xmax); // modulus(r) = r
    auto r = solve(xi, dom, g, 0.0, 3);
    const int t = 3;
    for (std::uint64_t node = 0; node < (1u << t); ++node) {
        auto pre = r.field.prefix_of(t, node);
        const double base = anchored_value(xi, dom, g, 0.0, 3, t, node, {pre.data(), pre.size()});
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const double eta = rng::uniform(rng::stream(seed, node + 1), 0.0, 0.4);
            auto pert = pre;
            for (int j = 1; j <= t; ++j)
                pert[static_cast<std::size_t>(j)] +=
                    rng::uniform(rng::stream(seed, 100 + static_cast<std::uint64_t>(j)), -eta, eta);
            const double moved =
                anchored_value(xi, dom, g, 0.0, 3, t, node, {pert.data(), pert.size()});
            CHECK(moved >= base - xi.modulus(eta) - 1e-12);
        }
    }
}

TEST_CASE("pasting") {
    SUBCASE("identity pasting keeps the policy and its value") {
        TimeGrid g(1.0, 4);
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto base = constant_policy(g, 2.0);
        admissibility_margin(base, dom);
        std::vector<NodePredicate> cells{[](std::span<const double>) { return true; }};
        std::vector<const SuffixPolicy*> repl{nullptr};
        auto pasted = paste_policies(base, 2, cells, repl, dom);
        auto xi = random_uc_payoff(3, g, 4.0);
        CHECK(policy_value(pasted, xi) == policy_value(base, xi));
        CHECK(pasted.margin == doctest::Approx(base.margin));
    }
    SUBCASE("two-cell paste matches the four-leaf enumeration") {
        TimeGrid g(1.0, 2);
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto base = constant_policy(g, 2.0);
        auto up = SuffixPolicy::constant(g, 1, 1.0);
        auto dn = SuffixPolicy::constant(g, 1, 4.0);
        std::vector<NodePredicate> cells{
            [](std::span<const double> pre) { return pre.back() > 0.0; },
            [](std::span<const double> pre) { return pre.back() <= 0.0; }};
        std::vector<const SuffixPolicy*> repl{&up, &dn};
        auto pasted = paste_policies(base, 1, cells, repl, dom);
        const double xmax = max_abs_state(g, 4.0);
        auto xi = terminal_square(xmax);
        // explicit four-leaf average: step 0 vol 2, then 1 above, 4 below
        const double s0 = std::sqrt(2.0 * g.dt);
        const double su = std::sqrt(1.0 * g.dt);
        const double sd = std::sqrt(4.0 * g.dt);
        double leaves[4] = {
            (-s0 - sd) * (-s0 - sd), (-s0 + sd) * (-s0 + sd),
            (s0 - su) * (s0 - su), (s0 + su) * (s0 + su)};
        const double expect = 0.5 * (0.5 * (leaves[1] + leaves[0]) + 0.5 * (leaves[3] + leaves[2]));
        // reduce order differs from policy_value's recursion only at the top join
        CHECK(policy_value(pasted, xi) == doctest::Approx(expect).epsilon(1e-14));
        // conditional values at the cut equal the replacement subtree values
        auto cond = conditional_values(pasted, xi, 1);
        CHECK(cond[1] == doctest::Approx(0.5 * (leaves[3] + leaves[2])).epsilon(1e-14));
        CHECK(cond[0] == doctest::Approx(0.5 * (leaves[1] + leaves[0])).epsilon(1e-14));
    }
    SUBCASE("pasted margin is the minimum of the pieces") {
        TimeGrid g(1.0, 3);
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto base = constant_policy(g, 2.5);  // margin 1.5 before the cut
        auto a = SuffixPolicy::constant(g, 1, 2.0);   // margin 1.0
        auto b = SuffixPolicy::constant(g, 1, 3.75);  // margin 0.25
        std::vector<NodePredicate> cells{
            [](std::span<const double> pre) { return pre.back() > 0.0; },
            [](std::span<const double> pre) { return pre.back() <= 0.0; }};
        std::vector<const SuffixPolicy*> repl{&a, &b};
        auto pasted = paste_policies(base, 1, cells, repl, dom);
        CHECK(pasted.margin == doctest::Approx(0.25));
    }
    SUBCASE("non-partitions are rejected") {
        TimeGrid g(1.0, 2);
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto base = constant_policy(g, 2.0);
        auto sfx = SuffixPolicy::constant(g, 1, 2.0);
        std::vector<NodePredicate> overlap{
            [](std::span<const double>) { return true; },
            [](std::span<const double> pre) { return pre.back() > 0.0; }};
        std::vector<const SuffixPolicy*> repl{&sfx, &sfx};
        CHECK_THROWS_AS(paste_policies(base, 1, overlap, repl, dom), ArgumentError);
        std::vector<NodePredicate> gap{
            [](std::span<const double> pre) { return pre.back() > 10.0; },
            [](std::span<const double> pre) { return pre.back() < -10.0; }};
        CHECK_THROWS_AS(paste_policies(base, 1, gap, repl, dom), ArgumentError);
    }
    SUBCASE("replacements outside the band are rejected, edge values are not") {
        TimeGrid g(1.0, 2);
        auto dom = DomainProcess::constant(1.0, 4.0);
        auto base = constant_policy(g, 2.0);
        auto outside = SuffixPolicy::constant(g, 1, 4.5);
        std::vector<NodePredicate> cells{[](std::span<const double>) { return true; }};
        std::vector<const SuffixPolicy*> bad{&outside};
        CHECK_THROWS_AS(paste_policies(base, 1, cells, bad, dom), ArgumentError);
        auto edge = SuffixPolicy::constant(g, 1, 4.0); // zero margin: usable, not in the open family
        std::vector<const SuffixPolicy*> ok{&edge};
        auto pasted = paste_policies(base, 1, cells, ok, dom);
        CHECK(pasted.margin == doctest::Approx(0.0));
        CHECK(pasted.deg == 0.0);
    }
}

TEST_CASE("upward filtering ladder") {
    TimeGrid g(1.0, 5);
    auto dom = DomainProcess::constant(1.0, 4.0);
    const double xmax = max_abs_state(g, 4.0);
    auto xi = terminal_square(xmax);
    const int t = 2;

    SUBCASE("single policy passes through unchanged") {
        auto p = constant_policy(g, 2.0);
        auto seq = upward_filtering_sequence(xi, dom, t, {p});
        REQUIRE(seq.size() == 1);
        CHECK(seq[0].alpha == p.alpha);
    }
    SUBCASE("ladder is nodewise nondecreasing and reaches the best input") {
        // variants share history up to t and differ afterwards
        auto mk = [&](double tail_vol) {
            return make_feedback_policy(g, [&, tail_vol](int k, std::span<const double>) {
                return k < t ? 2.0 : tail_vol;
            });
        };
        std::vector<Policy> inputs{mk(1.5), mk(3.5), mk(2.5)};
        auto seq = upward_filtering_sequence(xi, dom, t, inputs);
        REQUIRE(seq.size() == 3);
        std::vector<double> prev = conditional_values(seq[0], xi, t);
        for (std::size_t i = 1; i < seq.size(); ++i) {
            auto cur = conditional_values(seq[i], xi, t);
            for (std::size_t nd = 0; nd < cur.size(); ++nd) CHECK(cur[nd] >= prev[nd] - 1e-15);
            prev = cur;
        }
        // the last rung dominates each input nodewise
        for (const auto& p : inputs) {
            auto cond = conditional_values(p, xi, t);
            for (std::size_t nd = 0; nd < cond.size(); ++nd)
                CHECK(prev[nd] >= cond[nd] - 1e-15);
        }
    }
    SUBCASE("policies with different history are rejected") {
        auto p1 = constant_policy(g, 2.0);
        auto p2 = constant_policy(g, 3.0);
        CHECK_THROWS_AS(upward_filtering_sequence(xi, dom, t, {p1, p2}), ArgumentError);
        CHECK_THROWS_AS(upward_filtering_sequence(xi, dom, t, {}), ArgumentError);
    }
}
