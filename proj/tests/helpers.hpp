#pragma once

// Shared instance generators for the test suites: randomized volatility bands
// and bounded uniformly-continuous payoffs with known moduli.

#include <cmath>
#include <functional>

#include "rgexpect/domain.hpp"
#include "rgexpect/pathspace.hpp"
#include "rgexpect/rng.hpp"

namespace testutil {

using namespace rgexpect;

inline DomainProcess random_constant_domain(std::uint64_t seed) {
    const double lo = rng::uniform(rng::stream(seed, 11), 0.3, 1.5);
    const double width = rng::uniform(rng::stream(seed, 12), 0.8, 3.0);
    return DomainProcess::constant(lo, lo + width);
}

inline DomainProcess random_state_domain(std::uint64_t seed) {
    const double base = rng::uniform(rng::stream(seed, 21), 0.4, 1.2);
    const double width = rng::uniform(rng::stream(seed, 22), 1.0, 2.5);
    auto y = [&](std::uint64_t j, double lvl, double amp) {
        return lvl + amp * (rng::uniform01(rng::stream(seed, j)) - 0.5);
    };
    PiecewiseLinear a({-1.5, 0.0, 1.5}, {y(23, base, 0.3), y(24, base, 0.3), y(25, base, 0.3)});
    PiecewiseLinear b({-1.5, 0.0, 1.5},
                      {y(26, base + width, 0.4), y(27, base + width, 0.4), y(28, base + width, 0.4)});
    return DomainProcess::state_dependent(std::move(a), std::move(b));
}

inline DomainProcess random_path_domain(std::uint64_t seed) {
    const double a0 = rng::uniform(rng::stream(seed, 31), 0.3, 1.0);
    const double ac = rng::uniform(rng::stream(seed, 32), 0.0, 0.4);
    const double b0 = a0 + rng::uniform(rng::stream(seed, 33), 1.0, 2.0);
    const double bc = rng::uniform(rng::stream(seed, 34), 0.0, 0.3);
    return DomainProcess::path_running_max(a0, ac, b0, bc, 1.0);
}

inline DomainProcess random_domain(std::uint64_t seed, bool allow_path = true) {
    const int kinds = allow_path ? 3 : 2;
    switch (rng::stream(seed, 1) % kinds) {
        case 0: return random_constant_domain(seed);
        case 1: return random_state_domain(seed);
        default: return random_path_domain(seed);
    }
}

/// Bounded UC payoff: random cosine of the terminal value, a table payoff, a
/// running-max/asian functional, or a two-term mixture.
inline Payoff random_uc_payoff(std::uint64_t seed, const TimeGrid& grid, double volmax) {
    const double xmax = max_abs_state(grid, volmax);
    auto cosine = [&](std::uint64_t s) {
        const double w = rng::uniform(rng::stream(seed, s), 0.5, 2.0);
        const double phi = rng::uniform(rng::stream(seed, s + 1), 0.0, 6.28);
        return terminal_payoff([w, phi](double x) { return std::cos(w * x + phi); }, 1.0,
                               [w](double r) { return w * r; });
    };
    auto pick_single = [&](std::uint64_t s) -> Payoff {
        switch (rng::stream(seed, s) % 4) {
            case 0: return cosine(s + 10);
            case 1: {
                const double slope = rng::uniform(rng::stream(seed, s + 20), -1.0, 1.0);
                return terminal_table(PiecewiseLinear({-1.0, 0.0, 1.0},
                                                      {slope, 0.3 * slope, -0.5 * slope}));
            }
            case 2: return running_max_payoff(xmax);
            default: return asian_mean_payoff(xmax);
        }
    };
    Payoff p = pick_single(41);
    if (rng::stream(seed, 42) % 2 == 0) {
        const double c = rng::uniform(rng::stream(seed, 43), -1.0, 1.0);
        p = payoff_add(p, payoff_scale(pick_single(44), c));
    }
    return p;
}

} // namespace testutil
