#include "rgexpect/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "rgexpect/parallel.hpp"
#include "rgexpect/rng.hpp"

namespace rgexpect {

namespace {

// Acklam's rational approximation of the standard normal quantile; relative
// error below 1.2e-9, plenty for a sampling diagnostic.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

constexpr std::uint64_t kChunk = 4096;

struct Accum {
    double sum = 0.0;
    double sumsq = 0.0;
    std::uint64_t violations = 0;
};

template <class SampleFn>
McEstimate run_samples(std::uint64_t n, std::uint64_t seed, McModel model, const SampleFn& one) {
    if (n == 0) throw ArgumentError("simulation needs at least one sample");
    const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Accum> acc(chunks);
    parallel_for(chunks, [&](std::uint64_t c) {
        Accum a;
        const std::uint64_t end = std::min(n, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) {
            const double v = one(i, &a.violations);
            a.sum += v;
            a.sumsq += v * v;
        }
        acc[c] = a;
    });
    Accum total;
    for (const Accum& a : acc) { // fixed chunk order
        total.sum += a.sum;
        total.sumsq += a.sumsq;
        total.violations += a.violations;
    }
    McEstimate est;
    est.n = n;
    est.seed = seed;
    est.model = model;
    est.violations = total.violations;
    est.mean = total.sum / static_cast<double>(n);
    if (n > 1) {
        const double var =
            std::max(0.0, (total.sumsq - static_cast<double>(n) * est.mean * est.mean) /
                              static_cast<double>(n - 1));
        est.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

double draw_increment(std::uint64_t seed, std::uint64_t sample, int step, McModel model,
                      bool* up) {
    const std::uint64_t u = rng::stream(seed, sample, static_cast<std::uint64_t>(step));
    if (model == McModel::binomial) {
        *up = (u & 1u) != 0;
        return *up ? 1.0 : -1.0;
    }
    // open-interval uniform keeps the quantile finite
    const double p = (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    const double z = normal_quantile(p);
    *up = z >= 0.0;
    return z;
}

} // namespace

McEstimate simulate(const Policy& policy, const Payoff& payoff, std::uint64_t n,
                    std::uint64_t seed, McModel model) {
    const int steps = policy.grid.steps;
    if (steps > kMaxTreeSteps) throw RefusalError("policy tree too deep");
    if (policy.margin_known && policy.margin < 0.0)
        throw ArgumentError("simulate: policy leaves the volatility band");
    const double dt = policy.grid.dt;
    return run_samples(n, seed, model, [&](std::uint64_t i, std::uint64_t*) {
        double path[kMaxTreeSteps + 2];
        path[0] = 0.0;
        std::uint64_t node = 0;
        for (int k = 0; k < steps; ++k) {
            bool up = false;
            const double eps = draw_increment(seed, i, k, model, &up);
            const double a = policy.alpha_at(k, node);
            path[k + 1] = path[k] + std::sqrt(a * dt) * eps;
            node = (node << 1) | (up ? 1u : 0u);
        }
        return payoff.evaluate(std::span<const double>(path, static_cast<std::size_t>(steps) + 1));
    });
}

McEstimate simulate_feedback(const std::function<double(int, double)>& vol,
                             const DomainProcess& domain, const Payoff& payoff,
                             const TimeGrid& grid, std::uint64_t n, std::uint64_t seed,
                             McModel model) {
    const int steps = grid.steps;
    if (steps > kMaxTreeSteps) throw RefusalError("grid too deep for path buffers");
    const double dt = grid.dt;
    return run_samples(n, seed, model, [&](std::uint64_t i, std::uint64_t* violations) {
        double path[kMaxTreeSteps + 2];
        path[0] = 0.0;
        bool violated = false;
        for (int k = 0; k < steps; ++k) {
            bool up = false;
            const double eps = draw_increment(seed, i, k, model, &up);
            const double a = vol(k, path[k]);
            const auto iv =
                domain.at(k, std::span<const double>(path, static_cast<std::size_t>(k) + 1));
            if (a < iv.lo || a > iv.hi) violated = true;
            path[k + 1] = path[k] + std::sqrt(a * dt) * eps;
        }
        if (violated) ++*violations;
        return payoff.evaluate(std::span<const double>(path, static_cast<std::size_t>(steps) + 1));
    });
}

namespace {

double strat_average(const Policy& policy, const Payoff& payoff, int k, std::uint64_t node,
                     double* path, double* sumsq) {
    const int n = policy.grid.steps;
    if (k == n) {
        const double v =
            payoff.evaluate(std::span<const double>(path, static_cast<std::size_t>(n) + 1));
        *sumsq += v * v;
        return v;
    }
    const double s = std::sqrt(policy.alpha_at(k, node) * policy.grid.dt);
    const double x = path[k];
    path[k + 1] = x + s;
    const double vp = strat_average(policy, payoff, k + 1, (node << 1) | 1u, path, sumsq);
    path[k + 1] = x - s;
    const double vm = strat_average(policy, payoff, k + 1, node << 1, path, sumsq);
    return 0.5 * (vp + vm);
}

} // namespace

McEstimate stratified_expectation(const Policy& policy, const Payoff& payoff) {
    const int steps = policy.grid.steps;
    if (steps > kMaxTreeSteps) throw RefusalError("policy tree too deep");
    if (policy.margin_known && policy.margin < 0.0)
        throw ArgumentError("simulate: policy leaves the volatility band");
    McEstimate est;
    est.n = std::uint64_t{1} << steps;
    est.model = McModel::binomial;
    est.stratified = true;
    double path[kMaxTreeSteps + 2];
    path[0] = 0.0;
    double sumsq = 0.0;
    est.mean = strat_average(policy, payoff, 0, 0, path, &sumsq);
    if (est.n > 1) {
        const double var = std::max(
            0.0, (sumsq - static_cast<double>(est.n) * est.mean * est.mean) /
                     static_cast<double>(est.n - 1));
        est.std_error = std::sqrt(var / static_cast<double>(est.n));
    }
    return est;
}

LowerBoundReport lower_bound_check(const SolveResult& result, const Payoff& payoff,
                                   std::uint64_t n, std::uint64_t seed) {
    LowerBoundReport rep;
    rep.tree_root = result.field.root();
    rep.estimate = simulate(result.optimal.policy, payoff, n, seed, McModel::binomial);
    const double slack = 3.0 * rep.estimate.std_error + 1e-12;
    rep.within_band = std::abs(rep.estimate.mean - rep.tree_root) <= slack;
    return rep;
}

} // namespace rgexpect
