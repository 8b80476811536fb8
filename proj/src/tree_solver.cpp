#include "rgexpect/tree_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>

#include "rgexpect/parallel.hpp"

namespace rgexpect {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One shared formula for the volatility grid so every code path lands on the
// same doubles. Endpoints are taken verbatim; j/(m-1) makes the grids for m
// and 2m-1 points coincide on the coarse points.
inline double grid_point(double lo, double hi, double width, int m, int j) {
    if (j == 0) return lo;
    if (j == m - 1) return hi;
    return lo + width * (static_cast<double>(j) / static_cast<double>(m - 1));
}

[[noreturn]] void throw_infeasible(int level, std::uint64_t node) {
    throw InfeasibleError("empty delta-interior of the volatility band at level " +
                              std::to_string(level) + ", node " + std::to_string(node),
                          level, node);
}

void validate_solver_args(const TimeGrid& grid, double delta, int vol_points) {
    if (grid.steps > kMaxTreeSteps)
        throw RefusalError("tree depth capped at " + std::to_string(kMaxTreeSteps) + " steps");
    if (vol_points < 2) throw ArgumentError("volatility grid needs at least two points");
    if (!(delta >= 0.0)) throw ArgumentError("delta must be nonnegative");
}

// ---------------------------------------------------------------------------
// general recursion over realized paths

struct GenSolver {
    int stop;                      // terminal level
    int full_steps;                // grid steps (payoff sees path[0..full_steps])
    double dt;
    double delta;
    int m;
    const DomainProcess* domain;
    const Payoff* payoff;          // terminal data when table == nullptr
    const double* table = nullptr; // terminal slice indexed by node at level `stop`
    ValueField* field = nullptr;
    OptimalPolicy* opt = nullptr;

    double terminal(std::uint64_t node, const double* path) const {
        if (table) return table[node];
        return payoff->evaluate(
            std::span<const double>(path, static_cast<std::size_t>(full_steps) + 1));
    }

    double value(int k, std::uint64_t node, double* path) const {
        if (k == stop) return terminal(node, path);
        const auto iv =
            domain->at(k, std::span<const double>(path, static_cast<std::size_t>(k) + 1));
        const double lo = iv.lo + delta;
        const double hi = iv.hi - delta;
        if (!(lo < hi)) throw_infeasible(k, node);
        const double width = hi - lo;
        const double x = path[k];
        double best = kNegInf;
        for (int j = 0; j < m; ++j) {
            const double a = grid_point(lo, hi, width, m, j);
            const double s = std::sqrt(a * dt);
            path[k + 1] = x + s;
            const double vp = value(k + 1, (node << 1) | 1u, path);
            path[k + 1] = x - s;
            const double vm = value(k + 1, node << 1, path);
            const double v = 0.5 * (vp + vm);
            if (v > best) best = v;
        }
        return best;
    }

    // Same recursion, re-descending the argmax branch to fill the arrays; the
    // stored value is the exact half-sum of the stored children.
    double record(int k, std::uint64_t node, double* path) const {
        if (k == stop) {
            const double v = terminal(node, path);
            field->value[static_cast<std::size_t>(k)][node] = v;
            field->state[static_cast<std::size_t>(k)][node] = path[k];
            return v;
        }
        const auto iv =
            domain->at(k, std::span<const double>(path, static_cast<std::size_t>(k) + 1));
        const double lo = iv.lo + delta;
        const double hi = iv.hi - delta;
        if (!(lo < hi)) throw_infeasible(k, node);
        const double width = hi - lo;
        const double x = path[k];
        double best = kNegInf;
        int best_j = 0;
        for (int j = 0; j < m; ++j) {
            const double a = grid_point(lo, hi, width, m, j);
            const double s = std::sqrt(a * dt);
            path[k + 1] = x + s;
            const double vp = value(k + 1, (node << 1) | 1u, path);
            path[k + 1] = x - s;
            const double vm = value(k + 1, node << 1, path);
            const double v = 0.5 * (vp + vm);
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        const double a = grid_point(lo, hi, width, m, best_j);
        const double s = std::sqrt(a * dt);
        path[k + 1] = x + s;
        const double vp = record(k + 1, (node << 1) | 1u, path);
        path[k + 1] = x - s;
        const double vm = record(k + 1, node << 1, path);
        const double v = 0.5 * (vp + vm);
        field->value[static_cast<std::size_t>(k)][node] = v;
        field->state[static_cast<std::size_t>(k)][node] = x;
        opt->policy.alpha[static_cast<std::size_t>(k)][node] = a;
        opt->choice[static_cast<std::size_t>(k)][node] = best_j;
        return v;
    }
};

// ---------------------------------------------------------------------------
// Markov kernel: payoff reads the terminal value, band reads the current value.
// Same arithmetic as GenSolver projected onto the scalar state, so results are
// bit-identical; exists so the hot loop dispatches without std::function calls.

struct ConstBand {
    double lo, hi;
    void operator()(double, double* l, double* h) const {
        *l = lo;
        *h = hi;
    }
};

struct StateBand {
    const PiecewiseLinear* a;
    const PiecewiseLinear* b;
    void operator()(double x, double* l, double* h) const {
        *l = (*a)(x);
        *h = (*b)(x);
    }
};

struct SquarePay {
    double operator()(double x) const { return x * x; }
};
struct AbsPay {
    double operator()(double x) const { return std::abs(x); }
};
struct CosPay {
    double operator()(double x) const { return std::cos(x); }
};
struct TablePay {
    const PiecewiseLinear* f;
    double operator()(double x) const { return (*f)(x); }
};
struct FnPay {
    const std::function<double(double)>* f;
    double operator()(double x) const { return (*f)(x); }
};

template <class Band, class Pay>
struct MarkovKernel {
    int stop;
    double dt;
    double delta;
    int m;
    Band band;
    Pay pay;

    double value(int k, std::uint64_t node, double x) const {
        if (k == stop) return pay(x);
        double blo, bhi;
        band(x, &blo, &bhi);
        const double lo = blo + delta;
        const double hi = bhi - delta;
        if (!(lo < hi)) throw_infeasible(k, node);
        const double width = hi - lo;
        double best = kNegInf;
        for (int j = 0; j < m; ++j) {
            const double a = grid_point(lo, hi, width, m, j);
            const double s = std::sqrt(a * dt);
            const double vp = value(k + 1, (node << 1) | 1u, x + s);
            const double vm = value(k + 1, node << 1, x - s);
            const double v = 0.5 * (vp + vm);
            if (v > best) best = v;
        }
        return best;
    }

    // Deterministic split: tasks enumerate the top (sign, grid-choice) digits,
    // then a serial pass reproduces the nested max/half-sum over those digits
    // bit-for-bit, so the result does not depend on the worker count.
    double value_split(int k0, std::uint64_t node0, double x0) const {
        const int depth = stop - k0;
        const std::uint64_t branch = 2 * static_cast<std::uint64_t>(m);
        int levels = 0;
        std::uint64_t tasks = 1;
        while (levels < depth && tasks < 64 && tasks * branch <= 4096) {
            tasks *= branch;
            ++levels;
        }
        if (thread_count() <= 1 || levels == 0 || depth < 10)
            return value(k0, node0, x0);
        std::vector<double> out(tasks);
        parallel_for(tasks, [&](std::uint64_t ti) {
            double x = x0;
            std::uint64_t node = node0;
            int k = k0;
            std::uint64_t rem = ti;
            std::uint64_t scale = tasks;
            for (int l = 0; l < levels; ++l) {
                scale /= branch;
                const std::uint64_t d = rem / scale;
                rem %= scale;
                const int j = static_cast<int>(d >> 1);
                const bool up = (d & 1u) != 0;
                double blo, bhi;
                band(x, &blo, &bhi);
                const double lo = blo + delta;
                const double hi = bhi - delta;
                if (!(lo < hi)) throw_infeasible(k, node);
                const double s = std::sqrt(grid_point(lo, hi, hi - lo, m, j) * dt);
                x += up ? s : -s;
                node = (node << 1) | (up ? 1u : 0u);
                ++k;
            }
            out[ti] = value(k, node, x);
        });
        const std::function<double(int, std::uint64_t, std::uint64_t, std::uint64_t, double)>
            comb = [&](int k, std::uint64_t node, std::uint64_t base, std::uint64_t scale,
                       double x) -> double {
            if (scale == 1) return out[base];
            double blo, bhi;
            band(x, &blo, &bhi);
            const double lo = blo + delta;
            const double hi = bhi - delta;
            const double width = hi - lo;
            const std::uint64_t child_scale = scale / branch;
            double best = kNegInf;
            for (int j = 0; j < m; ++j) {
                const double a = grid_point(lo, hi, width, m, j);
                const double s = std::sqrt(a * dt);
                const std::uint64_t d_up = (static_cast<std::uint64_t>(j) << 1) | 1u;
                const std::uint64_t d_dn = static_cast<std::uint64_t>(j) << 1;
                const double vp =
                    comb(k + 1, (node << 1) | 1u, base + d_up * child_scale, child_scale, x + s);
                const double vm =
                    comb(k + 1, node << 1, base + d_dn * child_scale, child_scale, x - s);
                const double v = 0.5 * (vp + vm);
                if (v > best) best = v;
            }
            return best;
        };
        return comb(k0, node0, 0, tasks, x0);
    }
};

template <class Band>
double markov_with_band(const Payoff& payoff, Band band, int stop, double dt, double delta, int m,
                        int k0, std::uint64_t node0, double x0, bool split) {
    const auto run = [&](auto pay) {
        MarkovKernel<Band, decltype(pay)> kern{stop, dt, delta, m, band, pay};
        return split ? kern.value_split(k0, node0, x0) : kern.value(k0, node0, x0);
    };
    switch (payoff.terminal_kind) {
        case Payoff::Terminal::square:
            return run(SquarePay{});
        case Payoff::Terminal::abs_value:
            return run(AbsPay{});
        case Payoff::Terminal::cosine:
            return run(CosPay{});
        case Payoff::Terminal::table:
            return run(TablePay{&payoff.terminal_table});
        default:
            return run(FnPay{&payoff.terminal});
    }
}

double markov_value(const Payoff& payoff, const DomainProcess& domain, int stop, double dt,
                    double delta, int m, int k0, std::uint64_t node0, double x0, bool split) {
    if (domain.kind() == DomainProcess::Kind::constant) {
        const auto iv = domain.at_state(0.0);
        return markov_with_band(payoff, ConstBand{iv.lo, iv.hi}, stop, dt, delta, m, k0, node0,
                                x0, split);
    }
    return markov_with_band(payoff, StateBand{&domain.lower_table(), &domain.upper_table()}, stop,
                            dt, delta, m, k0, node0, x0, split);
}

// ---------------------------------------------------------------------------
// memoized solver for constant bands with terminal payoffs: the subtree value
// depends only on (level, net count of each signed increment), which keeps the
// state space polynomial in the depth for small grids.

constexpr int kMemoMaxM = 10;

bool memo_feasible(int m, int n) {
    if (m > kMemoMaxM) return false;
    // count of integer vectors in Z^m with |n_1|+..+|n_m| <= r
    std::array<double, kMaxTreeSteps + 1> cur{}, nxt{};
    cur.fill(1.0);
    for (int j = 0; j < m; ++j) {
        for (int r = 0; r <= n; ++r) {
            double s = cur[static_cast<std::size_t>(r)];
            for (int v = 1; v <= r; ++v) s += 2.0 * cur[static_cast<std::size_t>(r - v)];
            nxt[static_cast<std::size_t>(r)] = s;
        }
        cur = nxt;
    }
    double total = 0.0;
    for (int k = 0; k < n; ++k) total += cur[static_cast<std::size_t>(k)];
    return total <= 4e6;
}

struct MemoSolver {
    int n;
    double dt;
    int m;
    std::array<double, kMemoMaxM> avals{};
    std::array<double, kMemoMaxM> inc{};
    const Payoff* payoff;
    std::vector<std::unordered_map<std::uint64_t, double>> memo;
    std::array<int, kMemoMaxM> cnt{};
    ValueField* field = nullptr;
    OptimalPolicy* opt = nullptr;

    std::uint64_t key() const {
        std::uint64_t k = 0;
        for (int j = 0; j < m; ++j)
            k = (k << 6) | static_cast<std::uint64_t>(cnt[static_cast<std::size_t>(j)] + 31);
        return k;
    }

    double value(int k, double x) {
        if (k == n) return payoff->terminal(x);
        auto& map = memo[static_cast<std::size_t>(k)];
        const std::uint64_t kk = key();
        if (const auto it = map.find(kk); it != map.end()) return it->second;
        double best = kNegInf;
        for (int j = 0; j < m; ++j) {
            const double s = inc[static_cast<std::size_t>(j)];
            ++cnt[static_cast<std::size_t>(j)];
            const double vp = value(k + 1, x + s);
            cnt[static_cast<std::size_t>(j)] -= 2;
            const double vm = value(k + 1, x - s);
            ++cnt[static_cast<std::size_t>(j)];
            const double v = 0.5 * (vp + vm);
            if (v > best) best = v;
        }
        map.emplace(kk, best);
        return best;
    }

    double record(int k, std::uint64_t node, double x) {
        if (k == n) {
            const double v = payoff->terminal(x);
            field->value[static_cast<std::size_t>(k)][node] = v;
            field->state[static_cast<std::size_t>(k)][node] = x;
            return v;
        }
        double best = kNegInf;
        int best_j = 0;
        for (int j = 0; j < m; ++j) {
            const double s = inc[static_cast<std::size_t>(j)];
            ++cnt[static_cast<std::size_t>(j)];
            const double vp = value(k + 1, x + s);
            cnt[static_cast<std::size_t>(j)] -= 2;
            const double vm = value(k + 1, x - s);
            ++cnt[static_cast<std::size_t>(j)];
            const double v = 0.5 * (vp + vm);
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        const double s = inc[static_cast<std::size_t>(best_j)];
        ++cnt[static_cast<std::size_t>(best_j)];
        const double vp = record(k + 1, (node << 1) | 1u, x + s);
        cnt[static_cast<std::size_t>(best_j)] -= 2;
        const double vm = record(k + 1, node << 1, x - s);
        ++cnt[static_cast<std::size_t>(best_j)];
        const double v = 0.5 * (vp + vm);
        field->value[static_cast<std::size_t>(k)][node] = v;
        field->state[static_cast<std::size_t>(k)][node] = x;
        opt->policy.alpha[static_cast<std::size_t>(k)][node] = avals[static_cast<std::size_t>(best_j)];
        opt->choice[static_cast<std::size_t>(k)][node] = best_j;
        return v;
    }
};

bool memo_applicable(const Payoff& payoff, const DomainProcess& domain, double delta, int m,
                     int n) {
    return payoff.is_terminal() && domain.kind() == DomainProcess::Kind::constant &&
           memo_feasible(m, n);
}

MemoSolver make_memo(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                     double delta, int m) {
    const auto iv = domain.at_state(0.0);
    const double lo = iv.lo + delta;
    const double hi = iv.hi - delta;
    if (!(lo < hi)) throw_infeasible(0, 0);
    MemoSolver ms;
    ms.n = grid.steps;
    ms.dt = grid.dt;
    ms.m = m;
    ms.payoff = &payoff;
    const double width = hi - lo;
    for (int j = 0; j < m; ++j) {
        ms.avals[static_cast<std::size_t>(j)] = grid_point(lo, hi, width, m, j);
        ms.inc[static_cast<std::size_t>(j)] = std::sqrt(ms.avals[static_cast<std::size_t>(j)] * grid.dt);
    }
    ms.memo.resize(static_cast<std::size_t>(grid.steps));
    return ms;
}

void init_result(SolveResult& r, const TimeGrid& grid, double delta, int m) {
    const int n = grid.steps;
    r.field.grid = grid;
    r.field.delta = delta;
    r.field.vol_points = m;
    r.field.value.resize(static_cast<std::size_t>(n) + 1);
    r.field.state.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        r.field.value[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, 0.0);
        r.field.state[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, 0.0);
    }
    r.optimal.policy.grid = grid;
    r.optimal.policy.alpha.resize(static_cast<std::size_t>(n));
    r.optimal.choice.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        r.optimal.policy.alpha[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, 0.0);
        r.optimal.choice[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, 0);
    }
}

} // namespace

std::vector<double> ValueField::prefix_of(int k, std::uint64_t node) const {
    std::vector<double> out(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j)
        out[static_cast<std::size_t>(j)] = state[static_cast<std::size_t>(j)][node >> (k - j)];
    return out;
}

SolveResult solve(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                  double delta, int vol_points) {
    validate_solver_args(grid, delta, vol_points);
    SolveResult r;
    init_result(r, grid, delta, vol_points);
    if (memo_applicable(payoff, domain, delta, vol_points, grid.steps)) {
        MemoSolver ms = make_memo(payoff, domain, grid, delta, vol_points);
        ms.field = &r.field;
        ms.opt = &r.optimal;
        ms.record(0, 0, 0.0);
    } else {
        GenSolver gs{grid.steps, grid.steps, grid.dt,   delta,      vol_points,
                     &domain,    &payoff,    nullptr,   &r.field,   &r.optimal};
        double path[kMaxTreeSteps + 2];
        path[0] = 0.0;
        gs.record(0, 0, path);
    }
    admissibility_margin(r.optimal.policy, domain);
    return r;
}

double root_value(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                  double delta, int vol_points) {
    validate_solver_args(grid, delta, vol_points);
    if (memo_applicable(payoff, domain, delta, vol_points, grid.steps)) {
        MemoSolver ms = make_memo(payoff, domain, grid, delta, vol_points);
        return ms.value(0, 0.0);
    }
    if (payoff.is_terminal() && domain.kind() != DomainProcess::Kind::path)
        return markov_value(payoff, domain, grid.steps, grid.dt, delta, vol_points, 0, 0, 0.0,
                            /*split=*/true);
    GenSolver gs{grid.steps, grid.steps, grid.dt, delta, vol_points, &domain, &payoff};
    double path[kMaxTreeSteps + 2];
    path[0] = 0.0;
    return gs.value(0, 0, path);
}

double anchored_value(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                      double delta, int vol_points, int k, std::uint64_t node0,
                      std::span<const double> prefix) {
    validate_solver_args(grid, delta, vol_points);
    if (k < 0 || k > grid.steps) throw ArgumentError("anchored_value: level outside grid");
    if (prefix.size() != static_cast<std::size_t>(k) + 1)
        throw StructuralError("anchored_value: prefix must have k+1 values");
    if (prefix[0] != 0.0) throw StructuralError("anchored_value: prefix must start at zero");
    if (payoff.is_terminal() && domain.kind() != DomainProcess::Kind::path)
        return markov_value(payoff, domain, grid.steps, grid.dt, delta, vol_points, k, node0,
                            prefix.back(), /*split=*/false);
    GenSolver gs{grid.steps, grid.steps, grid.dt, delta, vol_points, &domain, &payoff};
    double path[kMaxTreeSteps + 2];
    std::copy(prefix.begin(), prefix.end(), path);
    return gs.value(k, node0, path);
}

namespace {

double subtree_average(const Policy& pol, const Payoff& pay, int k, std::uint64_t node,
                       double* path) {
    const int n = pol.grid.steps;
    if (k == n)
        return pay.evaluate(std::span<const double>(path, static_cast<std::size_t>(n) + 1));
    const double a = pol.alpha_at(k, node);
    const double s = std::sqrt(a * pol.grid.dt);
    const double x = path[k];
    path[k + 1] = x + s;
    const double vp = subtree_average(pol, pay, k + 1, (node << 1) | 1u, path);
    path[k + 1] = x - s;
    const double vm = subtree_average(pol, pay, k + 1, node << 1, path);
    return 0.5 * (vp + vm);
}

void check_evaluable(const Policy& policy) {
    if (policy.margin_known && policy.margin < 0.0)
        throw ArgumentError("policy leaves the volatility band; refusing to evaluate");
}

} // namespace

double policy_value(const Policy& policy, const Payoff& payoff) {
    if (policy.grid.steps > kMaxTreeSteps) throw RefusalError("policy tree too deep");
    check_evaluable(policy);
    double path[kMaxTreeSteps + 2];
    path[0] = 0.0;
    return subtree_average(policy, payoff, 0, 0, path);
}

std::vector<double> conditional_values(const Policy& policy, const Payoff& payoff, int t) {
    const int n = policy.grid.steps;
    if (t < 0 || t > n) throw ArgumentError("conditional_values: level outside grid");
    if (n > kMaxTreeSteps) throw RefusalError("policy tree too deep");
    check_evaluable(policy);
    const auto states = policy_states(policy);
    std::vector<double> out(std::size_t{1} << t);
    parallel_for(out.size(), [&](std::uint64_t node) {
        double path[kMaxTreeSteps + 2];
        for (int j = 0; j <= t; ++j)
            path[j] = states[static_cast<std::size_t>(j)][node >> (t - j)];
        out[node] = subtree_average(policy, payoff, t, node, path);
    });
    return out;
}

double dpp_check(const ValueField& field, const Payoff& payoff, const DomainProcess& domain,
                 double delta, int vol_points, int s, int t) {
    const int n = field.grid.steps;
    if (s < 0 || s > t || t > n) throw ArgumentError("dpp_check: need 0 <= s <= t <= steps");
    if (delta != field.delta || vol_points != field.vol_points)
        throw ArgumentError("dpp_check: delta/grid resolution must match the stored field");
    const std::uint64_t nodes = std::uint64_t{1} << s;
    std::vector<double> res(nodes);
    const double* slice = field.value[static_cast<std::size_t>(t)].data();
    parallel_for(nodes, [&](std::uint64_t i) {
        GenSolver gs{t,       n,       field.grid.dt, delta, vol_points,
                     &domain, &payoff, slice};
        double path[kMaxTreeSteps + 2];
        const auto prefix = field.prefix_of(s, i);
        std::copy(prefix.begin(), prefix.end(), path);
        const double v = gs.value(s, i, path);
        res[i] = std::abs(v - field.value[static_cast<std::size_t>(s)][i]);
    });
    return *std::max_element(res.begin(), res.end());
}

namespace {

double pairwise_reduce(double* v, std::size_t n) {
    // n is a power of two; halve in place, matching the solver's nesting
    for (std::size_t len = n; len > 1; len /= 2)
        for (std::size_t i = 0; i < len / 2; ++i) v[i] = 0.5 * (v[2 * i + 1] + v[2 * i]);
    return v[0];
}

double enumerate_flat(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                      double delta, int m, std::uint64_t total_policies) {
    const int n = grid.steps;
    const int node_count = (1 << n) - 1;
    std::vector<int> digit(static_cast<std::size_t>(node_count), 0);
    const auto level_offset = [](int k) { return (1 << k) - 1; };
    double best = kNegInf;
    std::vector<double> leaf_vals(std::size_t{1} << n);
    double path[kMaxTreeSteps + 2];
    for (std::uint64_t p = 0; p < total_policies; ++p) {
        for (std::uint64_t leaf = 0; leaf < (std::uint64_t{1} << n); ++leaf) {
            path[0] = 0.0;
            std::uint64_t node = 0;
            for (int k = 0; k < n; ++k) {
                const auto iv =
                    domain.at(k, std::span<const double>(path, static_cast<std::size_t>(k) + 1));
                const double lo = iv.lo + delta;
                const double hi = iv.hi - delta;
                if (!(lo < hi)) throw_infeasible(k, node);
                const int j = digit[static_cast<std::size_t>(level_offset(k)) + node];
                const double a = grid_point(lo, hi, hi - lo, m, j);
                const bool up = (leaf >> (n - 1 - k)) & 1u;
                const double st = std::sqrt(a * grid.dt);
                path[k + 1] = path[k] + (up ? st : -st);
                node = (node << 1) | (up ? 1u : 0u);
            }
            leaf_vals[leaf] =
                payoff.evaluate(std::span<const double>(path, static_cast<std::size_t>(n) + 1));
        }
        best = std::max(best, pairwise_reduce(leaf_vals.data(), leaf_vals.size()));
        // odometer step over the policy digits
        for (int i = 0; i < node_count; ++i) {
            if (++digit[static_cast<std::size_t>(i)] < m) break;
            digit[static_cast<std::size_t>(i)] = 0;
        }
    }
    return best;
}

// Exhaustive maximum via independent subtree enumeration: the choices below
// the two children of a node range over disjoint coordinate blocks, so the
// maximum over full assignments factors into nested one-node maxima.
double enumerate_recursive(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                           double delta, int m, int k, std::uint64_t node, double* path) {
    const int n = grid.steps;
    if (k == n)
        return payoff.evaluate(std::span<const double>(path, static_cast<std::size_t>(n) + 1));
    const auto iv = domain.at(k, std::span<const double>(path, static_cast<std::size_t>(k) + 1));
    const double lo = iv.lo + delta;
    const double hi = iv.hi - delta;
    if (!(lo < hi)) throw_infeasible(k, node);
    double best = kNegInf;
    for (int j = 0; j < m; ++j) {
        const double a = grid_point(lo, hi, hi - lo, m, j);
        const double s = std::sqrt(a * grid.dt);
        const double x = path[k];
        path[k + 1] = x + s;
        const double vp = enumerate_recursive(payoff, domain, grid, delta, m, k + 1,
                                              (node << 1) | 1u, path);
        path[k + 1] = x - s;
        const double vm =
            enumerate_recursive(payoff, domain, grid, delta, m, k + 1, node << 1, path);
        const double v = 0.5 * (vp + vm);
        if (v > best) best = v;
    }
    return best;
}

} // namespace

double enumerate_policies(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                          double delta, int vol_points) {
    if (grid.steps > 4)
        throw RefusalError("policy enumeration is exhaustive and limited to 4 steps");
    if (vol_points < 2) throw ArgumentError("volatility grid needs at least two points");
    if (!(delta >= 0.0)) throw ArgumentError("delta must be nonnegative");
    const int node_count = (1 << grid.steps) - 1;
    double total = 1.0;
    for (int i = 0; i < node_count; ++i) total *= vol_points;
    if (total <= 2e6)
        return enumerate_flat(payoff, domain, grid, delta, vol_points,
                              static_cast<std::uint64_t>(total));
    double path[kMaxTreeSteps + 2];
    path[0] = 0.0;
    return enumerate_recursive(payoff, domain, grid, delta, vol_points, 0, 0, path);
}

SuffixPolicy SuffixPolicy::constant(const TimeGrid& grid, int from_step, double a) {
    if (from_step < 0 || from_step > grid.steps)
        throw ArgumentError("suffix policy: step outside grid");
    SuffixPolicy sp;
    sp.from_step = from_step;
    sp.alpha.resize(static_cast<std::size_t>(grid.steps - from_step));
    for (int j = 0; j < grid.steps - from_step; ++j)
        sp.alpha[static_cast<std::size_t>(j)].assign(std::size_t{1} << j, a);
    return sp;
}

SuffixPolicy SuffixPolicy::tail_of(const Policy& policy, int from_step, std::uint64_t node) {
    const int n = policy.grid.steps;
    if (from_step < 0 || from_step > n) throw ArgumentError("suffix policy: step outside grid");
    SuffixPolicy sp;
    sp.from_step = from_step;
    sp.alpha.resize(static_cast<std::size_t>(n - from_step));
    for (int j = 0; j < n - from_step; ++j) {
        auto& row = sp.alpha[static_cast<std::size_t>(j)];
        row.resize(std::size_t{1} << j);
        for (std::uint64_t sub = 0; sub < row.size(); ++sub)
            row[sub] = policy.alpha_at(from_step + j, (node << j) | sub);
    }
    return sp;
}

Policy paste_policies(const Policy& base, int t, const std::vector<NodePredicate>& cells,
                      const std::vector<const SuffixPolicy*>& replacements,
                      const DomainProcess& domain) {
    const int n = base.grid.steps;
    if (t < 0 || t > n) throw ArgumentError("paste: level outside grid");
    if (cells.empty() || cells.size() != replacements.size())
        throw ArgumentError("paste: need one replacement slot per cell");
    const double zero = 0.0;
    if (subtree_margin(base, domain, 0, 0, std::span<const double>(&zero, 1)).margin < 0.0)
        throw ArgumentError("paste: base policy leaves the volatility band");
    for (const SuffixPolicy* sp : replacements) {
        if (!sp) continue;
        if (sp->from_step != t || static_cast<int>(sp->alpha.size()) != n - t)
            throw StructuralError("paste: replacement suffix does not match the cut level");
        for (int j = 0; j < n - t; ++j)
            if (sp->alpha[static_cast<std::size_t>(j)].size() != (std::size_t{1} << j))
                throw StructuralError("paste: suffix level arrays must hold 2^j values");
    }

    const auto states = policy_states(base);
    const std::uint64_t nodes_t = std::uint64_t{1} << t;
    std::vector<int> cell_of(nodes_t, -1);
    std::vector<std::vector<double>> prefixes(nodes_t);
    for (std::uint64_t node = 0; node < nodes_t; ++node) {
        auto& pre = prefixes[node];
        pre.resize(static_cast<std::size_t>(t) + 1);
        for (int j = 0; j <= t; ++j)
            pre[static_cast<std::size_t>(j)] = states[static_cast<std::size_t>(j)][node >> (t - j)];
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!cells[c](std::span<const double>(pre.data(), pre.size()))) continue;
            if (cell_of[node] >= 0)
                throw ArgumentError("paste: cells overlap at node " + std::to_string(node));
            cell_of[node] = static_cast<int>(c);
        }
        if (cell_of[node] < 0)
            throw ArgumentError("paste: cells do not cover node " + std::to_string(node));
    }

    Policy out = base;
    out.margin_known = false;
    for (int k = t; k < n; ++k) {
        auto& row = out.alpha[static_cast<std::size_t>(k)];
        const std::uint64_t mask = (std::uint64_t{1} << (k - t)) - 1;
        for (std::uint64_t node = 0; node < row.size(); ++node) {
            const SuffixPolicy* sp = replacements[static_cast<std::size_t>(cell_of[node >> (k - t)])];
            if (sp) row[node] = sp->alpha[static_cast<std::size_t>(k - t)][node & mask];
        }
    }
    for (std::uint64_t node = 0; node < nodes_t; ++node) {
        if (!replacements[static_cast<std::size_t>(cell_of[node])]) continue;
        const auto& pre = prefixes[node];
        const auto rep = subtree_margin(out, domain, t, node,
                                        std::span<const double>(pre.data(), pre.size()));
        if (rep.margin < 0.0)
            throw ArgumentError("paste: replacement inadmissible on its cell at node " +
                                std::to_string(node));
    }
    admissibility_margin(out, domain);
    return out;
}

std::vector<Policy> upward_filtering_sequence(const Payoff& payoff, const DomainProcess& domain,
                                              int t, const std::vector<Policy>& inputs) {
    if (inputs.empty()) throw ArgumentError("upward filtering needs at least one policy");
    const TimeGrid grid = inputs[0].grid;
    const int n = grid.steps;
    if (t < 0 || t > n) throw ArgumentError("upward filtering: level outside grid");
    for (const Policy& p : inputs) {
        if (p.grid.steps != n) throw StructuralError("upward filtering: policies on mixed grids");
        for (int k = 0; k < t; ++k)
            if (p.alpha[static_cast<std::size_t>(k)] != inputs[0].alpha[static_cast<std::size_t>(k)])
                throw ArgumentError("upward filtering: policies must share their history before t");
        const double zero = 0.0;
        if (subtree_margin(p, domain, 0, 0, std::span<const double>(&zero, 1)).margin < 0.0)
            throw ArgumentError("upward filtering: input policy leaves the volatility band");
    }
    std::vector<Policy> seq;
    seq.reserve(inputs.size());
    Policy cur = inputs[0];
    admissibility_margin(cur, domain);
    seq.push_back(cur);
    std::vector<double> cond_cur = conditional_values(cur, payoff, t);
    for (std::size_t i = 1; i < inputs.size(); ++i) {
        const Policy& p = inputs[i];
        const std::vector<double> cond_p = conditional_values(p, payoff, t);
        Policy merged = cur;
        merged.margin_known = false;
        for (std::uint64_t node = 0; node < cond_cur.size(); ++node) {
            if (!(cond_p[node] > cond_cur[node])) continue;
            for (int k = t; k < n; ++k) {
                const std::uint64_t lo_bits = std::uint64_t{1} << (k - t);
                for (std::uint64_t sub = 0; sub < lo_bits; ++sub) {
                    const std::uint64_t full = (node << (k - t)) | sub;
                    merged.alpha[static_cast<std::size_t>(k)][full] =
                        p.alpha[static_cast<std::size_t>(k)][full];
                }
            }
            cond_cur[node] = cond_p[node];
        }
        admissibility_margin(merged, domain);
        cur = merged;
        seq.push_back(cur);
    }
    return seq;
}

} // namespace rgexpect
