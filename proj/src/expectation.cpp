#include "rgexpect/expectation.hpp"

#include <algorithm>
#include <cmath>

#include "rgexpect/parallel.hpp"
#include "rgexpect/rng.hpp"

namespace rgexpect {

ValueField expectation_field(const Payoff& X, const DomainProcess& domain, const TimeGrid& grid,
                             double delta, int vol_points) {
    return solve(X, domain, grid, delta, vol_points).field;
}

double lp_norm(const Payoff& X, double p, const DomainProcess& domain, const TimeGrid& grid,
               double delta, int vol_points) {
    if (!(p >= 1.0)) throw ArgumentError("lp_norm: p must be at least 1");
    const Payoff abs_pow = payoff_abs_diff_pow(X, constant_payoff(0.0), p);
    return std::pow(root_value(abs_pow, domain, grid, delta, vol_points), 1.0 / p);
}

AnchorSet anchors_of(const ValueField& field, int t) {
    if (t < 0 || t > field.grid.steps) throw ArgumentError("anchors_of: level outside grid");
    AnchorSet a;
    a.t = t;
    a.grid = field.grid;
    a.prefixes.resize(std::size_t{1} << t);
    for (std::uint64_t node = 0; node < a.prefixes.size(); ++node)
        a.prefixes[node] = field.prefix_of(t, node);
    return a;
}

std::vector<double> expectation_at(const Payoff& Y, const AnchorSet& anchors,
                                   const DomainProcess& domain, double delta, int vol_points) {
    std::vector<double> out(anchors.prefixes.size());
    parallel_for(out.size(), [&](std::uint64_t node) {
        const auto& pre = anchors.prefixes[node];
        out[node] = anchored_value(Y, domain, anchors.grid, delta, vol_points, anchors.t, node,
                                   std::span<const double>(pre.data(), pre.size()));
    });
    return out;
}

namespace {

// Verifies by sampling that the payoff reads only the first t steps.
void require_level_measurable(const Payoff& p, const TimeGrid& grid, int t, double volmax) {
    const int n = grid.steps;
    for (std::uint64_t seed = 0; seed < 32; ++seed) {
        std::vector<double> a(static_cast<std::size_t>(n) + 1, 0.0);
        for (int j = 1; j <= n; ++j)
            a[static_cast<std::size_t>(j)] =
                a[static_cast<std::size_t>(j) - 1] +
                rng::uniform(rng::stream(seed, static_cast<std::uint64_t>(j)), -1.0, 1.0) *
                    std::sqrt(volmax * grid.dt);
        std::vector<double> b = a;
        for (int j = t + 1; j <= n; ++j)
            b[static_cast<std::size_t>(j)] =
                b[static_cast<std::size_t>(t)] +
                rng::uniform(rng::stream(seed, 100 + static_cast<std::uint64_t>(j)), -1.0, 1.0);
        const double va = p.evaluate({a.data(), a.size()});
        const double vb = p.evaluate({b.data(), b.size()});
        if (std::abs(va - vb) > 1e-12)
            throw ArgumentError("payoff is not measurable at the requested level");
    }
}

// Value of an F_t-measurable payoff at an anchor: evaluate on the constant
// extension of the prefix (later coordinates are never read).
double anchor_eval(const Payoff& p, const TimeGrid& grid, std::span<const double> prefix) {
    std::vector<double> full(static_cast<std::size_t>(grid.steps) + 1, prefix.back());
    std::copy(prefix.begin(), prefix.end(), full.begin());
    return p.evaluate({full.data(), full.size()});
}

// sup_P L^p(P) norm of an F_t-measurable node function: every admissible law
// gives the sign variables the same uniform weights up to t, so the supremum
// is the plain tree average; accumulated pairwise like the solver.
double level_lp_norm(std::vector<double> abs_pow_values, double p) {
    std::vector<double>& v = abs_pow_values;
    for (std::size_t len = v.size(); len > 1; len /= 2)
        for (std::size_t i = 0; i < len / 2; ++i) v[i] = 0.5 * (v[2 * i + 1] + v[2 * i]);
    return std::pow(v[0], 1.0 / p);
}

} // namespace

PropertyReport property_suite(const Payoff& X, const Payoff& X_meas, const NodeFn& eta, int t,
                              const DomainProcess& domain, const TimeGrid& grid, double delta,
                              int vol_points, double tol) {
    require_level_measurable(X_meas, grid, t, domain.max_hi());
    const auto base = solve(X, domain, grid, delta, vol_points);
    const auto anchors = anchors_of(base.field, t);
    const std::size_t nodes = anchors.prefixes.size();

    const auto Et = [&](const Payoff& Y) {
        return expectation_at(Y, anchors, domain, delta, vol_points);
    };

    const std::vector<double>& e_x =
        base.field.value[static_cast<std::size_t>(t)]; // E_t(X) on its own tree
    const std::vector<double> e_negx = Et(payoff_scale(X, -1.0));

    PropertyReport rep;
    const auto add_row = [&](const std::string& name, double worst) {
        rep.rows.push_back({name, worst, worst <= tol});
    };

    { // (i) monotonicity: X <= X + |X'| pointwise
        const Payoff bigger = payoff_add(X, payoff_abs_diff_pow(X_meas, constant_payoff(0.0), 1.0));
        const std::vector<double> e_big = Et(bigger);
        double worst = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) worst = std::max(worst, e_x[i] - e_big[i]);
        add_row("monotonicity", worst);
    }
    { // (ii) translation by an F_t-measurable summand
        const std::vector<double> e_sum = Et(payoff_add(X, X_meas));
        double worst = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            const double shift = anchor_eval(X_meas, grid, {anchors.prefixes[i].data(),
                                                            anchors.prefixes[i].size()});
            worst = std::max(worst, std::abs(e_sum[i] - (e_x[i] + shift)));
        }
        add_row("translation", worst);
    }
    { // (iii) positive homogeneity with an F_t weight
        double worst = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            const auto& pre = anchors.prefixes[i];
            const double c = eta({pre.data(), pre.size()});
            const double lhs = anchored_value(payoff_scale(X, c), domain, grid, delta, vol_points,
                                              t, i, {pre.data(), pre.size()});
            const double rhs = std::max(c, 0.0) * e_x[i] + std::max(-c, 0.0) * e_negx[i];
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        add_row("scaling", worst);
    }
    { // (iv) difference subadditivity
        const std::vector<double> e_xm = Et(X_meas);
        const std::vector<double> e_diff = Et(payoff_add(X, payoff_scale(X_meas, -1.0)));
        double worst = 0.0;
        for (std::size_t i = 0; i < nodes; ++i)
            worst = std::max(worst, (e_x[i] - e_xm[i]) - e_diff[i]);
        add_row("difference_subadditivity", worst);
    }
    { // (v) additivity when E_t(-X') = -E_t(X')
        const std::vector<double> e_xm = Et(X_meas);
        const std::vector<double> e_negxm = Et(payoff_scale(X_meas, -1.0));
        double premise = 0.0;
        for (std::size_t i = 0; i < nodes; ++i)
            premise = std::max(premise, std::abs(e_negxm[i] + e_xm[i]));
        const std::vector<double> e_sum = Et(payoff_add(X, X_meas));
        double worst = premise;
        for (std::size_t i = 0; i < nodes; ++i)
            worst = std::max(worst, std::abs(e_sum[i] - (e_x[i] + e_xm[i])));
        add_row("additivity_under_linearity", worst);
    }
    { // (vi) L^p contraction at p = 1 and 2
        double worst = 0.0;
        const std::vector<double> e_xm = Et(X_meas);
        for (double p : {1.0, 2.0}) {
            std::vector<double> diffs(nodes);
            for (std::size_t i = 0; i < nodes; ++i)
                diffs[i] = std::pow(std::abs(e_x[i] - e_xm[i]), p);
            const double lhs = level_lp_norm(std::move(diffs), p);
            const double rhs = lp_norm(payoff_add(X, payoff_scale(X_meas, -1.0)), p, domain, grid,
                                       delta, vol_points);
            worst = std::max(worst, lhs - rhs);
        }
        add_row("lp_contraction", worst);
    }
    rep.all_pass = std::all_of(rep.rows.begin(), rep.rows.end(),
                               [](const PropertyReport::Row& r) { return r.pass; });
    return rep;
}

double time_consistency_check(const Payoff& X, int s, int t, const DomainProcess& domain,
                              const TimeGrid& grid, double delta, int vol_points) {
    if (s > t) throw ArgumentError("time consistency: need s <= t");
    const auto r = solve(X, domain, grid, delta, vol_points);
    return dpp_check(r.field, X, domain, delta, vol_points, s, t);
}

bool lipschitz_check(const Payoff& xi, const Payoff& psi, int t, double p,
                     const DomainProcess& domain, const TimeGrid& grid, double delta,
                     int vol_points, double tol) {
    if (!(p >= 1.0)) throw ArgumentError("lipschitz_check: p must be at least 1");
    const auto base = solve(xi, domain, grid, delta, vol_points);
    const auto anchors = anchors_of(base.field, t);
    const std::vector<double>& e_xi = base.field.value[static_cast<std::size_t>(t)];
    const std::vector<double> e_psi = expectation_at(psi, anchors, domain, delta, vol_points);
    std::vector<double> diffs(e_psi.size());
    for (std::size_t i = 0; i < diffs.size(); ++i)
        diffs[i] = std::pow(std::abs(e_xi[i] - e_psi[i]), p);
    const double lhs = level_lp_norm(std::move(diffs), p);
    const double rhs =
        lp_norm(payoff_add(xi, payoff_scale(psi, -1.0)), p, domain, grid, delta, vol_points);
    return lhs <= rhs + tol;
}

} // namespace rgexpect
