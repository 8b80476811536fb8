#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rgexpect/common.hpp"
#include "rgexpect/piecewise_linear.hpp"

namespace rgexpect {

/// Uniform partition of [0, T] into `steps` intervals. All discrete objects
/// (paths, policies, value fields) are indexed on this grid.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;
    double dt = 1.0;

    TimeGrid() = default;
    TimeGrid(double horizon_, int steps_);
};

/// A prefix of the canonical process on the grid: values at steps 0..k with
/// values[0] == 0. A full path has steps+1 entries.
struct DiscretePath {
    TimeGrid grid;
    std::vector<double> values;

    DiscretePath() = default;
    DiscretePath(const TimeGrid& grid_, std::vector<double> values_);

    int last_step() const { return static_cast<int>(values.size()) - 1; }
    std::span<const double> span() const { return {values.data(), values.size()}; }
};

/// Tree-node index: a sequence of +-1 signs. Nodes at level k are ordered
/// lexicographically with -1 before +1, which coincides with the natural
/// binary order when -1 reads as bit 0, most significant bit first.
struct SignSequence {
    std::vector<int> bits; // entries in {-1, +1}

    SignSequence() = default;
    explicit SignSequence(std::vector<int> bits_);

    int level() const { return static_cast<int>(bits.size()); }
    std::uint64_t index() const;
    static SignSequence from_index(int level, std::uint64_t index);
};

/// Bounded payoff functional on full paths, with an optional modulus of
/// continuity certificate in the path sup-norm.
struct Payoff {
    enum class Terminal { none, square, abs_value, cosine, table, generic };

    std::function<double(std::span<const double>)> evaluate;
    double bound = 0.0;
    std::function<double(double)> modulus; // empty = no certificate

    // Set when the payoff depends on the terminal value only; the solver uses
    // it to collapse the path state to the current value.
    std::function<double(double)> terminal;
    Terminal terminal_kind = Terminal::none;
    PiecewiseLinear terminal_table;

    bool is_terminal() const { return terminal_kind != Terminal::none; }
};

// --- payoff constructors ---------------------------------------------------

/// max |x| reachable on the tree when the volatility stays below vol_bound.
double max_abs_state(const TimeGrid& grid, double vol_bound);

Payoff constant_payoff(double c);
Payoff terminal_payoff(std::function<double(double)> f, double bound,
                       std::function<double(double)> modulus);
Payoff terminal_square(double xmax);
Payoff terminal_abs(double xmax);
Payoff terminal_cos();
Payoff terminal_table(PiecewiseLinear f);
Payoff running_max_payoff(double xmax);
Payoff asian_mean_payoff(double xmax);
Payoff path_payoff(std::function<double(std::span<const double>)> f, double bound,
                   std::function<double(double)> modulus);

/// c*X and X+Y with bounds and moduli combined accordingly.
Payoff payoff_scale(const Payoff& p, double c);
Payoff payoff_add(const Payoff& p, const Payoff& q);
/// |X - Y|^p for p >= 1.
Payoff payoff_abs_diff_pow(const Payoff& x, const Payoff& y, double p);

// --- operations ------------------------------------------------------------

/// Concatenation at the prefix's last step: the suffix (starting at 0) is
/// translated by the prefix's terminal value and appended. Associative.
DiscretePath concat(const DiscretePath& prefix, const DiscretePath& suffix);

/// The payoff on suffix paths obtained by pinning the first `k` steps to
/// `prefix`: suffix -> xi(concat(prefix, suffix)). Bound and modulus carry over.
Payoff shift_payoff(const Payoff& xi, int k, const DiscretePath& prefix);

/// max_{s<=j<=t} |values[j]|.
double sup_norm(const DiscretePath& path, int from, int to);

/// All 2^k sign sequences of length k in lexicographic order.
std::vector<SignSequence> enumerate_nodes(const TimeGrid& grid, int level);

/// Volatility lookup for path realization; NaN means "undefined here".
using VolFn = std::function<double(int step, std::span<const double> prefix)>;

/// Forward realization x_{j+1} = x_j + sign_j * sqrt(vol_j * dt). The
/// quadratic-variation density realized over step j is exactly vol_j.
DiscretePath realize_path(const SignSequence& signs, const VolFn& vol, const TimeGrid& grid);

} // namespace rgexpect
