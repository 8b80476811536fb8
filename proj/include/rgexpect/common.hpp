#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rgexpect {

/// Bad numeric argument (out-of-range parameter, inconsistent sizes chosen by the caller).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Structural mismatch between objects (path lengths, grid mismatch, policy not
/// covering a visited node).
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The volatility band has empty delta-interior at a reachable node; carries the
/// offending node so callers can report it.
struct InfeasibleError : std::runtime_error {
    int level;
    std::uint64_t node;
    InfeasibleError(const std::string& what, int level_, std::uint64_t node_)
        : std::runtime_error(what), level(level_), node(node_) {}
};

/// Requested computation exceeds the documented size envelope.
struct RefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical scheme produced a non-finite value.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rgexpect
