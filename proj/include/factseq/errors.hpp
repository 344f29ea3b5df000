#pragma once

#include <stdexcept>
#include <string>

namespace factseq {

// Resource limits (caps, input-size bounds) as opposed to bad arguments.
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative numeric procedure failed to converge; residual is the final error.
struct numeric_error : std::runtime_error {
    double residual;
    numeric_error(const std::string& what, double res)
        : std::runtime_error(what + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

// Theorem-backed internal invariant failed; indicates a construction bug.
struct consistency_error : std::logic_error {
    explicit consistency_error(const std::string& what) : std::logic_error(what) {}
};

} // namespace factseq
