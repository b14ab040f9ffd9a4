#pragma once

#include <stdexcept>
#include <string>

namespace urnlab {

/// Structural problem with an urn model (bad core, reducible where
/// irreducible is required, non-integral replacement row, ...).
class model_error : public std::runtime_error {
public:
    explicit model_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (eigen-solver breakdown, method disagreement,
/// ambiguous eigenvalue clustering).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A stochastic path attempted an illegal removal.
class tenability_violation : public std::runtime_error {
public:
    explicit tenability_violation(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace urnlab
