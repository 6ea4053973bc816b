#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdetaylor {

/// Malformed textual input. `position` is the byte offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t position)
        : std::runtime_error(std::move(message)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// A variable index outside 1..d of the owning problem.
class UnknownVariable : public std::runtime_error {
public:
    UnknownVariable(int index, int dimension)
        : std::runtime_error("unknown variable x" + std::to_string(index) +
                             " (dimension is " + std::to_string(dimension) + ")"),
          index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

/// log/sqrt of a negative argument during point evaluation.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Mismatched vector/assignment length.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Stochastic index variables are not dense 1..K, or a Wiener index is out of range.
class IndexError : public std::runtime_error {
public:
    explicit IndexError(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Operation requires the other calculus (e.g. drift conversion of an Ito system).
class CalculusError : public std::runtime_error {
public:
    explicit CalculusError(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Requested order above the configured hard cap.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(int requested, int cap)
        : std::runtime_error("order " + std::to_string(requested) +
                             " exceeds the hard cap " + std::to_string(cap)),
          requested_(requested), cap_(cap) {}
    int requested() const { return requested_; }
    int cap() const { return cap_; }

private:
    int requested_;
    int cap_;
};

/// A Monte Carlo path left the trusted magnitude range.
class NumericalBlowup : public std::runtime_error {
public:
    explicit NumericalBlowup(long long pathIndex)
        : std::runtime_error("path " + std::to_string(pathIndex) +
                             " exceeded magnitude 1e12"),
          pathIndex_(pathIndex) {}
    long long pathIndex() const { return pathIndex_; }

private:
    long long pathIndex_;
};

/// Too few grid points for a convergence fit.
class InsufficientGrid : public std::runtime_error {
public:
    explicit InsufficientGrid(std::string message) : std::runtime_error(std::move(message)) {}
};

} // namespace sdetaylor
