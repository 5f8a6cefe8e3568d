#pragma once

#include <stdexcept>
#include <string>

namespace babylon {

// Input text did not conform to a file format. Carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

// Structurally well-formed input that violates a model invariant
// (asymmetric duplicates, nonzero diagonal, indices out of range, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problem size exceeds the exact-enumeration cap; the caller should refuse
// rather than silently run for hours.
class CapExceededError : public ValidationError {
public:
    CapExceededError(int n, int cap)
        : ValidationError("system size n=" + std::to_string(n) +
                          " exceeds the enumeration cap " + std::to_string(cap)),
          n_(n), cap_(cap) {}

    int n() const noexcept { return n_; }
    int cap() const noexcept { return cap_; }

private:
    int n_;
    int cap_;
};

// A computation produced a non-finite or otherwise unusable result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A matrix that should be positive semidefinite is not (within tolerance).
class NotPsdError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace babylon
