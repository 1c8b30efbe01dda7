#pragma once

#include <stdexcept>
#include <string>

namespace gfsi {

/// Malformed user input: bad files, invalid graphs, inconsistent requests.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerical machinery on otherwise valid input.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The truncation set carries no probability mass even in log space.
class DegenerateTruncation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The interval sweep could not find a matching left/right endpoint
/// within the allowed number of step halvings.
class StalledSearch : public NumericalError {
public:
    StalledSearch(const std::string& what, double boundary)
        : NumericalError(what), boundary_(boundary) {}
    double boundary() const noexcept { return boundary_; }

private:
    double boundary_;
};

/// Root bracketing for a confidence bound failed.
class NoRoot : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A polyhedron slice came out empty for data that should lie inside it.
class InconsistentInterval : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace gfsi
