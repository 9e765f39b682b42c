#pragma once

#include <stdexcept>
#include <string>

namespace dds {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A series that the operation needs is divergent (e.g. rho * s <= 1).
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// A finite scan horizon ran out before the requested property was found.
class HorizonExceeded : public Error {
public:
    using Error::Error;
};

/// Exact arithmetic was requested beyond the configured depth.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// A schedule would overflow 64-bit digit labels.
class DepthError : public Error {
public:
    using Error::Error;
};

/// No admissible object exists for the given parameters.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// The queried word has zero mass under the construction's measure.
/// Kept separate from a numeric -inf so callers can tell the two apart.
class NotInSupport : public Error {
public:
    using Error::Error;
};

/// A growth profile fails one of the admissibility clauses on its horizon.
class NotAdmissible : public Error {
public:
    NotAdmissible(std::string clause, const std::string& what)
        : Error(what), clause_(std::move(clause)) {}
    const std::string& clause() const noexcept { return clause_; }

private:
    std::string clause_;
};

/// Exhaustive enumeration would exceed its size budget.
class EnumerationSize : public Error {
public:
    using Error::Error;
};

/// The tilt threshold search exceeded its cap.
class TiltThreshold : public Error {
public:
    using Error::Error;
};

}  // namespace dds
