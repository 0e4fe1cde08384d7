#pragma once

#include <stdexcept>
#include <string>

namespace collision_lab {

/// Base class for every error thrown by this library. Catching this type is
/// sufficient to map any library failure onto a process exit code.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// A structurally invalid request: the inputs can never be satisfied
/// (e.g. asking for a collision waiting time when no cell holds r elements).
class invalid_query_error : public error {
public:
    using error::error;
};

/// An argument outside the mathematical domain of the operation
/// (e.g. evaluating a CDF at t outside [0,1], or a codomain of size one).
class domain_error : public error {
public:
    using error::error;
};

/// An index or count outside the valid range of the operation
/// (e.g. querying a without-replacement process beyond n draws).
class out_of_range_error : public error {
public:
    using error::error;
};

/// The request is valid but exceeds a configured resource ceiling
/// (e.g. a memoized table cap or an enumeration size guard).
class resource_error : public error {
public:
    using error::error;
};

/// A numerical routine failed to reach the requested accuracy. Carries the
/// accuracy that was actually achieved so callers can decide to accept it.
class numeric_error : public error {
public:
    numeric_error(const std::string& what, double achieved)
        : error(what), achieved_tolerance_(achieved) {}

    [[nodiscard]] double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

} // namespace collision_lab
