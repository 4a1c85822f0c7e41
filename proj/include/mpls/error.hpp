#pragma once

#include <stdexcept>
#include <string>

namespace mpls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: dimension mismatches, non-finite data, invalid configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a result (singular systems,
/// non-finite iterates).
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace mpls
