// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mars {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input document failed schema or invariant validation. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The analysis declines to proceed: unsupported dependence regime,
// unbounded footprint, family blow-up guard. CLI exit code 2.
class RefusalError : public Error {
public:
    using Error::Error;
};

// Integer feasibility could not be decided within the implemented
// procedure's limits. Raised instead of guessing.
class UndecidedError : public Error {
public:
    using Error::Error;
};

} // namespace mars
