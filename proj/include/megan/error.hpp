// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_ERROR_HPP
#define MEGAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace megan {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor shape disagreement; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

/// Numeric domain violation (log of nonpositive, exp overflow); message names the index.
struct DomainError : Error {
    using Error::Error;
};

/// Precondition violation on an operation contract.
struct ContractError : Error {
    using Error::Error;
};

/// Invalid configuration; message names the offending key or path.
struct ConfigError : Error {
    using Error::Error;
};

/// Filesystem or serialization failure; message names the path.
struct IoError : Error {
    using Error::Error;
};

/// Non-finite loss during training; message names the phase.
struct TrainAbort : Error {
    using Error::Error;
};

}  // namespace megan

#endif
