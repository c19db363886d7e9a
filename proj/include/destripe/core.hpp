// SPDX-License-Identifier: Apache-2.0
/**
 * @file   core.hpp
 * @brief  Error types and version string shared by every destripe module.
 */

#ifndef DESTRIPE_CORE_HPP_
#define DESTRIPE_CORE_HPP_

#include <stdexcept>
#include <string>

namespace destripe {

inline constexpr const char *kVersion = "0.1.0";

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions, bad arguments, violated preconditions.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Unreadable, unwritable or malformed files.
class IoError : public Error {
public:
  using Error::Error;
};

/// A file was readable but is not in a supported format.
class FormatError : public IoError {
public:
  using IoError::IoError;
};

/// Unknown keys or unparsable values in a config file or on the command line.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Non-finite values met during a numeric computation.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace destripe

#endif // DESTRIPE_CORE_HPP_
