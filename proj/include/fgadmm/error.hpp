// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fgadmm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: frozen builder, bad ids, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// The declared graph cannot be frozen (orphan variables, empty graph).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An operator was evaluated outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed graph document or unknown operator kind.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced during an iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgadmm
