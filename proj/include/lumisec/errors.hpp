// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace lumisec {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario config is missing a field or fails to parse.
struct MalformedConfig : Error {
  using Error::Error;
};

/// A position lies outside the room or violates a placement constraint.
struct GeometryError : Error {
  using Error::Error;
};

/// The requested IRS grid does not fit on the wall after centering.
struct GridDoesNotFit : GeometryError {
  using GeometryError::GeometryError;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Two points coincide where a finite separation is required.
struct DegenerateGeometry : Error {
  using Error::Error;
};

/// Panel doubling moved the quadrature result by more than the tolerance.
struct IntegrationNotConverged : Error {
  using Error::Error;
};

/// A secrecy computation was asked to run with no eavesdroppers.
struct EmptyEveSet : Error {
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured cap.
struct SearchSpaceTooLarge : Error {
  using Error::Error;
};

/// A training loss or network parameter became NaN/Inf.
struct NonFiniteLoss : Error {
  using Error::Error;
};

}  // namespace lumisec
