// SPDX-License-Identifier: Apache-2.0
//
// starsim: link-level simulation and beamforming for simultaneously
// transmitting and reflecting reconfigurable surfaces.

#pragma once

#include <stdexcept>

namespace starsim {

/// Base class for all starsim errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An impedance denominator is (numerically) zero.
class SingularImpedance : public Error {
  public:
    using Error::Error;
};

/// Impedances are not purely imaginary, so a passive lossless element
/// cannot realize them.
class NotRealizable : public Error {
  public:
    using Error::Error;
};

/// Operating-protocol data is inconsistent with the requested operation.
class ProtocolMismatch : public Error {
  public:
    using Error::Error;
};

/// Carrier wavelength must be positive.
class InvalidWavelength : public Error {
  public:
    using Error::Error;
};

/// Vector dimensions disagree.
class LengthMismatch : public Error {
  public:
    using Error::Error;
};

/// A solver was invoked on a scenario shape it does not support.
class ScenarioMismatch : public Error {
  public:
    using Error::Error;
};

/// SINR targets cannot be met with bounded transmit power.
class InfeasibleTargets : public Error {
  public:
    using Error::Error;
};

/// An effective channel gain is too small to carry any rate.
class DegenerateChannel : public Error {
  public:
    using Error::Error;
};

/// A configuration value violates an invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A configuration file is syntactically malformed.
class ParseError : public Error {
  public:
    using Error::Error;
};

}  // namespace starsim
