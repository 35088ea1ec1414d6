#pragma once

#include <stdexcept>
#include <string>

namespace remedy {

/// Base class of every error raised by the runtime.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced service (or transaction) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Trace source could not be read at all.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: unknown format tag, bad thresholds, bad scenario.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A textual value (service ref, pattern, enum tag) failed to parse.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A transaction document violates the ISA schema. The message names the
/// first offending field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's precondition (e.g. inverse of a
/// non-reversible action).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The write-ahead log is damaged somewhere other than its final record.
class WalCorruptionError : public Error {
 public:
  using Error::Error;
};

/// Harm evaluation was asked for without enough pre-action telemetry.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Raised by actuator backends that cannot be reached. The kernel treats it
/// as an action failure.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace remedy
