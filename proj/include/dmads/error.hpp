#pragma once

#include <stdexcept>
#include <string>

namespace dmads {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A search space violates its own invariants (bounds, categories, neighbors).
class InvalidSpace : public Error {
public:
  using Error::Error;
};

/// A point does not match the arity or variable kinds of its space.
class StructuralError : public Error {
public:
  using Error::Error;
};

/// Too few (affinely independent) points to build a triangulation or interpolant.
class NotEnoughPoints : public Error {
public:
  using Error::Error;
};

class DimensionTooHigh : public Error {
public:
  using Error::Error;
};

class OutsideHull : public Error {
public:
  using Error::Error;
};

class SingularSystem : public Error {
public:
  using Error::Error;
};

/// The external blackbox violated the line protocol. Runs abort on it.
class ProtocolError : public Error {
public:
  using Error::Error;
};

/// Bad user configuration (CLI flags, driver settings, unknown names).
class ConfigError : public Error {
public:
  using Error::Error;
};

class InitialPointFailed : public Error {
public:
  using Error::Error;
};

/// Malformed history or input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace dmads
