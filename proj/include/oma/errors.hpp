#pragma once

#include <stdexcept>
#include <string>

namespace oma {

/// Bad user input or a violated precondition. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
  public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A numeric routine failed to converge or produced an unusable result.
/// Maps to CLI exit code 4.
class NumericalFailure : public std::runtime_error {
  public:
    explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

/// Half-power crossings not bracketed (overlapping modes or band edge).
class BandwidthUnresolved : public NumericalFailure {
  public:
    explicit BandwidthUnresolved(const std::string& msg) : NumericalFailure(msg) {}
};

/// Filesystem problem. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public IoError {
  public:
    ParseError(const std::string& msg, long line)
        : IoError(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

}  // namespace oma
