#pragma once

#include <stdexcept>
#include <string>

namespace arpguard {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text or bytes (trace lines, CSV rows, pcap records, model files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input that parses but violates a data contract (empty trace, single-class labels, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace arpguard
