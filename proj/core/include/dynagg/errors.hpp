#pragma once

#include <stdexcept>
#include <string>

namespace dynagg {

/// Malformed input file (CSV/binary/JSON). Message names the offending
/// line or offset where available.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration value (bad enum name, non-finite parameter,
/// inconsistent bounds). Message names the field.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dimension or space-tag mismatch between operands.
class ShapeError : public std::runtime_error {
public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dynagg
