#pragma once

#include <cstdint>
#include <string>

namespace dynagg {

enum class SizingKind { logarithm, power, linear, fixed };

/// Maps scene point count N to skeleton node count M. Four families:
///   logarithm: a + b*log10(n)
///   power:     coefficient * n^exponent
///   linear:    slope * n
///   fixed:     value
/// Every evaluation is rounded to the nearest integer and clamped to
/// [m_min, m_max].
struct SizingPolicy {
  SizingKind kind = SizingKind::logarithm;
  double a = -6.0;
  double b = 70.0;
  // Power/linear coefficients default to agreeing with the logarithm
  // family at n = 1e5 before clamping.
  double coefficient = 6.1173;
  double exponent = 0.35;
  double slope = 3.44e-3;
  std::uint32_t value = 256;
  std::uint32_t m_min = 8;
  std::uint32_t m_max = 256;

  /// Throws ConfigError on non-finite or non-monotone parameters, or
  /// when the [m_min, m_max] interval is empty.
  void validate() const;

  static SizingPolicy logarithm_default() { return SizingPolicy{}; }
  static SizingPolicy fixed_size(std::uint32_t m);
};

std::uint32_t skeleton_size(const SizingPolicy& policy, std::uint64_t n);

std::string to_string(SizingKind kind);

}  // namespace dynagg
