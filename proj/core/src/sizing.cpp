#include "dynagg/sizing.hpp"

#include <algorithm>
#include <cmath>

#include "dynagg/errors.hpp"

namespace dynagg {

SizingPolicy SizingPolicy::fixed_size(std::uint32_t m) {
  SizingPolicy p;
  p.kind = SizingKind::fixed;
  p.value = m;
  return p;
}

void SizingPolicy::validate() const {
  if (m_min < 1 || m_min > m_max)
    throw ConfigError("sizing: need 1 <= m_min <= m_max");
  switch (kind) {
    case SizingKind::logarithm:
      if (!std::isfinite(a) || !std::isfinite(b))
        throw ConfigError("sizing.a/sizing.b must be finite");
      if (!(b > 0.0)) throw ConfigError("sizing.b must be positive");
      break;
    case SizingKind::power:
      if (!std::isfinite(coefficient) || !std::isfinite(exponent))
        throw ConfigError("sizing.coefficient/sizing.exponent must be finite");
      if (!(coefficient > 0.0) || !(exponent > 0.0))
        throw ConfigError("sizing.coefficient and sizing.exponent must be positive");
      break;
    case SizingKind::linear:
      if (!std::isfinite(slope)) throw ConfigError("sizing.slope must be finite");
      if (!(slope > 0.0)) throw ConfigError("sizing.slope must be positive");
      break;
    case SizingKind::fixed:
      if (value < 1) throw ConfigError("sizing.value must be >= 1");
      break;
  }
}

std::uint32_t skeleton_size(const SizingPolicy& policy, std::uint64_t n) {
  policy.validate();
  if (n < 1) throw ConfigError("skeleton_size: n must be >= 1");
  double raw = 0.0;
  switch (policy.kind) {
    case SizingKind::logarithm:
      raw = policy.a + policy.b * std::log10(static_cast<double>(n));
      break;
    case SizingKind::power:
      raw = policy.coefficient *
            std::pow(static_cast<double>(n), policy.exponent);
      break;
    case SizingKind::linear:
      raw = policy.slope * static_cast<double>(n);
      break;
    case SizingKind::fixed:
      raw = static_cast<double>(policy.value);
      break;
  }
  const double rounded = std::round(raw);
  const double clamped =
      std::clamp(rounded, static_cast<double>(policy.m_min),
                 static_cast<double>(policy.m_max));
  return static_cast<std::uint32_t>(clamped);
}

std::string to_string(SizingKind kind) {
  switch (kind) {
    case SizingKind::logarithm: return "logarithm";
    case SizingKind::power: return "power";
    case SizingKind::linear: return "linear";
    case SizingKind::fixed: return "static";
  }
  return "?";
}

}  // namespace dynagg
