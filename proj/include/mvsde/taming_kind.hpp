#pragma once

#include <cmath>
#include <cstdint>

namespace mvsde {

enum class TamingKind : std::uint8_t { Identity, DriftTamed, Modified, Tanh, Sin, FullyTamed };

/// Step-size dependent scalars of one taming map, precomputed once per step so
/// every kernel variant sees identical inputs.
struct TamingCoefficients {
  TamingKind kind = TamingKind::Identity;
  double h = 0.0;
  /// h^lambda (DriftTamed), h^alpha (Tanh/Sin), h^(1/2) (FullyTamed), h (Modified).
  double scale = 0.0;
  /// FullyTamed: exponent applied to |x|^2, i.e. 2*rho.
  double state_exponent = 0.0;
  /// FullyTamed: state_exponent as an integer when it is one (and small), else -1.
  int state_exponent_int = -1;
};

namespace detail {

/// base^n by binary exponentiation; the multiplication sequence is part of the
/// kernel contract (the AVX2 path repeats it lane-wise).
inline double int_pow(double base, int n) noexcept {
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

inline double state_power(const TamingCoefficients& c, double norm_sq) noexcept {
  if (c.state_exponent_int >= 0) return int_pow(norm_sq, c.state_exponent_int);
  return std::pow(norm_sq, c.state_exponent);
}

/// One-dimensional taming: v is the coefficient value, x_norm_sq = |x|^2.
inline double tame_scalar(const TamingCoefficients& c, double v, double x_norm_sq) noexcept {
  switch (c.kind) {
    case TamingKind::Identity:
      return v;
    case TamingKind::DriftTamed:
      return v / (1.0 + c.scale * std::sqrt(v * v));
    case TamingKind::Modified:
      return v / (1.0 + c.scale * (v * v));
    case TamingKind::Tanh:
      return std::tanh(c.scale * v) / c.scale;
    case TamingKind::Sin:
      return std::sin(c.scale * v) / c.scale;
    case TamingKind::FullyTamed:
      return v / (1.0 + c.scale * state_power(c, x_norm_sq));
  }
  return v;
}

}  // namespace detail
}  // namespace mvsde
