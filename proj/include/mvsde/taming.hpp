#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/taming_kind.hpp"

namespace mvsde {

/// Exponents (r1, r2, r3) of the consistency bounds
///   |T1(v,h) - v| <= L h^r1 |v|^r2,  |T2(v,h) - v| <= L h^r3 |v|^r2.
struct ConsistencyExponents {
  double r1 = 0.5;
  double r2 = 2.0;
  double r3 = 0.5;
};

/// A taming map (v, x, h) -> tamed v applied to drift values (T1) or to
/// diffusion columns (T2).
///
///   Identity    v
///   DriftTamed  v / (1 + h^lambda |v|)          on the drift; identity on diffusion
///   Modified    v / (1 + h |v|^2)
///   Tanh        h^-alpha tanh(h^alpha v)        componentwise
///   Sin         h^-alpha sin(h^alpha v)         componentwise
///   FullyTamed  v / (1 + h^(1/2) |x|^(4 rho))   x is the particle state
///
/// The rational maps use the Euclidean norm of the whole vector; tanh and sin
/// act per component. In one dimension both readings coincide.
class TamingOperator {
 public:
  static TamingOperator identity();
  static TamingOperator drift_tamed(double lambda = 0.5);
  static TamingOperator modified();
  static TamingOperator tanh(double alpha = 1.0);
  static TamingOperator sin(double alpha = 1.0);
  static TamingOperator fully_tamed(double rho);

  TamingKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double alpha() const noexcept { return alpha_; }
  double rho() const noexcept { return rho_; }

  /// (1/2, 2, 1/2) for Modified, Tanh and Sin; empty otherwise.
  std::optional<ConsistencyExponents> declared_h3() const;

  /// The map applied to diffusion columns; DriftTamed leaves the diffusion untouched.
  TamingOperator diffusion_counterpart() const;

  /// Short label used in file names: identity, dte0.5, me, te1, se0.5, fte.
  std::string label() const;

  /// Scalars for step size h, fed to the update kernels. h must lie in (0, 1).
  TamingCoefficients coefficients(double h) const;

 private:
  TamingOperator(TamingKind kind, double lambda, double alpha, double rho)
      : kind_(kind), lambda_(lambda), alpha_(alpha), rho_(rho) {}

  TamingKind kind_;
  double lambda_;
  double alpha_;
  double rho_;
};

/// Parses identity, dte, dte(lambda), me, te, te(alpha), se, se(alpha), fte.
/// `rho` supplies the growth exponent for fte.
TamingOperator parse_taming(std::string_view text, double rho);

/// In-place form used by the stepper: out = T(v) with precomputed coefficients.
void apply_taming(const TamingCoefficients& c, std::span<const double> v, std::span<const double> x,
                  std::span<double> out);

/// T1 applied to a drift value v at state x. Throws NonFiniteCoefficient on
/// non-finite input, InvalidArgument when h is outside (0, 1).
std::vector<double> apply_t1(const TamingOperator& op, std::span<const double> v, std::span<const double> x,
                             double h);

/// T2 applied to one diffusion column.
std::vector<double> apply_t2(const TamingOperator& op, std::span<const double> v, std::span<const double> x,
                             double h);

}  // namespace mvsde
