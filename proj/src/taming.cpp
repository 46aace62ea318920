#include "mvsde/taming.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>

#include "mvsde/error.hpp"

namespace mvsde {
namespace {

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return s;
}

std::vector<double> checked_apply(const TamingOperator& op, std::span<const double> v, std::span<const double> x,
                                  double h, const char* what) {
  if (!(h > 0.0 && h < 1.0)) throw InvalidArgument(std::string(what) + ": step size must lie in (0, 1)");
  for (double c : v) {
    if (!std::isfinite(c)) throw NonFiniteCoefficient(std::string(what) + ": non-finite coefficient value", 0.0, {v.begin(), v.end()});
  }
  for (double c : x) {
    if (!std::isfinite(c)) throw NonFiniteCoefficient(std::string(what) + ": non-finite state", 0.0, {x.begin(), x.end()});
  }
  std::vector<double> out(v.size());
  apply_taming(op.coefficients(h), v, x, out);
  return out;
}

}  // namespace

TamingOperator TamingOperator::identity() { return {TamingKind::Identity, 0.0, 0.0, 0.0}; }

TamingOperator TamingOperator::drift_tamed(double lambda) {
  if (!(lambda > 0.0 && lambda <= 0.5)) throw InvalidArgument("drift-tamed lambda must lie in (0, 1/2]");
  return {TamingKind::DriftTamed, lambda, 0.0, 0.0};
}

TamingOperator TamingOperator::modified() { return {TamingKind::Modified, 0.0, 0.0, 0.0}; }

TamingOperator TamingOperator::tanh(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.5)) throw InvalidArgument("tanh alpha must lie in (0, 3/2)");
  return {TamingKind::Tanh, 0.0, alpha, 0.0};
}

TamingOperator TamingOperator::sin(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.5)) throw InvalidArgument("sin alpha must lie in (0, 3/2)");
  return {TamingKind::Sin, 0.0, alpha, 0.0};
}

TamingOperator TamingOperator::fully_tamed(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("fully-tamed rho must be a nonnegative real");
  return {TamingKind::FullyTamed, 0.0, 0.0, rho};
}

std::optional<ConsistencyExponents> TamingOperator::declared_h3() const {
  switch (kind_) {
    case TamingKind::Modified:
    case TamingKind::Tanh:
    case TamingKind::Sin:
      return ConsistencyExponents{0.5, 2.0, 0.5};
    default:
      return std::nullopt;
  }
}

TamingOperator TamingOperator::diffusion_counterpart() const {
  return kind_ == TamingKind::DriftTamed ? identity() : *this;
}

std::string TamingOperator::label() const {
  switch (kind_) {
    case TamingKind::Identity:
      return "identity";
    case TamingKind::DriftTamed:
      return fmt::format("dte{}", lambda_);
    case TamingKind::Modified:
      return "me";
    case TamingKind::Tanh:
      return fmt::format("te{}", alpha_);
    case TamingKind::Sin:
      return fmt::format("se{}", alpha_);
    case TamingKind::FullyTamed:
      return "fte";
  }
  return "unknown";
}

TamingCoefficients TamingOperator::coefficients(double h) const {
  TamingCoefficients c;
  c.kind = kind_;
  c.h = h;
  switch (kind_) {
    case TamingKind::Identity:
      c.scale = 1.0;
      break;
    case TamingKind::DriftTamed:
      c.scale = std::pow(h, lambda_);
      break;
    case TamingKind::Modified:
      c.scale = h;
      break;
    case TamingKind::Tanh:
    case TamingKind::Sin:
      c.scale = std::pow(h, alpha_);
      break;
    case TamingKind::FullyTamed: {
      c.scale = std::sqrt(h);
      c.state_exponent = 2.0 * rho_;
      const double rounded = std::round(c.state_exponent);
      if (rounded == c.state_exponent && rounded <= 64.0) c.state_exponent_int = static_cast<int>(rounded);
      break;
    }
  }
  return c;
}

TamingOperator parse_taming(std::string_view text, double rho) {
  std::string_view name = text;
  std::optional<double> arg;
  if (const auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') throw ConfigError(fmt::format("malformed taming operator '{}'", text));
    name = text.substr(0, open);
    const std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), value);
    if (ec != std::errc() || ptr != inner.data() + inner.size()) {
      throw ConfigError(fmt::format("malformed taming parameter in '{}'", text));
    }
    arg = value;
  }
  try {
    if (name == "identity" && !arg) return TamingOperator::identity();
    if (name == "me" && !arg) return TamingOperator::modified();
    if (name == "fte" && !arg) return TamingOperator::fully_tamed(rho);
    if (name == "dte") return TamingOperator::drift_tamed(arg.value_or(0.5));
    if (name == "te") return TamingOperator::tanh(arg.value_or(1.0));
    if (name == "se") return TamingOperator::sin(arg.value_or(1.0));
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("taming operator '{}': {}", text, e.what()));
  }
  throw ConfigError(fmt::format("unknown taming operator '{}'", text));
}

void apply_taming(const TamingCoefficients& c, std::span<const double> v, std::span<const double> x,
                  std::span<double> out) {
  const double x_norm_sq = norm_sq(x);
  if (v.size() == 1) {
    out[0] = detail::tame_scalar(c, v[0], x_norm_sq);
    return;
  }
  switch (c.kind) {
    case TamingKind::Identity:
      std::copy(v.begin(), v.end(), out.begin());
      return;
    case TamingKind::Tanh:
    case TamingKind::Sin:
      for (std::size_t j = 0; j < v.size(); ++j) out[j] = detail::tame_scalar(c, v[j], x_norm_sq);
      return;
    case TamingKind::DriftTamed:
    case TamingKind::Modified:
    case TamingKind::FullyTamed: {
      const double v_norm_sq = norm_sq(v);
      double denom = 1.0;
      if (c.kind == TamingKind::DriftTamed) denom = 1.0 + c.scale * std::sqrt(v_norm_sq);
      if (c.kind == TamingKind::Modified) denom = 1.0 + c.scale * v_norm_sq;
      if (c.kind == TamingKind::FullyTamed) denom = 1.0 + c.scale * detail::state_power(c, x_norm_sq);
      for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j] / denom;
      return;
    }
  }
}

std::vector<double> apply_t1(const TamingOperator& op, std::span<const double> v, std::span<const double> x,
                             double h) {
  return checked_apply(op, v, x, h, "apply_t1");
}

std::vector<double> apply_t2(const TamingOperator& op, std::span<const double> v, std::span<const double> x,
                             double h) {
  return checked_apply(op.diffusion_counterpart(), v, x, h, "apply_t2");
}

}  // namespace mvsde
