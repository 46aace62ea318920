#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measure.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

using DriftFn = std::function<void(double t, std::span<const double> x, const MeasureView& mu,
                                   std::span<double> out)>;
/// Column r (0-based, r < noise_dim) of the diffusion matrix.
using DiffusionFn = std::function<void(double t, std::span<const double> x, const MeasureView& mu,
                                       std::size_t r, std::span<double> out)>;
using InitialSampler = std::function<void(rng::RngStream& stream, std::span<double> out)>;

/// Scalar models (d = m = 1) whose drift and diffusion are polynomials in x with
/// measure-dependent coefficients. When present the stepper evaluates the whole
/// ensemble with the vector kernels; the per-particle callbacks must use
/// horner() with the same coefficients so both routes agree bit for bit.
struct PolynomialForm {
  /// Fills ascending coefficients of b(t, ., mu) and sigma(t, ., mu).
  std::function<void(double t, const MeasureView& mu, std::vector<double>& drift,
                     std::vector<double>& diffusion)>
      coefficients;
};

struct ModelSpec {
  std::string name;
  std::size_t dim = 1;
  std::size_t noise_dim = 1;
  DriftFn drift;
  DiffusionFn diffusion_col;
  /// Growth exponent of the drift increment bound (minimal admissible value).
  double rho = 0.0;
  InitialSampler initial_sampler;
  std::optional<PolynomialForm> polynomial;
};

/// Horner evaluation, ascending coefficients. Matches the poly_eval kernels.
double horner(std::span<const double> coeffs, double x) noexcept;

/// dX = (x - x^3 + c E[X]) dt + gamma (1 - x^2) dW, X_0 = 0.
ModelSpec model_example_cubic(double gamma = 0.5, double c = 1.0);

/// dX = (1 - x^5 + x^3 + c E[X]) dt + (gamma x^2 + 1) dW, X_0 = 0.
ModelSpec model_example_quintic(double c = 1.0, double gamma = 0.01);

/// Double-well mean-field model,
///   dX = (-5/4 x^3 + 3 x^2 E[X] - 3 x E[X^2] + E[X^3]) dt + x dW,
/// with X_0 ~ Normal(mu0, sigma0sq).
ModelSpec model_example_doublewell(double mu0, double sigma0sq);

std::vector<double> eval_drift(const ModelSpec& model, double t, std::span<const double> x,
                               const MeasureView& mu);
std::vector<double> eval_diffusion_col(const ModelSpec& model, double t, std::span<const double> x,
                                       const MeasureView& mu, std::size_t r);

using ModelParams = std::map<std::string, double>;
using ModelFactory = std::function<ModelSpec(const ModelParams&)>;

/// Name -> factory lookup used by the config layer. Builtins: cubic, quintic, doublewell.
class ModelRegistry {
 public:
  ModelRegistry();

  static ModelRegistry& global();

  /// `params` lists the accepted parameter names; make() rejects any other.
  /// Without a list every parameter is passed through to the factory.
  void add(std::string name, std::string summary, ModelFactory factory,
           std::optional<std::vector<std::string>> params = std::nullopt);
  ModelSpec make(const std::string& name, const ModelParams& params = {}) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  struct Entry {
    std::string summary;
    ModelFactory factory;
    std::optional<std::vector<std::string>> params;
  };
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace mvsde
