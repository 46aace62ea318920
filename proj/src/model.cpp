#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mvsde/error.hpp"

namespace mvsde {
namespace {

using CoeffFn = std::function<void(double, const MeasureView&, std::vector<double>&, std::vector<double>&)>;

// Builds a d = m = 1 model whose callbacks evaluate the polynomial form with horner().
ModelSpec polynomial_model(std::string name, double rho, CoeffFn coefficients, InitialSampler sampler) {
  ModelSpec model;
  model.name = std::move(name);
  model.dim = 1;
  model.noise_dim = 1;
  model.rho = rho;
  model.initial_sampler = std::move(sampler);
  model.polynomial = PolynomialForm{coefficients};
  model.drift = [coefficients](double t, std::span<const double> x, const MeasureView& mu, std::span<double> out) {
    std::vector<double> b, s;
    coefficients(t, mu, b, s);
    out[0] = horner(b, x[0]);
  };
  model.diffusion_col = [coefficients](double t, std::span<const double> x, const MeasureView& mu, std::size_t,
                                       std::span<double> out) {
    std::vector<double> b, s;
    coefficients(t, mu, b, s);
    out[0] = horner(s, x[0]);
  };
  return model;
}

InitialSampler dirac_sampler(double value) {
  return [value](rng::RngStream&, std::span<double> out) { out[0] = value; };
}

double param(const ModelParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string vector_text(std::span<const double> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void require_finite_input(const char* what, double t, std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw NonFiniteCoefficient(std::string(what) + ": non-finite state " + vector_text(x), t, {x.begin(), x.end()});
    }
  }
}

void require_finite_output(const char* what, double t, std::span<const double> x, std::span<const double> out) {
  for (double v : out) {
    if (!std::isfinite(v)) {
      throw NonFiniteCoefficient(std::string(what) + " is non-finite at t=" + std::to_string(t) + ", x=" + vector_text(x),
                                 t, {x.begin(), x.end()});
    }
  }
}

}  // namespace

double horner(std::span<const double> coeffs, double x) noexcept {
  const std::size_t deg = coeffs.size() - 1;
  double acc = coeffs[deg];
  for (std::size_t k = deg; k-- > 0;) acc = acc * x + coeffs[k];
  return acc;
}

ModelSpec model_example_cubic(double gamma, double c) {
  auto coefficients = [gamma, c](double, const MeasureView& mu, std::vector<double>& b, std::vector<double>& s) {
    b = {c * mu.mean()[0], 1.0, 0.0, -1.0};
    s = {gamma, 0.0, -gamma};
  };
  return polynomial_model("cubic", 1.0, coefficients, dirac_sampler(0.0));
}

ModelSpec model_example_quintic(double c, double gamma) {
  auto coefficients = [gamma, c](double, const MeasureView& mu, std::vector<double>& b, std::vector<double>& s) {
    b = {1.0 + c * mu.mean()[0], 0.0, 0.0, 1.0, 0.0, -1.0};
    s = {1.0, 0.0, gamma};
  };
  return polynomial_model("quintic", 2.0, coefficients, dirac_sampler(0.0));
}

ModelSpec model_example_doublewell(double mu0, double sigma0sq) {
  if (!(sigma0sq >= 0.0)) throw InvalidArgument("doublewell: initial variance must be nonnegative");
  auto coefficients = [](double, const MeasureView& mu, std::vector<double>& b, std::vector<double>& s) {
    const double m1 = mu.raw_moment(1, 0);
    const double m2 = mu.raw_moment(2, 0);
    const double m3 = mu.raw_moment(3, 0);
    b = {m3, -3.0 * m2, 3.0 * m1, -1.25};
    s = {0.0, 1.0};
  };
  const double sd = std::sqrt(sigma0sq);
  InitialSampler sampler = [mu0, sd](rng::RngStream& stream, std::span<double> out) {
    out[0] = mu0 + sd * stream.normal();
  };
  return polynomial_model("doublewell", 1.0, coefficients, sampler);
}

std::vector<double> eval_drift(const ModelSpec& model, double t, std::span<const double> x, const MeasureView& mu) {
  if (x.size() != model.dim) throw DimensionMismatch("eval_drift: state dimension mismatch");
  require_finite_input("eval_drift", t, x);
  std::vector<double> out(model.dim);
  model.drift(t, x, mu, out);
  require_finite_output("drift", t, x, out);
  return out;
}

std::vector<double> eval_diffusion_col(const ModelSpec& model, double t, std::span<const double> x,
                                       const MeasureView& mu, std::size_t r) {
  if (x.size() != model.dim) throw DimensionMismatch("eval_diffusion_col: state dimension mismatch");
  if (r >= model.noise_dim) throw InvalidArgument("eval_diffusion_col: column index out of range");
  require_finite_input("eval_diffusion_col", t, x);
  std::vector<double> out(model.dim);
  model.diffusion_col(t, x, mu, r, out);
  require_finite_output("diffusion", t, x, out);
  return out;
}

ModelRegistry::ModelRegistry() {
  add("cubic", "x - x^3 + c E[X], diffusion gamma (1 - x^2); params gamma=0.5, c=1",
      [](const ModelParams& p) { return model_example_cubic(param(p, "gamma", 0.5), param(p, "c", 1.0)); },
      std::vector<std::string>{"gamma", "c"});
  add("quintic", "1 - x^5 + x^3 + c E[X], diffusion gamma x^2 + 1; params c=1, gamma=0.01",
      [](const ModelParams& p) { return model_example_quintic(param(p, "c", 1.0), param(p, "gamma", 0.01)); },
      std::vector<std::string>{"c", "gamma"});
  add("doublewell", "-5/4 x^3 + 3x^2 E[X] - 3x E[X^2] + E[X^3], diffusion x; params mu0=0, sigma0sq=1",
      [](const ModelParams& p) { return model_example_doublewell(param(p, "mu0", 0.0), param(p, "sigma0sq", 1.0)); },
      std::vector<std::string>{"mu0", "sigma0sq"});
}

ModelRegistry& ModelRegistry::global() {
  static ModelRegistry registry;
  return registry;
}

void ModelRegistry::add(std::string name, std::string summary, ModelFactory factory,
                        std::optional<std::vector<std::string>> params) {
  entries_[std::move(name)] = Entry{std::move(summary), std::move(factory), std::move(params)};
}

ModelSpec ModelRegistry::make(const std::string& name, const ModelParams& params) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown model '" + name + "'");
  if (const auto& known = it->second.params) {
    for (const auto& [key, value] : params) {
      if (std::find(known->begin(), known->end(), key) == known->end()) {
        throw ConfigError("model '" + name + "' has no parameter '" + key + "'");
      }
    }
  }
  return it->second.factory(params);
}

}  // namespace mvsde
