#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A coefficient or taming map produced (or was fed) a non-finite value.
class NonFiniteCoefficient : public Error {
 public:
  NonFiniteCoefficient(const std::string& what, double t, std::vector<double> x)
      : Error(what), t_(t), x_(std::move(x)) {}

  double t() const noexcept { return t_; }
  const std::vector<double>& x() const noexcept { return x_; }

 private:
  double t_;
  std::vector<double> x_;
};

class NewtonNonConvergence : public Error {
 public:
  NewtonNonConvergence(std::size_t particle, double residual);

  std::size_t particle() const noexcept { return particle_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t particle_;
  double residual_;
};

}  // namespace mvsde
