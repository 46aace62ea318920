#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/stepper.hpp"

namespace mvsde {

/// sqrt((1/N) sum_i |a_i - b_i|^2); particles are paired by index.
double rmse(const Ensemble& a, const Ensemble& b);

/// (1/N) sum_i |x_i|^2.
double w2sq_dirac0(const Ensemble& ens);

/// Exact W2 between two equal-size one-dimensional empirical measures:
/// root-mean-square gap of the sorted samples.
double w2_1d_exact(const Ensemble& a, const Ensemble& b);

/// Exact W2 between one-dimensional empirical measures of any sizes, by
/// integrating the squared quantile gap over the merged breakpoints.
double w2_1d(std::span<const double> a, std::span<const double> b);

/// Moments per (order, coordinate); values[o * dim + j] = (1/N) sum_i x_{ij}^orders[o].
struct MomentTable {
  std::vector<int> orders;
  std::size_t dim = 1;
  std::vector<double> values;

  double at(std::size_t order_index, std::size_t coord) const { return values[order_index * dim + coord]; }
};

MomentTable raw_moments(const Ensemble& ens, std::span<const int> orders);

/// (1/N) sum_i |x_i|^k with the Euclidean norm.
double abs_moment(const Ensemble& ens, int k);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double bandwidth = 0.0;
  std::size_t n_source = 0;
  /// Non-finite particles left out of the estimate.
  std::size_t n_excluded = 0;
  /// Set when the sample had zero spread and the bandwidth floor was used.
  bool bandwidth_floored = false;
  std::string method = "gaussian-kde, silverman 1.06*sd*N^(-1/5)";
};

struct KdeGrid {
  std::optional<double> lo;
  std::optional<double> hi;
  std::size_t points = 512;
};

inline constexpr double kBandwidthFloor = 1e-3;

/// Gaussian kernel density estimate of a one-dimensional ensemble. Defaults:
/// Silverman bandwidth, 512 points spanning [min - 4 bw, max + 4 bw].
DensityCurve kde(const Ensemble& ens, const KdeGrid& grid = {}, std::optional<double> bandwidth = std::nullopt);

/// Trapezoid integral of a curve over its grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

struct PathTable {
  std::vector<std::size_t> particle_ids;
  std::vector<double> times;
  /// rows x ids
  std::vector<double> values;
};

/// Rows (t_k, X_k^id...) at every stride-th step from a trajectory traced with
/// a compatible stride. Throws InvalidArgument for ids >= N or ids that were
/// not traced.
PathTable path_trace(const Trajectory& traj, std::span<const std::size_t> particle_ids, std::size_t stride);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Root-mean-square residual of the fit.
  double residual = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept. Needs at least two points.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace mvsde
