#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace mvsde {

/// Read-only snapshot of an N-particle empirical measure in R^d.
///
/// Raw moments of orders 1..kCachedOrders are computed once per coordinate at
/// construction with the fixed-order reduction kernels; higher orders are
/// evaluated on demand with the same accumulation order. The snapshot shares
/// ownership of the particle states, so copies are cheap and never dangle.
class MeasureView {
 public:
  static constexpr int kCachedOrders = 4;

  MeasureView() = default;
  MeasureView(std::shared_ptr<const std::vector<double>> states, std::size_t dim);

  /// Dirac mass at `point` (a one-particle ensemble).
  static MeasureView dirac(std::span<const double> point);
  /// Empirical measure of a copy of `states` (row-major N x dim).
  static MeasureView from_states(std::span<const double> states, std::size_t dim);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> mean() const noexcept { return {moments_.data(), dim_}; }

  /// Per-coordinate k-th raw moment (1/N) sum_i x_{i,coord}^k, k >= 1.
  double raw_moment(int k, std::size_t coord) const;

  /// (1/N) sum_i |x_i|^2, i.e. the squared 2-Wasserstein distance to delta_0.
  double w2sq_to_dirac0() const noexcept { return w2sq_dirac0_; }

  std::span<const double> particles() const noexcept {
    return states_ ? std::span<const double>(*states_) : std::span<const double>();
  }
  std::span<const double> particle(std::size_t i) const noexcept {
    return particles().subspan(i * dim_, dim_);
  }

  /// True when every cached statistic is finite.
  bool finite() const noexcept;

 private:
  std::shared_ptr<const std::vector<double>> states_;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  // moments_[(k - 1) * dim + coord] for k = 1..kCachedOrders
  std::vector<double> moments_;
  double w2sq_dirac0_ = 0.0;
};

}  // namespace mvsde
