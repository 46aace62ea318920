#include "mvsde/measure.hpp"

#include <cmath>

#include "mvsde/error.hpp"
#include "mvsde/simd/kernels.hpp"

namespace mvsde {

NewtonNonConvergence::NewtonNonConvergence(std::size_t particle, double residual)
    : Error("Newton iteration did not converge for particle " + std::to_string(particle) +
            " (residual " + std::to_string(residual) + ")"),
      particle_(particle),
      residual_(residual) {}

MeasureView::MeasureView(std::shared_ptr<const std::vector<double>> states, std::size_t dim)
    : states_(std::move(states)), dim_(dim) {
  if (!states_ || dim_ == 0 || states_->size() % dim_ != 0 || states_->empty()) {
    throw InvalidArgument("MeasureView needs a non-empty N x d state array");
  }
  n_ = states_->size() / dim_;
  const auto& k = simd::kernels();
  const double inv_n = 1.0 / static_cast<double>(n_);
  moments_.assign(static_cast<std::size_t>(kCachedOrders) * dim_, 0.0);

  std::vector<double> column;
  for (std::size_t j = 0; j < dim_; ++j) {
    std::span<const double> values;
    if (dim_ == 1) {
      values = *states_;
    } else {
      column.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) column[i] = (*states_)[i * dim_ + j];
      values = column;
    }
    const simd::PowerSums s = k.power_sums(values);
    moments_[0 * dim_ + j] = s.s1 * inv_n;
    moments_[1 * dim_ + j] = s.s2 * inv_n;
    moments_[2 * dim_ + j] = s.s3 * inv_n;
    moments_[3 * dim_ + j] = s.s4 * inv_n;
  }
  w2sq_dirac0_ = k.sum_squares(*states_) * inv_n;
}

MeasureView MeasureView::dirac(std::span<const double> point) {
  return from_states(point, point.size());
}

MeasureView MeasureView::from_states(std::span<const double> states, std::size_t dim) {
  return MeasureView(std::make_shared<const std::vector<double>>(states.begin(), states.end()), dim);
}

double MeasureView::raw_moment(int k, std::size_t coord) const {
  if (k < 1) throw InvalidArgument("raw_moment order must be >= 1");
  if (coord >= dim_) throw InvalidArgument("raw_moment coordinate out of range");
  if (k <= kCachedOrders) return moments_[static_cast<std::size_t>(k - 1) * dim_ + coord];
  std::vector<double> powers(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    powers[i] = detail::int_pow((*states_)[i * dim_ + coord], k);
  }
  // canonical-order plain sum
  return simd::kernels().power_sums(powers).s1 / static_cast<double>(n_);
}

bool MeasureView::finite() const noexcept {
  for (double m : moments_) {
    if (!std::isfinite(m)) return false;
  }
  return std::isfinite(w2sq_dirac0_);
}

}  // namespace mvsde
