#include "mvsde/brownian.hpp"

#include <cmath>
#include <limits>

#include "mvsde/error.hpp"
#include "mvsde/parallel.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {
namespace {

constexpr std::size_t kStepGrain = 64;

void check_index_range(std::size_t value, const char* what) {
  if (value > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument(std::string("PathGrid: ") + what + " exceeds the 32-bit counter range");
  }
}

}  // namespace

PathGrid PathGrid::generate(std::uint64_t seed, std::size_t n_fine, double horizon, std::size_t n_particles,
                            std::size_t noise_dim, const Executor* executor) {
  if (n_fine == 0) throw InvalidArgument("PathGrid::generate: n_fine must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("PathGrid::generate: horizon must be positive");
  if (n_particles == 0 || noise_dim == 0) throw InvalidArgument("PathGrid::generate: N and m must be positive");
  check_index_range(n_fine, "step count");
  check_index_range(n_particles, "particle count");
  check_index_range(noise_dim, "noise dimension");

  PathGrid grid;
  grid.seed_ = seed;
  grid.root_steps_ = n_fine;
  grid.factor_ = 1;
  grid.horizon_ = horizon;
  grid.root_sqrt_h_ = std::sqrt(horizon / static_cast<double>(n_fine));
  grid.n_particles_ = n_particles;
  grid.noise_dim_ = noise_dim;
  if (n_particles * noise_dim <= kMaterializeLimit / n_fine) grid.materialize(executor, nullptr, 1);
  return grid;
}

PathGrid PathGrid::coarsen(std::size_t factor, const Executor* executor) const {
  if (factor == 0 || steps() % factor != 0) {
    throw InvalidArgument("PathGrid::coarsen: factor " + std::to_string(factor) + " does not divide " +
                          std::to_string(steps()) + " steps");
  }
  if (factor == 1) return *this;
  PathGrid coarse = *this;
  coarse.factor_ = factor_ * factor;
  coarse.data_.reset();
  if (n_particles_ * noise_dim_ <= kMaterializeLimit / coarse.steps()) {
    coarse.materialize(executor, materialized() ? this : nullptr, factor);
  }
  return coarse;
}

double PathGrid::root_increment(std::size_t particle, std::size_t root_step, std::size_t component) const {
  const double z = rng::keyed_normal(seed_, rng::StreamTag::Increments, static_cast<std::uint32_t>(particle),
                                     static_cast<std::uint32_t>(root_step), static_cast<std::uint32_t>(component));
  return std::ldexp(std::round(std::ldexp(z * root_sqrt_h_, kLatticeBits)), -kLatticeBits);
}

double PathGrid::streamed_increment(std::size_t particle, std::size_t step, std::size_t component) const {
  double sum = 0.0;
  const std::size_t first = step * factor_;
  for (std::size_t k = first; k < first + factor_; ++k) sum += root_increment(particle, k, component);
  return sum;
}

void PathGrid::materialize(const Executor* executor, const PathGrid* source, std::size_t source_factor) {
  const std::size_t n = steps();
  const std::size_t row = n_particles_ * noise_dim_;
  auto data = std::make_shared<std::vector<double>>(n * row);
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      double* out = data->data() + k * row;
      if (source) {
        const double* in = source->data_->data();
        for (std::size_t e = 0; e < row; ++e) {
          double sum = 0.0;
          for (std::size_t f = 0; f < source_factor; ++f) sum += in[(k * source_factor + f) * row + e];
          out[e] = sum;
        }
      } else {
        for (std::size_t i = 0; i < n_particles_; ++i) {
          for (std::size_t r = 0; r < noise_dim_; ++r) out[i * noise_dim_ + r] = streamed_increment(i, k, r);
        }
      }
    }
  };
  (executor ? *executor : Executor::serial()).parallel_for(n, kStepGrain, fill);
  data_ = std::move(data);
}

double PathGrid::increment(std::size_t particle, std::size_t step, std::size_t component) const {
  if (particle >= n_particles_ || step >= steps() || component >= noise_dim_) {
    throw InvalidArgument("PathGrid::increment: index out of range");
  }
  if (data_) return (*data_)[(step * n_particles_ + particle) * noise_dim_ + component];
  return streamed_increment(particle, step, component);
}

void PathGrid::step_increments(std::size_t step, std::span<double> out) const {
  const std::size_t row = n_particles_ * noise_dim_;
  if (out.size() != row) throw DimensionMismatch("PathGrid::step_increments: output must hold N * m values");
  if (step >= steps()) throw InvalidArgument("PathGrid::step_increments: step out of range");
  if (data_) {
    const double* in = data_->data() + step * row;
    std::copy(in, in + row, out.begin());
    return;
  }
  for (std::size_t i = 0; i < n_particles_; ++i) {
    for (std::size_t r = 0; r < noise_dim_; ++r) out[i * noise_dim_ + r] = streamed_increment(i, step, r);
  }
}

}  // namespace mvsde
