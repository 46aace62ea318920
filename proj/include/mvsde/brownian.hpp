#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mvsde {

class Executor;

/// Brownian increments for N particles x m components on a uniform grid of [0, T].
///
/// Increment (i, k, r) of the root (finest) grid is a deterministic function of
/// (seed, i, k, r): a Philox draw mapped to a standard normal by the inverse
/// CDF, scaled by sqrt(T / n) and rounded to the dyadic lattice 2^-kLatticeBits.
/// On that lattice every partial sum with magnitude below 2^(53 - kLatticeBits)
/// is exact, so coarse increments, cumulative sums and repeated coarsening agree
/// bit for bit whatever order the additions happen in. The rounding moves each
/// increment by at most 2^-43.
///
/// Grids with N * n * m <= kMaterializeLimit values are stored; larger grids are
/// re-derived from the counter on every access.
class PathGrid {
 public:
  static constexpr int kLatticeBits = 42;
  static constexpr std::size_t kMaterializeLimit = std::size_t{1} << 26;

  static PathGrid generate(std::uint64_t seed, std::size_t n_fine, double horizon, std::size_t n_particles,
                           std::size_t noise_dim, const Executor* executor = nullptr);

  /// Coarse grid whose increment j is the sum of fine increments j*factor .. (j+1)*factor - 1.
  PathGrid coarsen(std::size_t factor, const Executor* executor = nullptr) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t steps() const noexcept { return root_steps_ / factor_; }
  double horizon() const noexcept { return horizon_; }
  double step_size() const noexcept { return horizon_ / static_cast<double>(steps()); }
  std::size_t particles() const noexcept { return n_particles_; }
  std::size_t noise_dim() const noexcept { return noise_dim_; }
  /// Number of steps of the grid this one was coarsened from (itself if not coarsened).
  std::size_t root_steps() const noexcept { return root_steps_; }
  std::size_t factor_from_root() const noexcept { return factor_; }
  bool materialized() const noexcept { return static_cast<bool>(data_); }

  double increment(std::size_t particle, std::size_t step, std::size_t component) const;

  /// Fills out[i * m + r] with the increments of step k for every particle.
  void step_increments(std::size_t step, std::span<double> out) const;

 private:
  PathGrid() = default;
  double root_increment(std::size_t particle, std::size_t root_step, std::size_t component) const;
  double streamed_increment(std::size_t particle, std::size_t step, std::size_t component) const;
  void materialize(const Executor* executor, const PathGrid* source, std::size_t source_factor);

  std::uint64_t seed_ = 0;
  std::size_t root_steps_ = 0;
  std::size_t factor_ = 1;
  double horizon_ = 0.0;
  double root_sqrt_h_ = 0.0;
  std::size_t n_particles_ = 0;
  std::size_t noise_dim_ = 0;
  // (k * N + i) * m + r
  std::shared_ptr<const std::vector<double>> data_;
};

inline PathGrid generate(std::uint64_t seed, std::size_t n_fine, double horizon, std::size_t n_particles,
                         std::size_t noise_dim) {
  return PathGrid::generate(seed, n_fine, horizon, n_particles, noise_dim);
}

inline PathGrid coarsen(const PathGrid& grid, std::size_t factor) { return grid.coarsen(factor); }

}  // namespace mvsde
