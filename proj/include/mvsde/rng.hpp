#pragma once

#include <array>
#include <cstdint>

namespace mvsde::rng {

/// Philox4x32-10 counter-based block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Maps 64 random bits to a double strictly inside (0, 1).
double uniform_open(std::uint64_t bits) noexcept;

/// Standard normal quantile, Wichura's AS241 (PPND16), relative accuracy ~1e-16.
double inverse_normal_cdf(double p) noexcept;

/// Stream tags keep draws for different purposes disjoint under one seed.
enum class StreamTag : std::uint32_t {
  Increments = 0,
  Initial = 1,
  Sampling = 2,
};

/// Uniform draw keyed on (seed, tag, a, b, c); a deterministic function of its
/// arguments alone.
double keyed_uniform(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b,
                     std::uint32_t c) noexcept;

/// Standard normal draw keyed on (seed, tag, a, b, c) through the inverse CDF.
inline double keyed_normal(std::uint64_t seed, StreamTag tag, std::uint32_t a, std::uint32_t b,
                           std::uint32_t c) noexcept {
  return inverse_normal_cdf(keyed_uniform(seed, tag, a, b, c));
}

/// Derives an independent 64-bit seed from a parent seed and an index (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// Sequential view over the keyed generator for one (seed, tag, stream id).
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamTag tag, std::uint32_t stream) noexcept
      : seed_(seed), tag_(tag), stream_(stream) {}

  double uniform() noexcept { return keyed_uniform(seed_, tag_, stream_, counter_++, 0); }
  double normal() noexcept { return inverse_normal_cdf(uniform()); }

 private:
  std::uint64_t seed_;
  StreamTag tag_;
  std::uint32_t stream_;
  std::uint32_t counter_ = 0;
};

}  // namespace mvsde::rng
