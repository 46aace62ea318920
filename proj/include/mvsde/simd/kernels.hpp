#pragma once

// Data-parallel inner loops of the particle scheme.
//
// Every kernel exists as a scalar reference and, where the CPU supports it, an
// AVX2 variant selected at runtime. Variants are required to agree bit for bit:
// elementwise kernels use only correctly rounded IEEE operations (no FMA), and
// reductions follow one canonical accumulation order, described below, that
// both variants implement.
//
// Canonical reduction order over x[0..n): four lane accumulators, lane l sums
// f(x[i]) for i = l, l+4, ... over the largest multiple of four, ascending.
// The lanes are combined as (l0 + l1) + (l2 + l3) and the remaining tail
// elements are then added one at a time in ascending order.

#include <cstddef>
#include <span>
#include <string_view>

#include "mvsde/taming_kind.hpp"

namespace mvsde::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Whether the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Best available variant, unless overridden by set_active_isa or the
/// MVSDE_ISA environment variable ("scalar" or "avx2") read on first use.
Isa active_isa() noexcept;

/// Throws InvalidArgument when the variant is unavailable.
void set_active_isa(Isa isa);

class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

struct PowerSums {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double s4 = 0.0;
};

/// Elementwise update for d = 1, m = 1:
///   out[i] = (x[i] + T1(b[i]) * h) + T2(s[i]) * dw[i].
struct UpdateArgs {
  TamingCoefficients t1;
  TamingCoefficients t2;
  double h = 0.0;
  std::span<const double> x;
  std::span<const double> drift;
  std::span<const double> diffusion;
  std::span<const double> dw;
  std::span<double> out;
};

struct KernelTable {
  PowerSums (*power_sums)(std::span<const double> x);
  double (*sum_squares)(std::span<const double> x);
  double (*sum_sq_diff)(std::span<const double> a, std::span<const double> b);
  /// Horner evaluation of sum_k coeffs[k] x^k (ascending coefficients).
  void (*poly_eval)(std::span<const double> coeffs, std::span<const double> x, std::span<double> out);
  void (*tamed_update)(const UpdateArgs& args);
};

const KernelTable& scalar_kernels() noexcept;
#if defined(MVSDE_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif

const KernelTable& kernels_for(Isa isa);
inline const KernelTable& kernels() { return kernels_for(active_isa()); }

}  // namespace mvsde::simd
