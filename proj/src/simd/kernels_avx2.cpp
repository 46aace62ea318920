// Compiled with -mavx2 only (no -mfma); see kernels.hpp for the equivalence contract.
#include <immintrin.h>

#include <array>

#include "mvsde/simd/kernels.hpp"

namespace mvsde::simd {
namespace {

constexpr std::size_t kLanes = 4;

inline double combine_lanes(__m256d acc) {
  alignas(32) std::array<double, kLanes> lanes;
  _mm256_store_pd(lanes.data(), acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

PowerSums power_sums(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  __m256d a4 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    const __m256d v2 = _mm256_mul_pd(v, v);
    a1 = _mm256_add_pd(a1, v);
    a2 = _mm256_add_pd(a2, v2);
    a3 = _mm256_add_pd(a3, _mm256_mul_pd(v2, v));
    a4 = _mm256_add_pd(a4, _mm256_mul_pd(v2, v2));
  }
  PowerSums total{combine_lanes(a1), combine_lanes(a2), combine_lanes(a3), combine_lanes(a4)};
  for (std::size_t i = blocked; i < n; ++i) {
    const double v = x[i];
    const double v2 = v * v;
    total.s1 += v;
    total.s2 += v2;
    total.s3 += v2 * v;
    total.s4 += v2 * v2;
  }
  return total;
}

double sum_squares(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double total = combine_lanes(acc);
  for (std::size_t i = blocked; i < n; ++i) total += x[i] * x[i];
  return total;
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocked = n - n % kLanes;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = combine_lanes(acc);
  for (std::size_t i = blocked; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

void poly_eval(std::span<const double> coeffs, std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  const std::size_t deg = coeffs.size() - 1;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    __m256d acc = _mm256_set1_pd(coeffs[deg]);
    for (std::size_t k = deg; k-- > 0;) {
      acc = _mm256_add_pd(_mm256_mul_pd(acc, v), _mm256_set1_pd(coeffs[k]));
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (std::size_t i = blocked; i < n; ++i) {
    double acc = coeffs[deg];
    for (std::size_t k = deg; k-- > 0;) acc = acc * x[i] + coeffs[k];
    out[i] = acc;
  }
}

inline __m256d int_pow_pd(__m256d base, int n) {
  __m256d result = _mm256_set1_pd(1.0);
  while (n > 0) {
    if (n & 1) result = _mm256_mul_pd(result, base);
    base = _mm256_mul_pd(base, base);
    n >>= 1;
  }
  return result;
}

// Rational maps only; Tanh/Sin and non-integer FullyTamed exponents have no
// vector form here and route the whole call to the scalar reference.
inline bool vectorizable(const TamingCoefficients& c) {
  switch (c.kind) {
    case TamingKind::Identity:
    case TamingKind::DriftTamed:
    case TamingKind::Modified:
      return true;
    case TamingKind::FullyTamed:
      return c.state_exponent_int >= 0;
    case TamingKind::Tanh:
    case TamingKind::Sin:
      return false;
  }
  return false;
}

inline __m256d tame_pd(const TamingCoefficients& c, __m256d v, __m256d r2) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d scale = _mm256_set1_pd(c.scale);
  switch (c.kind) {
    case TamingKind::Identity:
      return v;
    case TamingKind::DriftTamed:
      // sqrt(v*v) rather than |v| to mirror the norm used by the scalar path.
      return _mm256_div_pd(v, _mm256_add_pd(one, _mm256_mul_pd(scale, _mm256_sqrt_pd(_mm256_mul_pd(v, v)))));
    case TamingKind::Modified:
      return _mm256_div_pd(v, _mm256_add_pd(one, _mm256_mul_pd(scale, _mm256_mul_pd(v, v))));
    case TamingKind::FullyTamed:
      return _mm256_div_pd(v, _mm256_add_pd(one, _mm256_mul_pd(scale, int_pow_pd(r2, c.state_exponent_int))));
    default:
      return v;
  }
}

void tamed_update(const UpdateArgs& a) {
  if (!vectorizable(a.t1) || !vectorizable(a.t2)) {
    scalar_kernels().tamed_update(a);
    return;
  }
  const std::size_t n = a.x.size();
  const std::size_t blocked = n - n % kLanes;
  const __m256d h = _mm256_set1_pd(a.h);
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d x = _mm256_loadu_pd(a.x.data() + i);
    const __m256d r2 = _mm256_mul_pd(x, x);
    const __m256d t1 = tame_pd(a.t1, _mm256_loadu_pd(a.drift.data() + i), r2);
    const __m256d t2 = tame_pd(a.t2, _mm256_loadu_pd(a.diffusion.data() + i), r2);
    const __m256d dw = _mm256_loadu_pd(a.dw.data() + i);
    _mm256_storeu_pd(a.out.data() + i, _mm256_add_pd(_mm256_add_pd(x, _mm256_mul_pd(t1, h)), _mm256_mul_pd(t2, dw)));
  }
  for (std::size_t i = blocked; i < n; ++i) {
    const double xi = a.x[i];
    const double r2 = xi * xi;
    const double t1 = detail::tame_scalar(a.t1, a.drift[i], r2);
    const double t2 = detail::tame_scalar(a.t2, a.diffusion[i], r2);
    a.out[i] = (xi + t1 * a.h) + t2 * a.dw[i];
  }
}

}  // namespace

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{&power_sums, &sum_squares, &sum_sq_diff, &poly_eval, &tamed_update};
  return table;
}

}  // namespace mvsde::simd
