#include "mvsde/simd/kernels.hpp"

#include <array>

namespace mvsde::simd {
namespace {

constexpr std::size_t kLanes = 4;

// Lane-blocked reduction in the canonical order shared with the AVX2 variant.
template <typename F>
double canonical_sum(std::size_t n, F&& term) {
  std::array<double, kLanes> acc{};
  const std::size_t blocked = n - n % kLanes;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += term(i + l);
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = blocked; i < n; ++i) total += term(i);
  return total;
}

PowerSums power_sums(std::span<const double> x) {
  std::array<PowerSums, kLanes> acc{};
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double v = x[i + l];
      const double v2 = v * v;
      acc[l].s1 += v;
      acc[l].s2 += v2;
      acc[l].s3 += v2 * v;
      acc[l].s4 += v2 * v2;
    }
  }
  PowerSums total;
  total.s1 = (acc[0].s1 + acc[1].s1) + (acc[2].s1 + acc[3].s1);
  total.s2 = (acc[0].s2 + acc[1].s2) + (acc[2].s2 + acc[3].s2);
  total.s3 = (acc[0].s3 + acc[1].s3) + (acc[2].s3 + acc[3].s3);
  total.s4 = (acc[0].s4 + acc[1].s4) + (acc[2].s4 + acc[3].s4);
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
  return canonical_sum(x.size(), [&](std::size_t i) { return x[i] * x[i]; });
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return canonical_sum(a.size(), [&](std::size_t i) {
    const double d = a[i] - b[i];
    return d * d;
  });
}

void poly_eval(std::span<const double> coeffs, std::span<const double> x, std::span<double> out) {
  const std::size_t deg = coeffs.size() - 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = coeffs[deg];
    for (std::size_t k = deg; k-- > 0;) acc = acc * x[i] + coeffs[k];
    out[i] = acc;
  }
}

void tamed_update(const UpdateArgs& a) {
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double xi = a.x[i];
    const double r2 = xi * xi;
    const double t1 = detail::tame_scalar(a.t1, a.drift[i], r2);
    const double t2 = detail::tame_scalar(a.t2, a.diffusion[i], r2);
    a.out[i] = (xi + t1 * a.h) + t2 * a.dw[i];
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{&power_sums, &sum_squares, &sum_sq_diff, &poly_eval, &tamed_update};
  return table;
}

}  // namespace mvsde::simd
