#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mvsde/rng.hpp"
#include "mvsde/simd/kernels.hpp"
#include "mvsde/taming.hpp"

using namespace mvsde;

namespace {

std::vector<double> draws(std::size_t n, std::uint32_t stream, double scale) {
  rng::RngStream s(123, rng::StreamTag::Sampling, stream);
  std::vector<double> v(n);
  for (double& x : v) x = scale * s.normal();
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("canonical reduction order") {
  // Four lane accumulators over the largest multiple of four, (l0 + l1) + (l2 + l3),
  // then the tail in ascending order. Values chosen so other orders round differently.
  const std::vector<double> x{1e16, 1.0, -1e16, 3.0, 1.0, 1e16, 2.0, -1e16, 0.5, 1.0, 1e-3};
  double l[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < 8; ++i) l[i % 4] += x[i];
  double expect = (l[0] + l[1]) + (l[2] + l[3]);
  for (std::size_t i = 8; i < x.size(); ++i) expect += x[i];
  CHECK(simd::scalar_kernels().power_sums(x).s1 == expect);
  CHECK(simd::scalar_kernels().sum_squares({}) == 0.0);
}

#if defined(MVSDE_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference bit for bit") {
  if (!simd::isa_available(simd::Isa::Avx2)) return;
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 100, 1001}) {
    CAPTURE(n);
    const auto a = draws(n, 1, 3.0);
    const auto b = draws(n, 2, 3.0);
    const auto ps = s.power_sums(a), pv = v.power_sums(a);
    CHECK(same_bits(ps.s1, pv.s1));
    CHECK(same_bits(ps.s2, pv.s2));
    CHECK(same_bits(ps.s3, pv.s3));
    CHECK(same_bits(ps.s4, pv.s4));
    CHECK(same_bits(s.sum_squares(a), v.sum_squares(a)));
    CHECK(same_bits(s.sum_sq_diff(a, b), v.sum_sq_diff(a, b)));

    const std::vector<double> coeffs{0.3, 1.0, -2.0, 0.5, 0.0, -1.0};
    std::vector<double> o1(n), o2(n);
    s.poly_eval(coeffs, a, o1);
    v.poly_eval(coeffs, a, o2);
    CHECK(same_bits(o1, o2));

    const auto dw = draws(n, 3, 0.05);
    const auto x = draws(n, 4, 2.0);
    for (const auto& op : {TamingOperator::identity(), TamingOperator::drift_tamed(0.5), TamingOperator::modified(),
                           TamingOperator::tanh(1.0), TamingOperator::sin(0.7), TamingOperator::fully_tamed(1.0),
                           TamingOperator::fully_tamed(1.25)}) {
      CAPTURE(op.label());
      simd::UpdateArgs args{op.coefficients(0.01), op.diffusion_counterpart().coefficients(0.01), 0.01, x, a, b, dw, o1};
      s.tamed_update(args);
      args.out = o2;
      v.tamed_update(args);
      CHECK(same_bits(o1, o2));
    }
  }
}
#endif

TEST_CASE("ISA override is scoped") {
  const auto before = simd::active_isa();
  {
    simd::ScopedIsa guard(simd::Isa::Scalar);
    CHECK(simd::active_isa() == simd::Isa::Scalar);
  }
  CHECK(simd::active_isa() == before);
}
