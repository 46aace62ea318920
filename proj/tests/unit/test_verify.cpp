#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "mvsde/error.hpp"
#include "mvsde/verify.hpp"

using namespace mvsde;
using namespace mvsde::verify;

namespace {

double witness(const AssumptionReport& r, const std::string& key) {
  for (const auto& [k, v] : r.witness) {
    if (k == key) return v;
  }
  FAIL("missing witness entry " << key);
  return 0.0;
}

ModelSpec cubic_roots_model() {
  // b(t, x, mu) = (x - 1)(x + 0.5)(E[X] - 3): along x = c, mu = delta_c the
  // zeros are -0.5, 1 and 3.
  ModelSpec m;
  m.name = "roots";
  m.drift = [](double, std::span<const double> x, const MeasureView& mu, std::span<double> out) {
    out[0] = (x[0] - 1.0) * (x[0] + 0.5) * (mu.mean()[0] - 3.0);
  };
  m.diffusion_col = [](double, std::span<const double>, const MeasureView&, std::size_t, std::span<double> out) {
    out[0] = 1.0;
  };
  m.initial_sampler = [](rng::RngStream&, std::span<double> out) { out[0] = 0.0; };
  return m;
}

}  // namespace

TEST_CASE("compute_G") {
  CHECK(compute_G(1, 1, 3) == 8.0);
  CHECK(compute_G(1, 0.5, 2) == 10.0);
  CHECK(compute_G(2, 1, 1) == 12.0);
  CHECK_THROWS_AS(compute_G(1, 0, 2), InvalidArgument);
  CHECK_THROWS_AS(compute_G(1, -1, 2), InvalidArgument);
  CHECK_THROWS_AS(compute_G(-1, 1, 2), InvalidArgument);

  const auto axis = [](int i) { return 0.1 + 0.35 * i; };
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      for (int c = 0; c < 10; ++c) {
        const double rho = axis(a) - 0.1, r1 = axis(b), r2 = axis(c);
        const double g = compute_G(rho, r1, r2);
        CHECK(g >= 6 * rho);
        CHECK(g >= ((2 * rho + 1) * r2 - 1) / r1);
        if (a < 9) CHECK(compute_G(axis(a + 1) - 0.1, r1, r2) >= g);
        if (c < 9) CHECK(compute_G(rho, r1, axis(c + 1)) >= g);
        if (b < 9) CHECK(compute_G(rho, axis(b + 1), r2) <= g);
      }
    }
  }

  const auto t = theory_constants(1, 1, 3, 50);
  CHECK(t.G == 8.0);
  CHECK(t.p_max_lemma == doctest::Approx((100.0 - 8.0) / 34.0));
}

TEST_CASE("taming operators under H1") {
  const TestedConstants unit{};
  for (const auto& op : {TamingOperator::modified(), TamingOperator::tanh(1.0), TamingOperator::sin(1.0)}) {
    CAPTURE(op.label());
    const auto r = check_taming(op, Assumption::H1, unit);
    CHECK(r.passed());
    CHECK(r.samples > 1000);
  }
  const auto id = check_taming(TamingOperator::identity(), Assumption::H1, unit);
  CHECK_FALSE(id.passed());
  CHECK(witness(id, "|v|") > std::pow(witness(id, "h"), -1.5));

  const auto fte = check_taming(TamingOperator::fully_tamed(1.0), Assumption::H1, unit);
  CHECK_FALSE(fte.passed());
  CHECK_FALSE(fte.witness.empty());
  CHECK_FALSE(fte.witness_text().empty());
}

TEST_CASE("taming operators under H2 and H3") {
  CHECK(check_taming(TamingOperator::modified(), Assumption::H2, {1, 1, 3, 0.5}).passed());
  for (const auto& op : {TamingOperator::modified(), TamingOperator::tanh(1.0), TamingOperator::sin(1.0)}) {
    CAPTURE(op.label());
    CHECK(check_taming(op, Assumption::H3, {1, 0.5, 2, 0.5}).passed());
  }
  CHECK(check_taming(TamingOperator::tanh(1.0), Assumption::H2, {1, 1, 3, 0.5}).passed());
  // |v/(1 + h|v|^2) - v| = h|v|^3/(1 + h|v|^2) is not O(h |v|^2) for large |v|.
  CHECK_FALSE(check_taming(TamingOperator::modified(), Assumption::H2, {1, 1, 2, 0.5}).passed());
  CHECK_FALSE(check_taming(TamingOperator::identity(), Assumption::H2, {1, 1, 2, 0.5}).max_violation > 0);
}

TEST_CASE("bound of the fully tamed example needs a model") {
  const auto model = model_example_cubic();
  const auto sweep = minimal_passing_L(TamingOperator::fully_tamed(1.0), Assumption::EX35_BOUND, {}, {}, &model);
  REQUIRE(sweep.minimal_L);
  CHECK(sweep.report.passed());
  CHECK_THROWS(check_taming(TamingOperator::fully_tamed(1.0), Assumption::EX35_BOUND, {}));
}

TEST_CASE("model assumptions") {
  const auto cubic = model_example_cubic();
  const auto quintic = model_example_quintic();

  const auto a6 = minimal_passing_L(cubic, Assumption::A6, {});
  REQUIRE(a6.minimal_L);
  CHECK(a6.report.passed());
  CHECK(a6.report.constants.L == *a6.minimal_L);
  if (*a6.minimal_L > 1.0) {
    TestedConstants half{};
    half.L = *a6.minimal_L / 2;
    CHECK_FALSE(check_model(cubic, Assumption::A6, half).passed());
  }

  const auto q = check_model(quintic, Assumption::A6, {});
  CHECK_FALSE(q.passed());
  CHECK(witness(q, "|x|") > 10.0);
  CHECK_FALSE(minimal_passing_L(quintic, Assumption::A6, {}).minimal_L);
  TestedConstants rho2{};
  rho2.rho = 2.0;
  CHECK(minimal_passing_L(quintic, Assumption::A6, rho2).minimal_L);

  SampleSpec degenerate;
  degenerate.pairs = 1;
  for (const auto& m : {cubic, quintic, model_example_doublewell(0, 1)}) {
    const auto r = check_model(m, Assumption::A3, {}, degenerate);
    CHECK(r.samples == 1);
    CHECK(r.max_violation == 0.0);
  }
}

TEST_CASE("reports are deterministic") {
  const auto cubic = model_example_cubic();
  const auto a = check_model(cubic, Assumption::A5, {});
  const auto b = check_model(cubic, Assumption::A5, {});
  CHECK(a.max_violation == b.max_violation);
  CHECK(a.witness_text() == b.witness_text());
  const auto c = check_taming(TamingOperator::identity(), Assumption::H1, {});
  const auto d = check_taming(TamingOperator::identity(), Assumption::H1, {});
  CHECK(c.witness_text() == d.witness_text());
  const auto g = growth_constants(cubic);
  CHECK(g.drift_K > 0);
  CHECK(std::isfinite(g.diffusion_K));
}

TEST_CASE("self-consistent roots") {
  const auto found = self_consistent_roots(cubic_roots_model());
  REQUIRE(found.size() == 3);
  CHECK(found[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(found[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(found[2] == doctest::Approx(3.0).epsilon(1e-9));

  const auto dw = doublewell_equilibria_oracle();
  REQUIRE_FALSE(dw.empty());
  CHECK(std::any_of(dw.begin(), dw.end(), [](double c) { return std::abs(c) < 1e-6; }));
  for (double c : dw) {
    CHECK(std::any_of(dw.begin(), dw.end(), [c](double e) { return std::abs(e + c) < 1e-6; }));
  }
  // With the drift as printed, b(x = c, delta_c) = -c^3 / 4, so 0 is the only
  // self-consistent point; the stated set {-2, 0, 2} is not reproduced.
  const auto cmp = compare_root_sets(dw, {-2.0, 0.0, 2.0});
  CHECK(cmp.matched == std::vector<double>{0.0});
  CHECK(cmp.missing == std::vector<double>{-2.0, 2.0});
  CHECK(cmp.extra.empty());
  CHECK_FALSE(cmp.identical());
}
