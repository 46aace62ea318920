#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvsde/model.hpp"
#include "mvsde/taming.hpp"

namespace mvsde::verify {

enum class Assumption { H1, H2, H3, A2, A3, A5, A6, EX35_BOUND };

std::string_view assumption_name(Assumption a) noexcept;

/// Constants an inequality is tested with. Unused entries are echoed as given.
struct TestedConstants {
  double L = 1.0;
  double r1 = 0.5;
  double r2 = 2.0;
  double r3 = 0.5;
  double p0 = 2.0;
  double p1 = 2.0;
  double rho = 1.0;
};

/// Outcome of a sampled refutation test. max_violation is the maximum over the
/// samples of (lhs - rhs) / (1 + rhs); the first sample attaining it is the witness.
struct AssumptionReport {
  Assumption assumption = Assumption::H1;
  std::string subject;
  TestedConstants constants;
  std::size_t samples = 0;
  double max_violation = -1.0;
  std::vector<std::pair<std::string, double>> witness;
  /// Set when W2 could only be bounded from above (d > 1).
  std::string caveat;

  bool passed() const noexcept { return max_violation <= 0.0; }
  std::string witness_text() const;
};

/// Deterministic sample grids shared by every check.
struct SampleSpec {
  std::uint64_t seed = 20240117;
  /// Log-spaced magnitudes of taming inputs, per_decade points per decade.
  double min_magnitude = 1e-6;
  double max_magnitude = 1e6;
  int per_decade = 8;
  /// h = 2^-k for k in [h_exp_min, h_exp_max].
  int h_exp_min = 1;
  int h_exp_max = 20;
  /// Random directions per magnitude when the operator acts on R^dim, dim > 1.
  std::size_t dim = 1;
  std::size_t directions = 4;
  /// Model checks: number of random (x, y, mu, nu) draws and their ranges.
  std::size_t pairs = 4000;
  std::size_t max_measure_size = 8;
  double min_state = 1e-3;
  double max_state = 1e3;
};

/// Taming assumptions H1, H2, H3 and the bound EX35_BOUND (which needs a model
/// to produce b(t, x, mu) and sigma(t, x, mu)).
AssumptionReport check_taming(const TamingOperator& op, Assumption assumption, const TestedConstants& constants,
                              const SampleSpec& spec = {}, const ModelSpec* model = nullptr);

/// Coefficient assumptions A2, A3, A5, A6 on sampled states and synthetic
/// empirical measures with at most spec.max_measure_size atoms.
AssumptionReport check_model(const ModelSpec& model, Assumption assumption, const TestedConstants& constants,
                             const SampleSpec& spec = {});

struct LSweep {
  /// Smallest L = 2^k, k = 0..10, with no violation; empty if none passes.
  std::optional<double> minimal_L;
  /// Report at minimal_L, or at 2^10 when nothing passes.
  AssumptionReport report;
};

LSweep minimal_passing_L(const ModelSpec& model, Assumption assumption, TestedConstants constants,
                         const SampleSpec& spec = {});
LSweep minimal_passing_L(const TamingOperator& op, Assumption assumption, TestedConstants constants,
                         const SampleSpec& spec = {}, const ModelSpec* model = nullptr);

/// Sampled constants K with |b| <= K (1 + |x|^(2 rho + 1) + W2(mu, delta_0)) and
/// |sigma| <= K (1 + |x|^(rho + 1) + W2(mu, delta_0)).
struct GrowthConstants {
  double drift_K = 0.0;
  double diffusion_K = 0.0;
  std::size_t samples = 0;
};

GrowthConstants growth_constants(const ModelSpec& model, const SampleSpec& spec = {});

/// max{6 rho, ((2 rho + 1) r2 - 1) / r1}.
double compute_G(double rho, double r1, double r2);

struct TheoryConstants {
  double G = 0.0;
  double p_bar = 0.0;
  /// (2 p_bar - G) / (2 + 4 G).
  double p_max_lemma = 0.0;
  double rho = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

TheoryConstants theory_constants(double rho, double r1, double r2, double p_bar);

/// Zeros of c -> b(0, c, delta_c) on [lo, hi]: a scan at `resolution` followed
/// by bisection on each sign change. Exact zeros on the scan grid are kept.
std::vector<double> self_consistent_roots(const ModelSpec& model, double lo = -5.0, double hi = 5.0,
                                          double resolution = 1e-3);

/// self_consistent_roots for the builtin double-well model.
std::vector<double> doublewell_equilibria_oracle();

struct RootComparison {
  std::vector<double> matched;
  /// Expected values with no found root within the tolerance.
  std::vector<double> missing;
  /// Found roots with no expected value within the tolerance.
  std::vector<double> extra;

  bool identical() const noexcept { return missing.empty() && extra.empty(); }
};

RootComparison compare_root_sets(const std::vector<double>& found, const std::vector<double>& expected,
                                 double tol = 1e-6);

}  // namespace mvsde::verify
