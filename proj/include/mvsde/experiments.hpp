#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvsde/config.hpp"
#include "mvsde/parallel.hpp"
#include "mvsde/stats.hpp"
#include "mvsde/stepper.hpp"
#include "mvsde/verify.hpp"

namespace mvsde {

struct RunContext {
  /// Used across experiment cells; each cell then runs its particles serially.
  const Executor* executor = nullptr;
  bool use_kernels = true;
};

/// Seed of repetition r: the base seed for r = 0, a derived seed otherwise.
std::uint64_t repetition_seed(std::uint64_t seed, std::size_t r) noexcept;

struct ConvergenceRow {
  double h = 0.0;
  std::size_t factor = 1;
  /// Root of the mean squared RMSE over repetitions; NaN when a run diverged.
  double rmse = 0.0;
  double log2_h = 0.0;
  double log2_rmse = 0.0;
  bool diverged = false;
  /// Left out of the fit (diverged or zero error).
  bool excluded = false;
};

struct SchemeConvergence {
  std::string scheme;
  /// Sorted by descending h.
  std::vector<ConvergenceRow> rows;
  /// Least squares of log2_rmse on log2_h; needs three usable rows.
  std::optional<LinearFit> fit;
  bool reference_diverged = false;
};

struct ConvergenceReport {
  std::string model;
  double h_ref = 0.0;
  std::size_t particles = 0;
  std::vector<SchemeConvergence> schemes;
};

/// Per scheme: one reference run at h_ref and one run per coarse h, all on the
/// same Brownian paths and initial ensemble; RMSE at T.
ConvergenceReport run_convergence(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx = {});

struct DensityEntry {
  std::string scheme;
  double h = 0.0;
  double t = 0.0;
  bool reference = false;
  bool diverged = false;
  /// Empty when no particle stayed finite.
  std::optional<DensityCurve> curve;
  std::vector<double> states;
};

struct DensityBundle {
  std::vector<DensityEntry> entries;
};

/// Record times used by density runs when none are configured: {1, 3, 10}
/// intersected with [0, T], or {T} if that is empty.
std::vector<double> density_times(const ExperimentConfig& cfg);

/// Every scheme at every h of h_list plus, unless reference_scheme is empty,
/// the reference scheme at h_ref; a KDE per record time.
DensityBundle run_density(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx = {});

struct StabilitySummary {
  /// max_i |X_k^i| over all particles and all grid steps.
  double max_abs = 0.0;
  /// The same maximum restricted to t_k >= burn_in.
  double settled_max_abs = 0.0;
  double burn_in = 0.0;
  std::size_t nonfinite_paths = 0;
  std::optional<double> first_nonfinite_t;

  bool all_finite() const noexcept { return !first_nonfinite_t.has_value(); }
};

struct PathEntry {
  std::string scheme;
  double h = 0.0;
  std::uint64_t seed = 0;
  PathTable table;
  StabilitySummary summary;
};

struct PathBundle {
  std::vector<PathEntry> entries;
};

/// Every scheme at every h of h_list. Levels share one Brownian path (coarsened
/// from the finest h) when every h is an integer multiple of the finest;
/// otherwise each level has its own grid of T / h steps. The same holds for
/// run_moments.
PathBundle run_paths(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx = {});

struct MomentSeries {
  std::string scheme;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> orders;
  std::vector<double> times;
  /// rows x orders of (1/N) sum_i |X_k^i|^order.
  std::vector<double> values;
  /// Per order, the supremum over rows (+inf once a row is non-finite).
  std::vector<double> sup;
  bool exceeded_ceiling = false;
  std::optional<double> first_nonfinite_t;
};

struct MomentBundle {
  std::vector<MomentSeries> series;
};

MomentBundle run_moments(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx = {});

/// Terminal ensemble of one run with its own grid of T / h steps.
Ensemble terminal_ensemble(const ModelSpec& model, const SchemeConfig& scheme, double horizon, double h,
                           std::size_t n_particles, std::uint64_t seed, const RunContext& ctx = {});

struct NScalingRow {
  std::size_t n = 0;
  double mean_error = 0.0;
  /// Sample standard deviation of the errors over sqrt(repetitions).
  double std_error = 0.0;
  std::vector<double> errors;
};

struct NScalingReport {
  std::string scheme;
  double h = 0.0;
  std::size_t proxy_n = 0;
  std::uint64_t proxy_seed = 0;
  std::vector<NScalingRow> rows;
  /// log2(mean_error) against log2(n).
  std::optional<LinearFit> fit;
};

/// Proxy seed used when the config does not set one.
std::uint64_t default_proxy_seed(std::uint64_t seed) noexcept;

/// First scheme, first h. Repetition r of every N uses repetition_seed(seed, r); the
/// error is the exact one-dimensional W2 between terminal empirical measures.
NScalingReport run_nscaling(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx = {});

struct CheckRow {
  std::string subject;
  verify::Assumption assumption = verify::Assumption::H1;
  bool pass = false;
  double max_violation = 0.0;
  std::string witness;
  std::string constants;
};

struct CheckReport {
  std::vector<CheckRow> rows;
  std::vector<verify::TheoryConstants> theory;
};

/// Taming maps against H1/H2/H3 (and the fully tamed bound against `model`),
/// builtin models against A2/A3/A5/A6 with the smallest passing L.
CheckReport run_check(const ExperimentConfig& cfg, const ModelSpec& model, const verify::SampleSpec& spec = {});

}  // namespace mvsde
