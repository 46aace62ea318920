#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/brownian.hpp"
#include "mvsde/measure.hpp"
#include "mvsde/model.hpp"
#include "mvsde/parallel.hpp"
#include "mvsde/taming.hpp"

namespace mvsde {

struct NewtonConfig {
  /// Residual tolerance, scaled by max(1, |X_k|) so large states stay solvable
  /// in double precision.
  double tol = 1e-12;
  int max_iter = 50;
  /// Relative forward-difference bump for the Jacobian of b.
  double jacobian_fd_eps = 1e-7;
};

enum class Method { ModifiedEuler, SplitStep };

struct SchemeConfig {
  Method method = Method::ModifiedEuler;
  TamingOperator t1 = TamingOperator::identity();
  TamingOperator t2 = TamingOperator::identity();
  NewtonConfig newton;

  /// Modified Euler with T1 = op and T2 = op's diffusion counterpart.
  static SchemeConfig modified_euler(const TamingOperator& op);
  static SchemeConfig modified_euler(const TamingOperator& t1, const TamingOperator& t2);
  static SchemeConfig split_step(NewtonConfig newton = {});

  std::string label() const;
};

/// ssm, or any taming name accepted by parse_taming.
SchemeConfig parse_scheme(std::string_view text, double rho);

struct Divergence {
  std::size_t particle = 0;
  std::size_t step = 0;
  double t = 0.0;
};

/// N particle states in R^d at one grid time, with the empirical measure of
/// exactly those states. Immutable; stepping produces a new ensemble.
class Ensemble {
 public:
  Ensemble(std::vector<double> states, std::size_t dim, double t = 0.0, std::size_t step_index = 0,
           std::optional<Divergence> divergence = std::nullopt);

  std::size_t size() const noexcept { return measure_.size(); }
  std::size_t dim() const noexcept { return measure_.dim(); }
  std::span<const double> states() const noexcept { return measure_.particles(); }
  std::span<const double> particle(std::size_t i) const noexcept { return measure_.particle(i); }
  double t() const noexcept { return t_; }
  std::size_t step_index() const noexcept { return step_index_; }
  const MeasureView& measure() const noexcept { return measure_; }
  const std::optional<Divergence>& divergence() const noexcept { return divergence_; }
  bool diverged() const noexcept { return divergence_.has_value(); }

 private:
  MeasureView measure_;
  double t_;
  std::size_t step_index_;
  std::optional<Divergence> divergence_;
};

/// X_0^i drawn from the model's initial law on stream (seed, Initial, i).
Ensemble initial_ensemble(const ModelSpec& model, std::uint64_t seed, std::size_t n_particles);

struct StepOptions {
  const Executor* executor = nullptr;
  /// Use the vector kernels when the model has a polynomial form. Off forces the
  /// per-particle reference path.
  bool use_kernels = true;
};

/// One modified Euler step with the measure of `ens` frozen for every particle:
///   X' = X + T1(b(t, X, mu)) h + sum_r T2(sigma_r(t, X, mu)) dW_r.
/// `dw` holds N x m increments (row i = particle i). Non-finite results are
/// reported through the returned ensemble's divergence flag, not thrown.
Ensemble euler_step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                    std::span<const double> dw, const StepOptions& options = {});

/// One split step: Y = X + h b(t, Y, mu) by Newton iteration (mu frozen at the
/// input ensemble), then X' = Y + sum_r sigma_r(t, Y, mu) dW_r.
/// Throws NewtonNonConvergence for the lowest-index particle that fails.
Ensemble split_step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                    std::span<const double> dw, const StepOptions& options = {});

Ensemble step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
              std::span<const double> dw, const StepOptions& options = {});

struct TraceSpec {
  /// Empty selects every particle.
  std::vector<std::size_t> particle_ids;
  std::size_t stride = 1;
};

/// Particle values at every stride-th grid step; rows after a divergence are NaN.
struct Trace {
  std::vector<std::size_t> particle_ids;
  std::size_t stride = 1;
  std::size_t dim = 1;
  std::vector<std::size_t> steps;
  std::vector<double> times;
  /// row-major: rows x ids x dim
  std::vector<double> values;
};

struct SimulateOptions {
  std::vector<double> record_times;
  std::optional<TraceSpec> trace;
  const Executor* executor = nullptr;
  bool use_kernels = true;
};

struct Trajectory {
  std::vector<double> requested_times;
  /// One ensemble per requested time, taken at grid step floor(n t / T).
  std::vector<Ensemble> records;
  Ensemble final_state;
  std::optional<Divergence> divergence;
  std::optional<Trace> trace;
  /// max_i |X_k^i| for k = 0..steps simulated (+inf once non-finite).
  std::vector<double> max_abs;
  double step_size = 0.0;
};

/// Grid index floor(n t / T) of a requested time, with a 1e-9 relative guard
/// against representation error (t = 0.3 with h = 0.1 lands on step 3).
std::size_t grid_index(double t, double horizon, std::size_t steps);

/// Samples X_0 with the grid's seed and advances over the whole grid.
Trajectory simulate(const ModelSpec& model, const SchemeConfig& cfg, const PathGrid& grid,
                    const SimulateOptions& options = {});

}  // namespace mvsde
