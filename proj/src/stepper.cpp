#include "mvsde/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/error.hpp"
#include "mvsde/simd/kernels.hpp"

namespace mvsde {
namespace {

constexpr std::size_t kParticleGrain = 2048;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Executor& executor_of(const Executor* ex) { return ex ? *ex : Executor::serial(); }

bool polynomial_route(const ModelSpec& model, bool use_kernels) {
  return use_kernels && model.polynomial && model.dim == 1 && model.noise_dim == 1;
}

void check_step_inputs(const Ensemble& ens, const ModelSpec& model, double h, std::span<const double> dw,
                       const char* what) {
  if (!(h > 0.0 && h < 1.0)) throw InvalidArgument(std::string(what) + ": step size must lie in (0, 1)");
  if (ens.dim() != model.dim) throw DimensionMismatch(std::string(what) + ": ensemble/model dimension mismatch");
  if (dw.size() != ens.size() * model.noise_dim) {
    throw DimensionMismatch(std::string(what) + ": increments must hold N x m values");
  }
}

// Wraps freshly computed states: non-finite entries become NaN and the first
// offending particle is recorded (an inherited divergence is kept).
Ensemble finish_step(std::vector<double> next, const Ensemble& prev, double t_next, std::size_t step_next) {
  std::optional<Divergence> divergence = prev.divergence();
  const std::size_t d = prev.dim();
  for (std::size_t idx = 0; idx < next.size(); ++idx) {
    if (!std::isfinite(next[idx])) {
      next[idx] = kNaN;
      if (!divergence) divergence = Divergence{idx / d, step_next, t_next};
    }
  }
  return Ensemble(std::move(next), d, t_next, step_next, divergence);
}

Ensemble euler_step_at(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                       std::span<const double> dw, const StepOptions& options, double t_next, std::size_t step_next) {
  if (cfg.method != Method::ModifiedEuler) throw InvalidArgument("euler_step: scheme is not modified Euler");
  check_step_inputs(ens, model, h, dw, "euler_step");
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  const std::size_t m = model.noise_dim;
  const double t = ens.t();
  const MeasureView& mu = ens.measure();
  const TamingCoefficients c1 = cfg.t1.coefficients(h);
  const TamingCoefficients c2 = cfg.t2.coefficients(h);
  const auto x = ens.states();
  std::vector<double> next(n * d);
  const Executor& ex = executor_of(options.executor);

  if (polynomial_route(model, options.use_kernels)) {
    std::vector<double> drift_coeffs, diffusion_coeffs;
    model.polynomial->coefficients(t, mu, drift_coeffs, diffusion_coeffs);
    std::vector<double> drift(n), diffusion(n);
    const simd::KernelTable& k = simd::kernels();
    ex.parallel_for(n, kParticleGrain, [&](std::size_t b, std::size_t e) {
      const std::size_t len = e - b;
      const auto xs = x.subspan(b, len);
      const auto drift_out = std::span<double>(drift).subspan(b, len);
      const auto diffusion_out = std::span<double>(diffusion).subspan(b, len);
      k.poly_eval(drift_coeffs, xs, drift_out);
      k.poly_eval(diffusion_coeffs, xs, diffusion_out);
      k.tamed_update({c1, c2, h, xs, drift_out, diffusion_out, dw.subspan(b, len),
                      std::span<double>(next).subspan(b, len)});
    });
  } else {
    ex.parallel_for(n, kParticleGrain, [&](std::size_t b, std::size_t e) {
      std::vector<double> raw(d), tamed(d), acc(d);
      for (std::size_t i = b; i < e; ++i) {
        const auto xi = x.subspan(i * d, d);
        model.drift(t, xi, mu, raw);
        apply_taming(c1, raw, xi, tamed);
        for (std::size_t j = 0; j < d; ++j) acc[j] = xi[j] + tamed[j] * h;
        for (std::size_t r = 0; r < m; ++r) {
          model.diffusion_col(t, xi, mu, r, raw);
          apply_taming(c2, raw, xi, tamed);
          const double w = dw[i * m + r];
          for (std::size_t j = 0; j < d; ++j) acc[j] += tamed[j] * w;
        }
        std::copy(acc.begin(), acc.end(), next.begin() + static_cast<std::ptrdiff_t>(i * d));
      }
    });
  }
  return finish_step(std::move(next), ens, t_next, step_next);
}

// Dense solve of A z = rhs (row-major d x d) with partial pivoting; false if singular.
bool solve_dense(std::vector<double>& a, std::vector<double>& rhs, std::size_t d) {
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::fabs(a[r * d + col]) > std::fabs(a[pivot * d + col])) pivot = r;
    }
    if (a[pivot * d + col] == 0.0) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < d; ++c) std::swap(a[col * d + c], a[pivot * d + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = col + 1; r < d; ++r) {
      const double f = a[r * d + col] / a[col * d + col];
      for (std::size_t c = col; c < d; ++c) a[r * d + c] -= f * a[col * d + c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t col = d; col-- > 0;) {
    double s = rhs[col];
    for (std::size_t c = col + 1; c < d; ++c) s -= a[col * d + c] * rhs[c];
    rhs[col] = s / a[col * d + col];
  }
  return true;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

// Newton iteration for F(y) = y - x - h b(y) = 0 with a forward-difference
// Jacobian and step halving when the residual grows. Returns the final residual.
template <typename DriftEval>
double newton_solve(std::span<const double> x, double h, const NewtonConfig& cfg, DriftEval&& drift,
                    std::span<double> y) {
  const std::size_t d = x.size();
  std::copy(x.begin(), x.end(), y.begin());
  std::vector<double> b(d), bump(d), f(d), f_trial(d), trial(d), jac(d * d), delta(d), shifted(d);
  auto residual = [&](std::span<const double> at, std::span<double> out) {
    drift(at, std::span<double>(b));
    for (std::size_t j = 0; j < d; ++j) out[j] = at[j] - x[j] - h * b[j];
    return norm2(out);
  };
  const double tol = cfg.tol * std::max(1.0, norm2(x));
  double res = residual(y, f);
  for (int it = 0; it < cfg.max_iter && res > tol; ++it) {
    const std::vector<double> b_at_y = b;
    for (std::size_t c = 0; c < d; ++c) {
      const double eps = cfg.jacobian_fd_eps * std::max(1.0, std::fabs(y[c]));
      std::copy(y.begin(), y.end(), shifted.begin());
      shifted[c] += eps;
      const double actual = shifted[c] - y[c];
      drift(shifted, std::span<double>(bump));
      for (std::size_t r = 0; r < d; ++r) {
        jac[r * d + c] = (r == c ? 1.0 : 0.0) - h * (bump[r] - b_at_y[r]) / actual;
      }
    }
    std::copy(f.begin(), f.end(), delta.begin());
    if (!solve_dense(jac, delta, d)) break;
    double lambda = 1.0;
    double res_trial = 0.0;
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = y[j] - lambda * delta[j];
      res_trial = residual(trial, f_trial);
      if (std::isfinite(res_trial) && res_trial < res) break;
      lambda *= 0.5;
    }
    if (!(std::isfinite(res_trial) && res_trial < res)) break;
    std::copy(trial.begin(), trial.end(), y.begin());
    std::copy(f_trial.begin(), f_trial.end(), f.begin());
    res = res_trial;
  }
  return res <= tol ? 0.0 : res;
}

Ensemble split_step_at(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                       std::span<const double> dw, const StepOptions& options, double t_next, std::size_t step_next) {
  if (cfg.method != Method::SplitStep) throw InvalidArgument("split_step: scheme is not split-step");
  check_step_inputs(ens, model, h, dw, "split_step");
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  const std::size_t m = model.noise_dim;
  const double t = ens.t();
  const MeasureView& mu = ens.measure();
  const auto x = ens.states();
  std::vector<double> next(n * d);
  std::vector<double> failure(n, 0.0);
  const Executor& ex = executor_of(options.executor);

  std::vector<double> drift_coeffs, diffusion_coeffs;
  const bool poly = polynomial_route(model, options.use_kernels);
  if (poly) model.polynomial->coefficients(t, mu, drift_coeffs, diffusion_coeffs);

  ex.parallel_for(n, kParticleGrain, [&](std::size_t b, std::size_t e) {
    std::vector<double> y(d), col(d);
    for (std::size_t i = b; i < e; ++i) {
      const auto xi = x.subspan(i * d, d);
      if (!std::all_of(xi.begin(), xi.end(), [](double v) { return std::isfinite(v); })) {
        std::fill(next.begin() + static_cast<std::ptrdiff_t>(i * d),
                  next.begin() + static_cast<std::ptrdiff_t>((i + 1) * d), kNaN);
        continue;
      }
      double res;
      if (poly) {
        res = newton_solve(xi, h, cfg.newton,
                           [&](std::span<const double> at, std::span<double> out) { out[0] = horner(drift_coeffs, at[0]); },
                           y);
      } else {
        res = newton_solve(xi, h, cfg.newton,
                           [&](std::span<const double> at, std::span<double> out) { model.drift(t, at, mu, out); }, y);
      }
      if (res != 0.0) {
        failure[i] = std::isnan(res) ? std::numeric_limits<double>::infinity() : res;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) next[i * d + j] = y[j];
      for (std::size_t r = 0; r < m; ++r) {
        if (poly) {
          col[0] = horner(diffusion_coeffs, y[0]);
        } else {
          model.diffusion_col(t, y, mu, r, col);
        }
        const double w = dw[i * m + r];
        for (std::size_t j = 0; j < d; ++j) next[i * d + j] += col[j] * w;
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (failure[i] != 0.0) throw NewtonNonConvergence(i, failure[i]);
  }
  return finish_step(std::move(next), ens, t_next, step_next);
}

Ensemble step_at(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                 std::span<const double> dw, const StepOptions& options, double t_next, std::size_t step_next) {
  if (cfg.method == Method::SplitStep) return split_step_at(ens, model, cfg, h, dw, options, t_next, step_next);
  return euler_step_at(ens, model, cfg, h, dw, options, t_next, step_next);
}

Ensemble nan_ensemble(std::size_t n, std::size_t d, double t, std::size_t step, const std::optional<Divergence>& div) {
  return Ensemble(std::vector<double>(n * d, kNaN), d, t, step, div);
}

}  // namespace

SchemeConfig SchemeConfig::modified_euler(const TamingOperator& op) {
  return modified_euler(op, op.diffusion_counterpart());
}

SchemeConfig SchemeConfig::modified_euler(const TamingOperator& t1, const TamingOperator& t2) {
  SchemeConfig cfg;
  cfg.method = Method::ModifiedEuler;
  cfg.t1 = t1;
  cfg.t2 = t2;
  return cfg;
}

SchemeConfig SchemeConfig::split_step(NewtonConfig newton) {
  if (!(newton.tol > 0.0) || newton.max_iter < 1 || !(newton.jacobian_fd_eps > 0.0)) {
    throw InvalidArgument("Newton settings need tol > 0, max_iter >= 1 and a positive bump");
  }
  SchemeConfig cfg;
  cfg.method = Method::SplitStep;
  cfg.newton = newton;
  return cfg;
}

std::string SchemeConfig::label() const {
  if (method == Method::SplitStep) return "ssm";
  const std::string l1 = t1.label();
  if (t2.label() == t1.diffusion_counterpart().label()) return l1;
  return l1 + "+" + t2.label();
}

SchemeConfig parse_scheme(std::string_view text, double rho) {
  if (text == "ssm") return SchemeConfig::split_step();
  return SchemeConfig::modified_euler(parse_taming(text, rho));
}

Ensemble::Ensemble(std::vector<double> states, std::size_t dim, double t, std::size_t step_index,
                   std::optional<Divergence> divergence)
    : measure_(std::make_shared<const std::vector<double>>(std::move(states)), dim),
      t_(t),
      step_index_(step_index),
      divergence_(divergence) {}

Ensemble initial_ensemble(const ModelSpec& model, std::uint64_t seed, std::size_t n_particles) {
  if (n_particles == 0) throw InvalidArgument("initial_ensemble: need at least one particle");
  std::vector<double> states(n_particles * model.dim);
  for (std::size_t i = 0; i < n_particles; ++i) {
    rng::RngStream stream(seed, rng::StreamTag::Initial, static_cast<std::uint32_t>(i));
    model.initial_sampler(stream, std::span<double>(states).subspan(i * model.dim, model.dim));
  }
  for (double v : states) {
    if (!std::isfinite(v)) throw NonFiniteCoefficient("initial sampler produced a non-finite state", 0.0, {v});
  }
  return Ensemble(std::move(states), model.dim);
}

Ensemble euler_step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                    std::span<const double> dw, const StepOptions& options) {
  return euler_step_at(ens, model, cfg, h, dw, options, ens.t() + h, ens.step_index() + 1);
}

Ensemble split_step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
                    std::span<const double> dw, const StepOptions& options) {
  return split_step_at(ens, model, cfg, h, dw, options, ens.t() + h, ens.step_index() + 1);
}

Ensemble step(const Ensemble& ens, const ModelSpec& model, const SchemeConfig& cfg, double h,
              std::span<const double> dw, const StepOptions& options) {
  return step_at(ens, model, cfg, h, dw, options, ens.t() + h, ens.step_index() + 1);
}

std::size_t grid_index(double t, double horizon, std::size_t steps) {
  const double pos = t / horizon * static_cast<double>(steps);
  const double k = std::floor(pos + 1e-9 * std::max(1.0, pos));
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(steps)));
}

Trajectory simulate(const ModelSpec& model, const SchemeConfig& cfg, const PathGrid& grid,
                    const SimulateOptions& options) {
  if (grid.noise_dim() != model.noise_dim) throw DimensionMismatch("simulate: grid/model noise dimension mismatch");
  const std::size_t n_steps = grid.steps();
  const double horizon = grid.horizon();
  const double h = grid.step_size();
  const std::size_t n = grid.particles();
  const std::size_t d = model.dim;
  const std::size_t m = model.noise_dim;

  std::vector<std::size_t> record_index;
  for (double t : options.record_times) {
    if (!(t >= 0.0 && t <= horizon * (1.0 + 1e-12))) {
      throw InvalidArgument("simulate: record time " + std::to_string(t) + " outside [0, T]");
    }
    record_index.push_back(grid_index(t, horizon, n_steps));
  }

  Ensemble ens = initial_ensemble(model, grid.seed(), n);
  std::vector<std::optional<Ensemble>> records(record_index.size());

  std::optional<Trace> trace;
  if (options.trace) {
    Trace tr;
    tr.particle_ids = options.trace->particle_ids;
    if (tr.particle_ids.empty()) {
      for (std::size_t i = 0; i < n; ++i) tr.particle_ids.push_back(i);
    }
    for (std::size_t id : tr.particle_ids) {
      if (id >= n) throw InvalidArgument("simulate: traced particle id out of range");
    }
    if (options.trace->stride == 0) throw InvalidArgument("simulate: trace stride must be positive");
    tr.stride = options.trace->stride;
    tr.dim = d;
    trace = std::move(tr);
  }

  std::vector<double> max_abs;
  max_abs.reserve(n_steps + 1);
  auto observe = [&](const Ensemble& e, std::size_t k) {
    double mx = 0.0;
    for (double v : e.states()) mx = std::isfinite(v) ? std::max(mx, std::fabs(v)) : std::numeric_limits<double>::infinity();
    max_abs.push_back(mx);
    for (std::size_t j = 0; j < record_index.size(); ++j) {
      if (record_index[j] == k) records[j] = e;
    }
    if (trace && k % trace->stride == 0) {
      trace->steps.push_back(k);
      trace->times.push_back(static_cast<double>(k) * h);
      for (std::size_t id : trace->particle_ids) {
        const auto p = e.particle(id);
        trace->values.insert(trace->values.end(), p.begin(), p.end());
      }
    }
  };

  observe(ens, 0);
  const StepOptions step_options{options.executor, options.use_kernels};
  std::vector<double> dw(n * m);
  std::size_t k = 0;
  for (; k < n_steps && !ens.diverged(); ++k) {
    grid.step_increments(k, dw);
    ens = step_at(ens, model, cfg, h, dw, step_options, static_cast<double>(k + 1) * h, k + 1);
    observe(ens, k + 1);
  }
  // After a divergence the remaining grid points carry the NaN sentinel.
  for (std::size_t rest = k + 1; rest <= n_steps; ++rest) {
    const bool wanted = (trace && rest % trace->stride == 0) ||
                        std::find(record_index.begin(), record_index.end(), rest) != record_index.end();
    if (wanted) {
      observe(nan_ensemble(n, d, static_cast<double>(rest) * h, rest, ens.divergence()), rest);
    } else {
      max_abs.push_back(std::numeric_limits<double>::infinity());
    }
  }

  Trajectory traj{options.record_times, {}, ens, ens.divergence(), std::move(trace), std::move(max_abs), h};
  traj.records.reserve(records.size());
  for (auto& r : records) traj.records.push_back(std::move(*r));
  return traj;
}

}  // namespace mvsde
