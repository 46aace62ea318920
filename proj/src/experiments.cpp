#include "mvsde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mvsde/brownian.hpp"
#include "mvsde/error.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Executor& outer(const RunContext& ctx) { return ctx.executor ? *ctx.executor : Executor::serial(); }

/// Cells run concurrently; a lone cell gets the executor for its particles instead.
template <typename F>
void for_cells(const RunContext& ctx, std::size_t n, F&& f) {
  const Executor* inner = n == 1 ? ctx.executor : nullptr;
  outer(ctx).parallel_for(n, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f(i, inner);
  });
}

std::vector<SchemeConfig> parse_schemes(const ExperimentConfig& cfg, const ModelSpec& model) {
  std::vector<SchemeConfig> out;
  for (const auto& s : cfg.schemes) out.push_back(parse_scheme(s, model.rho));
  return out;
}

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

void require_scalar(const ModelSpec& model, const char* what) {
  if (model.dim != 1) throw InvalidArgument(std::string(what) + ": only one-dimensional models");
}

/// One grid per step size (hs descending). When every h is an integer multiple
/// of the smallest, all levels are coarsenings of the finest grid and share its
/// Brownian path; otherwise each level draws its own grid from `seed`.
std::vector<PathGrid> level_grids(const std::vector<double>& hs, double horizon, std::size_t n_particles,
                                  std::size_t noise_dim, std::uint64_t seed, const Executor* executor) {
  const double finest = hs.back();
  const std::size_t n_fine = steps_for(horizon, finest, "h_list");
  std::vector<std::size_t> factors;
  for (double h : hs) {
    const double q = h / finest;
    const auto f = static_cast<std::size_t>(std::llround(q));
    if (f < 1 || std::abs(q - static_cast<double>(f)) > 1e-9 * q || n_fine % f != 0) {
      factors.clear();
      break;
    }
    factors.push_back(f);
  }
  std::vector<PathGrid> grids;
  if (factors.empty()) {
    for (double h : hs) {
      grids.push_back(PathGrid::generate(seed, steps_for(horizon, h, "h_list"), horizon, n_particles, noise_dim, executor));
    }
    return grids;
  }
  const auto fine = PathGrid::generate(seed, n_fine, horizon, n_particles, noise_dim, executor);
  for (std::size_t f : factors) grids.push_back(f == 1 ? fine : fine.coarsen(f, executor));
  return grids;
}

}  // namespace

std::uint64_t repetition_seed(std::uint64_t seed, std::size_t r) noexcept {
  return r == 0 ? seed : rng::derive_seed(seed, r);
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx) {
  validate(cfg, Experiment::Converge);
  const auto schemes = parse_schemes(cfg, model);
  const std::size_t n_ref = steps_for(cfg.T, cfg.h_ref, "h_ref");
  const auto hs = descending(cfg.h_list);
  std::vector<std::size_t> factors;
  for (double h : hs) factors.push_back(coarsening_factor(cfg, h));

  const std::size_t n_s = schemes.size();
  const std::size_t n_h = hs.size();
  std::vector<double> sq_sum(n_s * n_h, 0.0);
  std::vector<char> diverged(n_s * n_h, 0);
  std::vector<char> ref_diverged(n_s, 0);

  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const auto grid = PathGrid::generate(repetition_seed(cfg.seed, rep), n_ref, cfg.T, cfg.N, model.noise_dim,
                                         ctx.executor);
    std::vector<PathGrid> coarse;
    for (std::size_t f : factors) coarse.push_back(f == 1 ? grid : grid.coarsen(f, ctx.executor));

    std::vector<std::optional<Ensemble>> refs(n_s);
    for_cells(ctx, n_s, [&](std::size_t s, const Executor* inner) {
      refs[s] = simulate(model, schemes[s], grid, {{}, {}, inner, ctx.use_kernels}).final_state;
    });
    for (std::size_t s = 0; s < n_s; ++s) {
      if (refs[s]->diverged()) ref_diverged[s] = 1;
    }
    for_cells(ctx, n_s * n_h, [&](std::size_t cell, const Executor* inner) {
      const std::size_t s = cell / n_h;
      const std::size_t j = cell % n_h;
      const Ensemble run = factors[j] == 1 ? *refs[s]
                                           : simulate(model, schemes[s], coarse[j], {{}, {}, inner, ctx.use_kernels})
                                                 .final_state;
      if (run.diverged() || refs[s]->diverged()) {
        diverged[cell] = 1;
        return;
      }
      const double e = rmse(*refs[s], run);
      sq_sum[cell] += e * e;
    });
  }

  ConvergenceReport report;
  report.model = model.name;
  report.h_ref = cfg.h_ref;
  report.particles = cfg.N;
  for (std::size_t s = 0; s < n_s; ++s) {
    SchemeConvergence sc;
    sc.scheme = cfg.schemes[s];
    sc.reference_diverged = ref_diverged[s] != 0;
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < n_h; ++j) {
      ConvergenceRow row;
      row.h = hs[j];
      row.factor = factors[j];
      row.log2_h = std::log2(hs[j]);
      row.diverged = diverged[s * n_h + j] != 0;
      row.rmse = row.diverged ? kNaN : std::sqrt(sq_sum[s * n_h + j] / static_cast<double>(cfg.repetitions));
      row.log2_rmse = row.diverged ? kNaN : std::log2(row.rmse);
      row.excluded = row.diverged || !(row.rmse > 0.0) || !std::isfinite(row.log2_rmse);
      if (!row.excluded) {
        xs.push_back(row.log2_h);
        ys.push_back(row.log2_rmse);
      }
      sc.rows.push_back(row);
    }
    if (xs.size() >= 3) sc.fit = least_squares(xs, ys);
    report.schemes.push_back(std::move(sc));
  }
  return report;
}

std::vector<double> density_times(const ExperimentConfig& cfg) {
  if (!cfg.record_times.empty()) return cfg.record_times;
  std::vector<double> out;
  for (double t : {1.0, 3.0, 10.0}) {
    if (t <= cfg.T * (1.0 + 1e-12)) out.push_back(t);
  }
  if (out.empty()) out.push_back(cfg.T);
  return out;
}

DensityBundle run_density(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx) {
  validate(cfg, Experiment::Density);
  require_scalar(model, "run_density");
  auto schemes = parse_schemes(cfg, model);
  std::vector<std::string> names = cfg.schemes;
  std::vector<double> hs = descending(cfg.h_list);
  const std::size_t n_regular = schemes.size() * hs.size();
  const bool with_reference = !cfg.reference_scheme.empty();
  const std::size_t n_ref = steps_for(cfg.T, cfg.h_ref, "h_ref");
  const auto times = density_times(cfg);
  const auto grid = PathGrid::generate(cfg.seed, n_ref, cfg.T, cfg.N, model.noise_dim, ctx.executor);
  const SchemeConfig reference = with_reference ? parse_scheme(cfg.reference_scheme, model.rho) : SchemeConfig{};

  const std::size_t n_cells = n_regular + (with_reference ? 1 : 0);
  std::vector<std::vector<DensityEntry>> out(n_cells);
  for_cells(ctx, n_cells, [&](std::size_t cell, const Executor* inner) {
    const bool is_ref = cell == n_regular;
    const SchemeConfig& scheme = is_ref ? reference : schemes[cell / hs.size()];
    const double h = is_ref ? cfg.h_ref : hs[cell % hs.size()];
    const PathGrid run_grid = is_ref ? grid : grid.coarsen(coarsening_factor(cfg, h));
    const auto traj = simulate(model, scheme, run_grid, {times, {}, inner, ctx.use_kernels});
    for (std::size_t j = 0; j < times.size(); ++j) {
      DensityEntry e;
      e.scheme = is_ref ? cfg.reference_scheme : names[cell / hs.size()];
      e.h = h;
      e.t = times[j];
      e.reference = is_ref;
      const Ensemble& ens = traj.records[j];
      e.states.assign(ens.states().begin(), ens.states().end());
      e.diverged = traj.divergence && traj.divergence->t <= times[j] * (1.0 + 1e-12);
      const bool any_finite = std::any_of(e.states.begin(), e.states.end(), [](double v) { return std::isfinite(v); });
      if (any_finite) e.curve = kde(ens, KdeGrid{std::nullopt, std::nullopt, cfg.kde_points});
      out[cell].push_back(std::move(e));
    }
  });
  DensityBundle bundle;
  for (auto& cell : out) {
    for (auto& e : cell) bundle.entries.push_back(std::move(e));
  }
  return bundle;
}

PathBundle run_paths(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx) {
  validate(cfg, Experiment::Paths);
  require_scalar(model, "run_paths");
  for (std::size_t id : cfg.trace_ids) {
    if (id >= cfg.N) throw ConfigError(fmt::format("trace id {} is not below N = {}", id, cfg.N));
  }
  const auto schemes = parse_schemes(cfg, model);
  const auto hs = descending(cfg.h_list);
  const std::size_t n_cells = schemes.size() * hs.size() * cfg.repetitions;
  std::vector<std::vector<PathGrid>> grids;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    grids.push_back(level_grids(hs, cfg.T, cfg.N, model.noise_dim, repetition_seed(cfg.seed, rep), ctx.executor));
  }
  std::vector<PathEntry> out(n_cells);
  for_cells(ctx, n_cells, [&](std::size_t cell, const Executor* inner) {
    const std::size_t rep = cell % cfg.repetitions;
    const std::size_t j = (cell / cfg.repetitions) % hs.size();
    const std::size_t s = cell / (cfg.repetitions * hs.size());
    const double h = hs[j];
    const std::uint64_t seed = repetition_seed(cfg.seed, rep);
    const PathGrid& grid = grids[rep][j];
    SimulateOptions opts{{}, TraceSpec{cfg.trace_ids, cfg.trace_stride}, inner, ctx.use_kernels};
    if (cfg.trace_ids.empty()) opts.trace.reset();
    const auto traj = simulate(model, schemes[s], grid, opts);

    PathEntry& e = out[cell];
    e.scheme = cfg.schemes[s];
    e.h = h;
    e.seed = seed;
    if (traj.trace) e.table = path_trace(traj, cfg.trace_ids, cfg.trace_stride);
    StabilitySummary& sum = e.summary;
    sum.burn_in = cfg.burn_in;
    sum.settled_max_abs = -kInf;
    const double step = traj.step_size;
    for (std::size_t k = 0; k < traj.max_abs.size(); ++k) {
      sum.max_abs = std::max(sum.max_abs, traj.max_abs[k]);
      if (static_cast<double>(k) * step >= cfg.burn_in - 1e-12) {
        sum.settled_max_abs = std::max(sum.settled_max_abs, traj.max_abs[k]);
      }
    }
    if (sum.settled_max_abs == -kInf) sum.settled_max_abs = traj.max_abs.back();
    if (traj.divergence) {
      sum.first_nonfinite_t = traj.divergence->t;
      for (double v : traj.final_state.states()) sum.nonfinite_paths += std::isfinite(v) ? 0 : 1;
    }
  });
  return PathBundle{std::move(out)};
}

MomentBundle run_moments(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx) {
  validate(cfg, Experiment::Moments);
  const auto schemes = parse_schemes(cfg, model);
  const auto hs = descending(cfg.h_list);
  const std::size_t n_cells = schemes.size() * hs.size() * cfg.repetitions;
  std::vector<std::vector<PathGrid>> grids;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    grids.push_back(level_grids(hs, cfg.T, cfg.N, model.noise_dim, repetition_seed(cfg.seed, rep), ctx.executor));
  }
  std::vector<MomentSeries> out(n_cells);
  for_cells(ctx, n_cells, [&](std::size_t cell, const Executor* inner) {
    const std::size_t rep = cell % cfg.repetitions;
    const std::size_t j = (cell / cfg.repetitions) % hs.size();
    const std::size_t s = cell / (cfg.repetitions * hs.size());
    const double h = hs[j];
    const std::uint64_t seed = repetition_seed(cfg.seed, rep);
    const PathGrid& grid = grids[rep][j];
    const auto traj = simulate(model, schemes[s], grid, {{}, TraceSpec{{}, cfg.moment_stride}, inner, ctx.use_kernels});

    MomentSeries& ms = out[cell];
    ms.scheme = cfg.schemes[s];
    ms.h = h;
    ms.seed = seed;
    ms.orders = cfg.orders;
    ms.sup.assign(cfg.orders.size(), 0.0);
    const Trace& tr = *traj.trace;
    const std::size_t width = tr.particle_ids.size() * tr.dim;
    for (std::size_t row = 0; row < tr.steps.size(); ++row) {
      ms.times.push_back(tr.times[row]);
      const Ensemble ens(std::vector<double>(tr.values.begin() + row * width, tr.values.begin() + (row + 1) * width),
                         tr.dim);
      for (std::size_t o = 0; o < cfg.orders.size(); ++o) {
        const double v = abs_moment(ens, cfg.orders[o]);
        ms.values.push_back(v);
        ms.sup[o] = std::isfinite(v) ? std::max(ms.sup[o], v) : kInf;
      }
    }
    ms.exceeded_ceiling = std::any_of(ms.sup.begin(), ms.sup.end(), [&](double v) { return !(v <= cfg.moment_ceiling); });
    if (traj.divergence) ms.first_nonfinite_t = traj.divergence->t;
  });
  return MomentBundle{std::move(out)};
}

Ensemble terminal_ensemble(const ModelSpec& model, const SchemeConfig& scheme, double horizon, double h,
                           std::size_t n_particles, std::uint64_t seed, const RunContext& ctx) {
  const auto grid = PathGrid::generate(seed, steps_for(horizon, h, "h"), horizon, n_particles, model.noise_dim,
                                       ctx.executor);
  return simulate(model, scheme, grid, {{}, {}, ctx.executor, ctx.use_kernels}).final_state;
}

std::uint64_t default_proxy_seed(std::uint64_t seed) noexcept { return rng::derive_seed(seed, 0xFFFFFFFFull); }

NScalingReport run_nscaling(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx) {
  validate(cfg, Experiment::NScaling);
  require_scalar(model, "run_nscaling");
  const SchemeConfig scheme = parse_scheme(cfg.schemes.front(), model.rho);
  const double h = cfg.h_list.front();
  NScalingReport report;
  report.scheme = cfg.schemes.front();
  report.h = h;
  report.proxy_n = cfg.proxy_n;
  report.proxy_seed = cfg.proxy_seed.value_or(default_proxy_seed(cfg.seed));
  const Ensemble proxy = terminal_ensemble(model, scheme, cfg.T, h, cfg.proxy_n, report.proxy_seed, ctx);
  if (proxy.diverged()) throw Error("run_nscaling: proxy run diverged");

  const std::size_t reps = cfg.repetitions;
  const std::size_t n_cells = cfg.n_list.size() * reps;
  std::vector<double> errors(n_cells);
  for_cells(ctx, n_cells, [&](std::size_t cell, const Executor* inner) {
    const std::size_t n = cfg.n_list[cell / reps];
    const std::uint64_t seed = repetition_seed(cfg.seed, cell % reps);
    const Ensemble e = terminal_ensemble(model, scheme, cfg.T, h, n, seed, {inner, ctx.use_kernels});
    errors[cell] = e.diverged() ? kNaN : w2_1d(e.states(), proxy.states());
  });

  std::vector<double> xs, ys;
  for (std::size_t a = 0; a < cfg.n_list.size(); ++a) {
    NScalingRow row;
    row.n = cfg.n_list[a];
    row.errors.assign(errors.begin() + a * reps, errors.begin() + (a + 1) * reps);
    double mean = 0.0;
    for (double e : row.errors) mean += e;
    mean /= static_cast<double>(reps);
    double ss = 0.0;
    for (double e : row.errors) ss += (e - mean) * (e - mean);
    row.mean_error = mean;
    row.std_error = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) / std::sqrt(static_cast<double>(reps)) : 0.0;
    if (std::isfinite(mean) && mean > 0.0) {
      xs.push_back(std::log2(static_cast<double>(row.n)));
      ys.push_back(std::log2(mean));
    }
    report.rows.push_back(std::move(row));
  }
  if (xs.size() >= 2) report.fit = least_squares(xs, ys);
  return report;
}

namespace {

std::string constants_text(const verify::TestedConstants& c) {
  return fmt::format("L={:g};r1={:g};r2={:g};r3={:g};p0={:g};p1={:g};rho={:g}", c.L, c.r1, c.r2, c.r3, c.p0, c.p1,
                     c.rho);
}

CheckRow to_row(const verify::AssumptionReport& r, std::string subject = {}) {
  CheckRow row;
  row.subject = subject.empty() ? r.subject : std::move(subject);
  row.assumption = r.assumption;
  row.pass = r.passed();
  row.max_violation = r.max_violation;
  row.witness = r.witness_text();
  row.constants = constants_text(r.constants);
  if (!r.caveat.empty()) row.constants += ";caveat=" + r.caveat;
  return row;
}

}  // namespace

CheckReport run_check(const ExperimentConfig& cfg, const ModelSpec& model, const verify::SampleSpec& spec) {
  using verify::Assumption;
  CheckReport report;
  struct OpCase {
    TamingOperator op;
    double r1;
    double r2;
  };
  const std::vector<OpCase> ops{
      {TamingOperator::identity(), 1.0, 1.0},
      {TamingOperator::drift_tamed(0.5), 0.5, 2.0},
      {TamingOperator::modified(), 1.0, 3.0},
      {TamingOperator::tanh(1.0), 1.0, 2.0},
      {TamingOperator::sin(1.0), 0.5, 2.0},
      {TamingOperator::fully_tamed(model.rho), 0.5, 2.0},
  };
  for (const auto& c : ops) {
    verify::TestedConstants k;
    k.rho = model.rho;
    report.rows.push_back(to_row(verify::check_taming(c.op, Assumption::H1, k, spec)));
    k.r1 = c.r1;
    k.r2 = c.r2;
    report.rows.push_back(to_row(verify::check_taming(c.op, Assumption::H2, k, spec)));
    const auto h3 = c.op.declared_h3().value_or(ConsistencyExponents{});
    k.r1 = h3.r1;
    k.r2 = h3.r2;
    k.r3 = h3.r3;
    report.rows.push_back(to_row(verify::check_taming(c.op, Assumption::H3, k, spec)));
    const double p_bar = (4.0 * model.rho + 2.5) * verify::compute_G(model.rho, c.r1, c.r2) + 2.0 * model.rho + 1.0;
    report.theory.push_back(verify::theory_constants(model.rho, c.r1, c.r2, p_bar));
  }
  {
    verify::TestedConstants k;
    k.rho = model.rho;
    const auto sweep = verify::minimal_passing_L(TamingOperator::fully_tamed(model.rho), Assumption::EX35_BOUND, k,
                                                 spec, &model);
    report.rows.push_back(to_row(sweep.report));
  }
  std::vector<ModelSpec> models;
  for (const auto& [name, entry] : ModelRegistry::global().entries()) {
    models.push_back(name == cfg.model ? model : entry.factory({}));
  }
  if (!ModelRegistry::global().contains(model.name)) models.push_back(model);
  for (const auto& m : models) {
    for (Assumption a : {Assumption::A2, Assumption::A3, Assumption::A5, Assumption::A6}) {
      verify::TestedConstants k;
      k.rho = m.rho;
      const auto sweep = verify::minimal_passing_L(m, a, k, spec);
      report.rows.push_back(to_row(sweep.report));
    }
  }
  return report;
}

}  // namespace mvsde
