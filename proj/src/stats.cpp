#include "mvsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvsde/error.hpp"
#include "mvsde/simd/kernels.hpp"

namespace mvsde {
namespace {

void require_same_shape(const Ensemble& a, const Ensemble& b, const char* what) {
  if (a.size() != b.size() || a.dim() != b.dim()) {
    throw DimensionMismatch(std::string(what) + ": ensembles differ in N or d");
  }
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double rmse(const Ensemble& a, const Ensemble& b) {
  require_same_shape(a, b, "rmse");
  return std::sqrt(simd::kernels().sum_sq_diff(a.states(), b.states()) / static_cast<double>(a.size()));
}

double w2sq_dirac0(const Ensemble& ens) {
  return ens.measure().w2sq_to_dirac0();
}

double w2_1d_exact(const Ensemble& a, const Ensemble& b) {
  if (a.dim() != 1 || b.dim() != 1) {
    throw InvalidArgument("w2_1d_exact: only one-dimensional ensembles; use rmse as the coupled bound");
  }
  require_same_shape(a, b, "w2_1d_exact");
  const auto sa = sorted_copy(a.states());
  const auto sb = sorted_copy(b.states());
  return std::sqrt(simd::kernels().sum_sq_diff(sa, sb) / static_cast<double>(sa.size()));
}

double w2_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("w2_1d: empty sample");
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const std::size_t n = sa.size();
  const std::size_t m = sb.size();
  // Quantile levels i/n and j/m compared exactly as i*m vs j*n.
  std::size_t i = 0, j = 0, u = 0;
  double acc = 0.0;
  while (i < n && j < m) {
    const std::size_t next_a = (i + 1) * m;
    const std::size_t next_b = (j + 1) * n;
    const std::size_t next = std::min(next_a, next_b);
    const double gap = sa[i] - sb[j];
    acc += static_cast<double>(next - u) * gap * gap;
    u = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return std::sqrt(acc / (static_cast<double>(n) * static_cast<double>(m)));
}

MomentTable raw_moments(const Ensemble& ens, std::span<const int> orders) {
  if (orders.empty()) throw InvalidArgument("raw_moments: need at least one order");
  MomentTable table;
  table.orders.assign(orders.begin(), orders.end());
  table.dim = ens.dim();
  for (int k : orders) {
    if (k < 1) throw InvalidArgument("raw_moments: orders must be positive");
    for (std::size_t j = 0; j < ens.dim(); ++j) table.values.push_back(ens.measure().raw_moment(k, j));
  }
  return table;
}

double abs_moment(const Ensemble& ens, int k) {
  if (k < 1) throw InvalidArgument("abs_moment: order must be positive");
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  std::vector<double> powers(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = ens.particle(i);
    double r2 = 0.0;
    for (double c : p) r2 += c * c;
    powers[i] = (k % 2 == 0) ? detail::int_pow(r2, k / 2) : detail::int_pow(std::sqrt(r2), k);
  }
  (void)d;
  return simd::kernels().power_sums(powers).s1 / static_cast<double>(n);
}

DensityCurve kde(const Ensemble& ens, const KdeGrid& grid, std::optional<double> bandwidth) {
  if (ens.dim() != 1) throw InvalidArgument("kde: only one-dimensional ensembles");
  if (grid.points < 2) throw InvalidArgument("kde: need at least two grid points");
  std::vector<double> xs;
  xs.reserve(ens.size());
  for (double v : ens.states()) {
    if (std::isfinite(v)) xs.push_back(v);
  }
  if (xs.empty()) throw InvalidArgument("kde: no finite particles");

  DensityCurve curve;
  curve.n_source = xs.size();
  curve.n_excluded = ens.size() - xs.size();
  const double n = static_cast<double>(xs.size());

  double bw;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw InvalidArgument("kde: bandwidth must be positive");
    bw = *bandwidth;
  } else {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    bw = 1.06 * sd * std::pow(n, -0.2);
    if (!(bw >= kBandwidthFloor)) {
      if (!(bw > 0.0)) curve.bandwidth_floored = true;
      bw = std::max(bw, kBandwidthFloor);
      if (!std::isfinite(bw)) bw = kBandwidthFloor;
    }
  }
  curve.bandwidth = bw;

  const auto [min_it, max_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = grid.lo.value_or(*min_it - 4.0 * bw);
  const double hi = grid.hi.value_or(*max_it + 4.0 * bw);
  if (!(hi > lo)) throw InvalidArgument("kde: empty grid interval");
  curve.grid.resize(grid.points);
  curve.values.assign(grid.points, 0.0);
  const double dx = (hi - lo) / static_cast<double>(grid.points - 1);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid.points; ++g) {
    const double at = g + 1 == grid.points ? hi : lo + static_cast<double>(g) * dx;
    curve.grid[g] = at;
    double sum = 0.0;
    for (double v : xs) {
      const double z = (at - v) / bw;
      sum += std::exp(-0.5 * z * z);
    }
    curve.values[g] = sum * norm;
  }
  return curve;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) total += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return total;
}

PathTable path_trace(const Trajectory& traj, std::span<const std::size_t> particle_ids, std::size_t stride) {
  const std::size_t n = traj.final_state.size();
  for (std::size_t id : particle_ids) {
    if (id >= n) throw InvalidArgument("path_trace: particle id " + std::to_string(id) + " out of range");
  }
  PathTable table;
  if (particle_ids.empty()) return table;
  if (!traj.trace) throw InvalidArgument("path_trace: trajectory was simulated without a trace");
  const Trace& tr = *traj.trace;
  if (tr.dim != 1) throw InvalidArgument("path_trace: only one-dimensional trajectories");
  if (stride == 0 || stride % tr.stride != 0) {
    throw InvalidArgument("path_trace: stride must be a positive multiple of the traced stride");
  }
  std::vector<std::size_t> columns;
  for (std::size_t id : particle_ids) {
    const auto it = std::find(tr.particle_ids.begin(), tr.particle_ids.end(), id);
    if (it == tr.particle_ids.end()) throw InvalidArgument("path_trace: particle " + std::to_string(id) + " was not traced");
    columns.push_back(static_cast<std::size_t>(it - tr.particle_ids.begin()));
  }
  table.particle_ids.assign(particle_ids.begin(), particle_ids.end());
  const std::size_t width = tr.particle_ids.size();
  for (std::size_t row = 0; row < tr.steps.size(); ++row) {
    if (tr.steps[row] % stride != 0) continue;
    table.times.push_back(tr.times[row]);
    for (std::size_t c : columns) table.values.push_back(tr.values[row * width + c]);
  }
  return table;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("least_squares: x and y differ in length");
  if (x.size() < 2) throw InvalidArgument("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("least_squares: x values are all equal");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.residual = std::sqrt(ss_res / n);
  return fit;
}

}  // namespace mvsde
