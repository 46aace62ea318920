#include "mvsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "mvsde/error.hpp"
#include "mvsde/measure.hpp"
#include "mvsde/rng.hpp"
#include "mvsde/simd/kernels.hpp"
#include "mvsde/stats.hpp"

namespace mvsde::verify {
namespace {

using Witness = std::vector<std::pair<std::string, double>>;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

constexpr double kRoundingSlack = 16 * std::numeric_limits<double>::epsilon();

class MaxTracker {
 public:
  explicit MaxTracker(AssumptionReport& report) : report_(report) { report_.max_violation = -INFINITY; }

  /// `scale` is the magnitude of the operands lhs was computed from; lhs may
  /// exceed rhs by a few ulps of it without counting as a violation.
  void consider(double lhs, double rhs, const std::function<Witness()>& witness, double scale = 0.0) {
    const double v = (lhs - rhs - kRoundingSlack * scale) / (1.0 + rhs);
    if (v > report_.max_violation || (std::isnan(v) && !std::isnan(report_.max_violation))) {
      report_.max_violation = v;
      report_.witness = witness();
      report_.witness.emplace_back("lhs", lhs);
      report_.witness.emplace_back("rhs", rhs);
    }
  }

 private:
  AssumptionReport& report_;
};

std::vector<double> step_sizes(const SampleSpec& spec) {
  std::vector<double> hs;
  for (int k = spec.h_exp_min; k <= spec.h_exp_max; ++k) hs.push_back(std::ldexp(1.0, -k));
  return hs;
}

std::vector<double> input_magnitudes(const SampleSpec& spec, double h) {
  std::vector<double> out{0.0};
  const int lo = static_cast<int>(std::floor(std::log10(spec.min_magnitude) * spec.per_decade + 0.5));
  const int hi = static_cast<int>(std::floor(std::log10(spec.max_magnitude) * spec.per_decade + 0.5));
  for (int e = lo; e <= hi; ++e) out.push_back(std::pow(10.0, static_cast<double>(e) / spec.per_decade));
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    for (double c : {1.0, 1e6}) out.push_back(c * std::pow(h, -a));
  }
  return out;
}

std::vector<double> state_magnitudes(const SampleSpec& spec) {
  std::vector<double> out{0.0};
  const int lo = static_cast<int>(std::floor(std::log10(spec.min_state) * 4 + 0.5));
  const int hi = static_cast<int>(std::floor(std::log10(spec.max_state) * 4 + 0.5));
  for (int e = lo; e <= hi; ++e) out.push_back(std::pow(10.0, e / 4.0));
  return out;
}

std::vector<std::vector<double>> unit_directions(const SampleSpec& spec, std::size_t dim) {
  std::vector<std::vector<double>> dirs;
  if (dim == 1) return {{1.0}, {-1.0}};
  rng::RngStream stream(spec.seed, rng::StreamTag::Sampling, 0xD1u);
  for (std::size_t k = 0; k < spec.directions; ++k) {
    std::vector<double> u(dim);
    for (double& c : u) c = stream.normal();
    const double n = norm(u);
    for (double& c : u) c /= n;
    dirs.push_back(u);
    for (double& c : u) c = -c;
    dirs.push_back(u);
  }
  return dirs;
}

std::vector<double> scaled(const std::vector<double>& dir, double m) {
  std::vector<double> out(dir);
  for (double& c : out) c *= m;
  return out;
}

double log_uniform(rng::RngStream& s, double lo, double hi) {
  return std::pow(10.0, std::log10(lo) + s.uniform() * (std::log10(hi) - std::log10(lo)));
}

double random_sign(rng::RngStream& s) { return s.uniform() < 0.5 ? -1.0 : 1.0; }

MeasureView synthetic_measure(rng::RngStream& s, std::size_t size, std::size_t dim) {
  std::vector<double> atoms(size * dim);
  std::vector<double> center(dim);
  for (double& c : center) c = random_sign(s) * log_uniform(s, 1e-2, 10.0);
  const double spread = log_uniform(s, 1e-2, 3.0);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < dim; ++j) atoms[i * dim + j] = center[j] + spread * s.normal();
  }
  return MeasureView::from_states(atoms, dim);
}

std::vector<double> random_state(rng::RngStream& s, const SampleSpec& spec, std::size_t dim) {
  std::vector<double> x(dim);
  double n = 0.0;
  for (double& c : x) {
    c = s.normal();
    n += c * c;
  }
  n = std::sqrt(n);
  const double m = log_uniform(s, spec.min_state, spec.max_state);
  for (double& c : x) c *= m / n;
  return x;
}

double w2_between(const MeasureView& a, const MeasureView& b) {
  if (a.dim() == 1) return w2_1d(a.particles(), b.particles());
  return std::sqrt(simd::kernels().sum_sq_diff(a.particles(), b.particles()) / static_cast<double>(a.size()));
}

double w2_dirac0(const MeasureView& mu) { return std::sqrt(mu.w2sq_to_dirac0()); }

std::vector<double> diffusion_matrix(const ModelSpec& model, std::span<const double> x, const MeasureView& mu) {
  std::vector<double> out;
  for (std::size_t r = 0; r < model.noise_dim; ++r) {
    const auto col = eval_diffusion_col(model, 0.0, x, mu, r);
    out.insert(out.end(), col.begin(), col.end());
  }
  return out;
}

void fill_constants(AssumptionReport& report, const TestedConstants& c) { report.constants = c; }

AssumptionReport check_taming_map(const TamingOperator& op, Assumption assumption, const TestedConstants& c,
                                  const SampleSpec& spec) {
  AssumptionReport report;
  report.assumption = assumption;
  report.subject = op.label();
  fill_constants(report, c);
  MaxTracker tracker(report);
  const auto dirs = unit_directions(spec, spec.dim);
  std::vector<std::vector<double>> states;
  if (op.kind() == TamingKind::FullyTamed) {
    for (double m : state_magnitudes(spec)) {
      for (const auto& d : dirs) states.push_back(scaled(d, m));
    }
  } else {
    states.push_back(std::vector<double>(spec.dim, 0.0));
  }
  const TamingOperator op2 = op.diffusion_counterpart();
  for (double h : step_sizes(spec)) {
    for (double m : input_magnitudes(spec, h)) {
      for (const auto& d : dirs) {
        const auto v = scaled(d, m);
        for (const auto& x : states) {
          const auto t1 = apply_t1(op, v, x, h);
          const auto t2 = apply_t2(op2, v, x, h);
          const double nv = norm(v);
          auto witness = [&](double part) {
            return Witness{{"h", h}, {"v", v[0]}, {"|v|", nv}, {"x", x[0]}, {"map", part}};
          };
          ++report.samples;
          switch (assumption) {
            case Assumption::H1:
              tracker.consider(norm(t1), std::min(c.L * std::pow(h, -2.0), nv), [&] { return witness(1); }, nv);
              tracker.consider(norm(t2), std::min(c.L * std::pow(h, -1.5), nv), [&] { return witness(2); }, nv);
              break;
            case Assumption::H2:
              tracker.consider(norm_diff(t1, v), c.L * std::pow(h, c.r1) * std::pow(nv, c.r2),
                               [&] { return witness(1); }, nv);
              break;
            case Assumption::H3:
              tracker.consider(norm_diff(t1, v), c.L * std::pow(h, c.r1) * std::pow(nv, c.r2),
                               [&] { return witness(1); }, nv);
              tracker.consider(norm_diff(t2, v), c.L * std::pow(h, c.r3) * std::pow(nv, c.r2),
                               [&] { return witness(2); }, nv);
              break;
            default:
              throw InvalidArgument("check_taming: assumption does not apply to taming maps");
          }
        }
      }
    }
  }
  return report;
}

AssumptionReport check_ex35(const TamingOperator& op, const TestedConstants& c, const SampleSpec& spec,
                            const ModelSpec& model) {
  AssumptionReport report;
  report.assumption = Assumption::EX35_BOUND;
  report.subject = op.label() + "/" + model.name;
  fill_constants(report, c);
  MaxTracker tracker(report);
  const auto dirs = unit_directions(spec, model.dim);
  std::vector<MeasureView> measures{MeasureView::dirac(std::vector<double>(model.dim, 0.0))};
  for (std::size_t k = 0; k < 8; ++k) {
    rng::RngStream s(spec.seed, rng::StreamTag::Sampling, 0xE0u + static_cast<std::uint32_t>(k));
    measures.push_back(synthetic_measure(s, 1 + k % spec.max_measure_size, model.dim));
  }
  const TamingOperator op2 = op.diffusion_counterpart();
  for (double h : step_sizes(spec)) {
    for (double m : state_magnitudes(spec)) {
      for (const auto& d : dirs) {
        const auto x = scaled(d, m);
        const double nx = norm(x);
        for (std::size_t mi = 0; mi < measures.size(); ++mi) {
          const auto& mu = measures[mi];
          const double w = w2_dirac0(mu);
          auto witness = [&](double part) {
            return Witness{{"h", h}, {"x", x[0]}, {"|x|", nx}, {"w2", w}, {"measure", double(mi)}, {"map", part}};
          };
          ++report.samples;
          const auto b = eval_drift(model, 0.0, x, mu);
          const auto t1 = apply_t1(op, b, x, h);
          tracker.consider(norm(t1), std::min(c.L * std::pow(h, -0.25) * (1.0 + nx) + w, norm(b)),
                           [&] { return witness(1); }, norm(b));
          for (std::size_t r = 0; r < model.noise_dim; ++r) {
            const auto sr = eval_diffusion_col(model, 0.0, x, mu, r);
            const auto t2 = apply_t2(op2, sr, x, h);
            tracker.consider(norm(t2), std::min(c.L * std::pow(h, -0.125) * (1.0 + nx) + w, norm(sr)),
                             [&] { return witness(2); }, norm(sr));
          }
        }
      }
    }
  }
  return report;
}

template <typename Run>
LSweep sweep_L(TestedConstants constants, Run&& run) {
  LSweep out;
  for (int k = 0; k <= 10; ++k) {
    constants.L = std::ldexp(1.0, k);
    out.report = run(constants);
    if (out.report.passed()) {
      out.minimal_L = constants.L;
      return out;
    }
  }
  return out;
}

}  // namespace

std::string_view assumption_name(Assumption a) noexcept {
  switch (a) {
    case Assumption::H1: return "H1";
    case Assumption::H2: return "H2";
    case Assumption::H3: return "H3";
    case Assumption::A2: return "A2";
    case Assumption::A3: return "A3";
    case Assumption::A5: return "A5";
    case Assumption::A6: return "A6";
    case Assumption::EX35_BOUND: return "EX35_BOUND";
  }
  return "?";
}

std::string AssumptionReport::witness_text() const {
  std::string out;
  for (const auto& [key, value] : witness) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}={:.17g}", key, value);
  }
  return out;
}

AssumptionReport check_taming(const TamingOperator& op, Assumption assumption, const TestedConstants& constants,
                              const SampleSpec& spec, const ModelSpec* model) {
  if (assumption == Assumption::EX35_BOUND) {
    if (!model) throw InvalidArgument("check_taming: EX35_BOUND needs a model");
    return check_ex35(op, constants, spec, *model);
  }
  return check_taming_map(op, assumption, constants, spec);
}

AssumptionReport check_model(const ModelSpec& model, Assumption assumption, const TestedConstants& c,
                             const SampleSpec& spec) {
  if (assumption != Assumption::A2 && assumption != Assumption::A3 && assumption != Assumption::A5 &&
      assumption != Assumption::A6) {
    throw InvalidArgument("check_model: assumption does not apply to models");
  }
  if (spec.max_measure_size == 0) throw InvalidArgument("check_model: max_measure_size must be positive");
  AssumptionReport report;
  report.assumption = assumption;
  report.subject = model.name;
  fill_constants(report, c);
  if (model.dim > 1) report.caveat = "W2 replaced by the index-coupled upper bound (d > 1)";
  MaxTracker tracker(report);
  const std::size_t d = model.dim;

  for (std::size_t s = 0; s < spec.pairs; ++s) {
    rng::RngStream stream(spec.seed, rng::StreamTag::Sampling, static_cast<std::uint32_t>(s));
    std::vector<double> x, y;
    MeasureView mu, nu;
    if (s == 0) {
      x.assign(d, 0.5);
      y = x;
      mu = synthetic_measure(stream, 3, d);
      nu = mu;
    } else {
      x = random_state(stream, spec, d);
      if (stream.uniform() < 0.5) {
        y = random_state(stream, spec, d);
      } else {
        const double rel = log_uniform(stream, 1e-6, 1.0);
        y = x;
        for (double& c2 : y) c2 += random_sign(stream) * rel * norm(x) / std::sqrt(static_cast<double>(d));
      }
      const std::size_t na = 1 + static_cast<std::size_t>(stream.uniform() * spec.max_measure_size);
      mu = synthetic_measure(stream, std::min(na, spec.max_measure_size), d);
      if (stream.uniform() < 0.5) {
        nu = mu;
      } else {
        std::size_t nb = 1 + static_cast<std::size_t>(stream.uniform() * spec.max_measure_size);
        if (d > 1) nb = mu.size();
        nu = synthetic_measure(stream, std::min(nb, spec.max_measure_size), d);
      }
    }
    ++report.samples;
    const auto bx = eval_drift(model, 0.0, x, mu);
    const auto sx = diffusion_matrix(model, x, mu);
    auto witness = [&] {
      return Witness{{"x", x[0]}, {"y", y[0]}, {"|x|", norm(x)}, {"mu_size", double(mu.size())},
                     {"nu_size", double(nu.size())}, {"mu_mean", mu.mean()[0]}, {"nu_mean", nu.mean()[0]}};
    };
    if (assumption == Assumption::A2) {
      double inner = 0.0;
      for (std::size_t j = 0; j < d; ++j) inner += x[j] * bx[j];
      const double sig = norm(sx);
      const double lhs = 2.0 * inner + (2.0 * c.p0 - 1.0) * sig * sig;
      const double rhs = c.L * (1.0 + norm(x) * norm(x) + mu.w2sq_to_dirac0());
      tracker.consider(lhs, rhs, witness);
      continue;
    }
    const auto by = eval_drift(model, 0.0, y, nu);
    const double w = w2_between(mu, nu);
    const double dxy = norm_diff(x, y);
    if (assumption == Assumption::A6) {
      const double lhs = norm_diff(bx, by);
      const double grow = 1.0 + std::pow(norm(x), 2.0 * c.rho) + std::pow(norm(y), 2.0 * c.rho);
      tracker.consider(lhs, c.L * grow * dxy + c.L * w, witness);
      continue;
    }
    const auto sy = diffusion_matrix(model, y, nu);
    double inner = 0.0;
    for (std::size_t j = 0; j < d; ++j) inner += (x[j] - y[j]) * (bx[j] - by[j]);
    const double sdiff = norm_diff(sx, sy);
    const double weight = assumption == Assumption::A5 ? 2.0 * c.p1 - 1.0 : 1.0;
    const double lhs = 2.0 * inner + weight * sdiff * sdiff;
    tracker.consider(lhs, c.L * (dxy * dxy + w * w), witness);
  }
  return report;
}

LSweep minimal_passing_L(const ModelSpec& model, Assumption assumption, TestedConstants constants,
                         const SampleSpec& spec) {
  return sweep_L(constants, [&](const TestedConstants& c) { return check_model(model, assumption, c, spec); });
}

LSweep minimal_passing_L(const TamingOperator& op, Assumption assumption, TestedConstants constants,
                         const SampleSpec& spec, const ModelSpec* model) {
  return sweep_L(constants,
                 [&](const TestedConstants& c) { return check_taming(op, assumption, c, spec, model); });
}

GrowthConstants growth_constants(const ModelSpec& model, const SampleSpec& spec) {
  GrowthConstants out;
  for (std::size_t s = 0; s < spec.pairs; ++s) {
    rng::RngStream stream(spec.seed, rng::StreamTag::Sampling, static_cast<std::uint32_t>(s));
    const auto x = random_state(stream, spec, model.dim);
    const std::size_t na = 1 + static_cast<std::size_t>(stream.uniform() * spec.max_measure_size);
    const auto mu = synthetic_measure(stream, std::min(na, spec.max_measure_size), model.dim);
    const double nx = norm(x);
    const double w = w2_dirac0(mu);
    const auto b = eval_drift(model, 0.0, x, mu);
    const auto sig = diffusion_matrix(model, x, mu);
    out.drift_K = std::max(out.drift_K, norm(b) / (1.0 + std::pow(nx, 2.0 * model.rho + 1.0) + w));
    out.diffusion_K = std::max(out.diffusion_K, norm(sig) / (1.0 + std::pow(nx, model.rho + 1.0) + w));
    ++out.samples;
  }
  return out;
}

double compute_G(double rho, double r1, double r2) {
  if (!(r1 > 0.0)) throw InvalidArgument("compute_G: r1 must be positive");
  if (!(r2 > 0.0)) throw InvalidArgument("compute_G: r2 must be positive");
  if (!(rho >= 0.0)) throw InvalidArgument("compute_G: rho must be nonnegative");
  return std::max(6.0 * rho, ((2.0 * rho + 1.0) * r2 - 1.0) / r1);
}

TheoryConstants theory_constants(double rho, double r1, double r2, double p_bar) {
  TheoryConstants tc;
  tc.rho = rho;
  tc.r1 = r1;
  tc.r2 = r2;
  tc.G = compute_G(rho, r1, r2);
  tc.p_bar = p_bar;
  tc.p_max_lemma = (2.0 * p_bar - tc.G) / (2.0 + 4.0 * tc.G);
  return tc;
}

std::vector<double> self_consistent_roots(const ModelSpec& model, double lo, double hi, double resolution) {
  if (model.dim != 1) throw InvalidArgument("self_consistent_roots: only one-dimensional models");
  if (!(hi > lo) || !(resolution > 0.0)) throw InvalidArgument("self_consistent_roots: bad scan interval");
  const auto g = [&](double c) {
    const double pt[1] = {c};
    return eval_drift(model, 0.0, pt, MeasureView::dirac(pt))[0];
  };
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / resolution));
  std::vector<double> roots;
  double prev_c = lo;
  double prev_g = g(lo);
  if (prev_g == 0.0) roots.push_back(lo);
  for (std::size_t j = 1; j <= n; ++j) {
    const double c = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n);
    const double gc = g(c);
    if (gc == 0.0) {
      roots.push_back(c);
    } else if (prev_g != 0.0 && std::signbit(gc) != std::signbit(prev_g)) {
      double a = prev_c, b = c, ga = prev_g;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0) {
          a = b = mid;
          break;
        }
        if (std::signbit(gm) == std::signbit(ga)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_c = c;
    prev_g = gc;
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              roots.end());
  return roots;
}

std::vector<double> doublewell_equilibria_oracle() {
  return self_consistent_roots(model_example_doublewell(0.0, 1.0));
}

RootComparison compare_root_sets(const std::vector<double>& found, const std::vector<double>& expected, double tol) {
  RootComparison cmp;
  for (double e : expected) {
    const bool hit = std::any_of(found.begin(), found.end(), [&](double f) { return std::abs(f - e) <= tol; });
    (hit ? cmp.matched : cmp.missing).push_back(e);
  }
  for (double f : found) {
    const bool hit = std::any_of(expected.begin(), expected.end(), [&](double e) { return std::abs(f - e) <= tol; });
    if (!hit) cmp.extra.push_back(f);
  }
  return cmp;
}

}  // namespace mvsde::verify
