// Acceptance criteria. Usage: acceptance [id...]; no ids runs all ten.
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mvsde/config.hpp"
#include "mvsde/csv.hpp"
#include "mvsde/experiments.hpp"
#include "mvsde/stats.hpp"
#include "mvsde/verify.hpp"

using namespace mvsde;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ModelSpec scalar_model(std::string name, std::function<double(double)> b, std::function<double(double)> s, double x0) {
  ModelSpec m;
  m.name = std::move(name);
  m.rho = 1.0;
  m.drift = [b](double, std::span<const double> x, const MeasureView&, std::span<double> out) { out[0] = b(x[0]); };
  m.diffusion_col = [s](double, std::span<const double> x, const MeasureView&, std::size_t, std::span<double> out) {
    out[0] = s(x[0]);
  };
  m.initial_sampler = [x0](rng::RngStream&, std::span<double> out) { out[0] = x0; };
  return m;
}

ExperimentConfig desk_grid() {
  ExperimentConfig c;
  c.N = 100;
  c.T = 1.0;
  c.seed = kSeed;
  c.h_ref = 0x1p-14;
  c.h_list = {0x1p-7, 0x1p-8, 0x1p-9, 0x1p-10, 0x1p-11};
  return c;
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

Outcome slopes_in_band(const ConvergenceReport& r, double lo, double hi) {
  Outcome o{true, ""};
  for (const auto& s : r.schemes) {
    const double slope = s.fit ? s.fit->slope : NAN;
    o.pass = o.pass && in_range(slope, lo, hi);
    o.detail += fmt::format("{} slope={:.3f} ", s.scheme, slope);
  }
  o.detail += fmt::format("(band [{}, {}])", lo, hi);
  return o;
}

Outcome criterion1() {
  auto c = desk_grid();
  c.schemes = {"me", "se(1)"};
  return slopes_in_band(run_convergence(c, model_example_cubic()), 0.35, 0.65);
}

Outcome criterion2() {
  auto c = desk_grid();
  c.schemes = {"me", "te(1)"};
  return slopes_in_band(run_convergence(c, model_example_quintic()), 0.35, 0.65);
}

Outcome criterion3() {
  auto c = desk_grid();
  c.h_list = {c.h_ref};
  c.schemes = {"me", "te(1)", "se(1)", "dte(0.5)", "fte", "identity", "ssm"};
  Outcome o{true, ""};
  for (const auto* model : {"cubic", "quintic"}) {
    const auto r = run_convergence(c, ModelRegistry::global().make(model));
    for (const auto& s : r.schemes) o.pass = o.pass && s.rows.size() == 1 && s.rows[0].rmse == 0.0;
  }
  o.detail = fmt::format("{} schemes x 2 models at h = h_ref, all RMSE exactly 0: {}", c.schemes.size(), o.pass);
  return o;
}

Outcome criterion4() {
  auto c = desk_grid();
  c.schemes = {"identity"};
  const auto decay = scalar_model("decay", [](double x) { return -x; }, [](double) { return 0.0; }, 1.0);
  return slopes_in_band(run_convergence(c, decay), 0.9, 1.1);
}

Outcome criterion5() {
  ExperimentConfig c;
  c.N = 100;
  c.T = 1.0;
  c.h_list = {0x1p-3};
  c.orders = {2};
  c.schemes = {"identity", "me"};
  const auto model = model_example_quintic();
  std::size_t em_nonfinite = 0, me_ok = 0;
  double em_worst = 0.0, me_sup = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    const auto b = run_moments(c, model);
    const auto& em = b.series[0];
    const auto& me = b.series[1];
    if (em.first_nonfinite_t && *em.first_nonfinite_t <= 1.0) ++em_nonfinite;
    em_worst = std::max(em_worst, em.sup[0]);
    if (!me.first_nonfinite_t && me.sup[0] < 1e2) ++me_ok;
    me_sup = std::max(me_sup, me.sup[0]);
  }
  return {em_nonfinite >= 1 && me_ok == 10,
          fmt::format("EM non-finite m2 by T=1 in {}/10 seeds (largest m2 {:.3g}); ME finite with sup m2 < 100 in "
                      "{}/10 seeds (largest {:.3g})",
                      em_nonfinite, em_worst, me_ok, me_sup)};
}

Outcome criterion6() {
  ExperimentConfig c;
  c.N = 1000;
  c.T = 10.0;
  c.seed = kSeed;
  c.trace_ids = {};
  c.burn_in = 1.0;
  const auto model = model_example_doublewell(3.0, 9.0);
  auto run = [&](const char* scheme, double h) {
    c.schemes = {scheme};
    c.h_list = {h};
    return run_paths(c, model).entries.at(0).summary;
  };
  const auto te = run("te(1)", 0.01);
  const auto dte_coarse = run("dte(0.5)", 0.01);
  const auto dte_fine = run("dte(0.5)", 0.004);
  const bool te_ok = te.all_finite() && te.settled_max_abs <= 10.0;
  const bool dte_coarse_ok = !dte_coarse.all_finite() || dte_coarse.max_abs > 1e3;
  const bool dte_fine_ok = dte_fine.all_finite() && dte_fine.settled_max_abs <= 10.0;
  auto text = [](const StabilitySummary& s) {
    return fmt::format("max|X| t>=1 {:.4g}, all t {:.4g}, non-finite paths {}", s.settled_max_abs, s.max_abs,
                       s.nonfinite_paths);
  };
  return {te_ok && dte_coarse_ok && dte_fine_ok,
          fmt::format("TE h=0.01 [{}] {}; DTE h=0.01 [{}] {}; DTE h=0.004 [{}] {}", te_ok ? "ok" : "fail", text(te),
                      dte_coarse_ok ? "ok" : "fail", text(dte_coarse), dte_fine_ok ? "ok" : "fail", text(dte_fine))};
}

Outcome criterion7() {
  const auto model = model_example_doublewell(0.0, 1.0);
  const auto e = terminal_ensemble(model, parse_scheme("te(1)", model.rho), 10.0, 0.01, 1000, kSeed);
  std::size_t near = 0;
  std::size_t per_state[3] = {0, 0, 0};
  const double states[3] = {-2.0, 0.0, 2.0};
  for (double x : e.states()) {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(x - states[j]) <= 0.5) {
        ++near;
        ++per_state[j];
        break;
      }
    }
  }
  const double frac = static_cast<double>(near) / static_cast<double>(e.size());
  const auto roots = verify::doublewell_equilibria_oracle();
  const auto cmp = verify::compare_root_sets(roots, {-2.0, 0.0, 2.0});
  std::string found;
  for (double r : roots) found += fmt::format("{}{:.6g}", found.empty() ? "" : ", ", r);
  std::string missing;
  for (double r : cmp.missing) missing += fmt::format("{}{:g}", missing.empty() ? "" : ", ", r);
  return {frac >= 0.9 && !e.diverged(),
          fmt::format("{:.1f}% of 1000 particles within 0.5 of {{-2, 0, 2}} (need 90%; near -2/0/2: {}/{}/{}); "
                      "oracle roots {{{}}} vs stated {{-2, 0, 2}}: {}",
                      100 * frac, per_state[0], per_state[1], per_state[2], found,
                      cmp.identical() ? "identical" : "missing {" + missing + "}")};
}

Outcome criterion8() {
  ExperimentConfig c;
  c.seed = kSeed;
  c.T = 1.0;
  c.schemes = {"me"};
  c.h_list = {0x1p-7};
  c.n_list = {50, 100, 200, 400, 800};
  c.proxy_n = 10000;
  c.repetitions = 8;
  const auto r = run_nscaling(c, model_example_cubic());
  const double slope = r.fit ? r.fit->slope : NAN;
  std::string errs;
  for (const auto& row : r.rows) errs += fmt::format(" N={}:{:.4f}", row.n, row.mean_error);
  return {in_range(slope, -0.75, -0.25), fmt::format("slope={:.3f} (band [-0.75, -0.25]);{}", slope, errs)};
}

Outcome criterion9() {
  using verify::Assumption;
  const verify::TestedConstants unit{};
  bool ok = true;
  std::string detail;
  for (const auto& op : {TamingOperator::modified(), TamingOperator::tanh(1.0), TamingOperator::sin(1.0)}) {
    const auto h1 = verify::check_taming(op, Assumption::H1, unit);
    const auto h3 = verify::check_taming(op, Assumption::H3, unit);
    ok = ok && h1.passed() && h3.passed();
    detail += fmt::format("{} H1 {:.3g} H3 {:.3g}; ", op.label(), h1.max_violation, h3.max_violation);
  }
  const auto fte = verify::check_taming(TamingOperator::fully_tamed(1.0), Assumption::H1, unit);
  const auto id = verify::check_taming(TamingOperator::identity(), Assumption::H1, unit);
  ok = ok && !fte.passed() && !fte.witness.empty() && !id.passed() && !id.witness.empty();
  detail += fmt::format("fte H1 fails {} ({}); identity H1 fails {}; ", !fte.passed(), fte.witness_text(), !id.passed());
  const double g1 = verify::compute_G(1, 1, 3), g2 = verify::compute_G(1, 0.5, 2), g3 = verify::compute_G(2, 1, 1);
  ok = ok && g1 == 8 && g2 == 10 && g3 == 12;
  detail += fmt::format("G = {:g}, {:g}, {:g}", g1, g2, g3);
  return {ok, detail};
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == (f(lo) < 0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Outcome criterion10() {
  std::vector<std::string> failures;
  auto require = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };

  // Coarsening telescopes bitwise, through any chain of factors.
  const auto grid = PathGrid::generate(kSeed, 1 << 12, 1.0, 16, 2);
  const auto direct = grid.coarsen(64);
  const auto chained = grid.coarsen(4).coarsen(2).coarsen(8);
  bool telescopes = true;
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t k = 0; k < direct.steps(); ++k) {
      for (std::size_t r = 0; r < 2; ++r) {
        double backwards = 0.0;
        for (std::size_t j = 64; j-- > 0;) backwards += grid.increment(i, k * 64 + j, r);
        const double a = direct.increment(i, k, r);
        telescopes = telescopes && a == chained.increment(i, k, r) && a == backwards;
      }
    }
  }
  require(telescopes, "coarsening");

  // Byte-identical outputs at 1, 2 and 8 workers.
  const Executor one(1), two(2), eight(8);
  auto outputs = [&](const Executor& ex) {
    std::string all;
    auto c = desk_grid();
    c.h_ref = 0x1p-10;
    c.h_list = {0x1p-6, 0x1p-7, 0x1p-8};
    c.schemes = {"me", "ssm", "te(1)"};
    const auto conv = run_convergence(c, model_example_cubic(), {&ex, true});
    for (const auto& s : conv.schemes) all += io::convergence_csv(s);
    all += io::convergence_summary_csv(conv);
    c.schemes = {"te(1)"};
    c.T = 2.0;
    c.h_ref = 0.001;
    c.h_list = {0.01};
    c.N = 500;
    const auto model = model_example_doublewell(0.0, 1.0);
    for (const auto& e : run_density(c, model, {&ex, true}).entries) all += io::density_csv(*e.curve);
    const auto paths = run_paths(c, model, {&ex, true});
    for (const auto& e : paths.entries) all += io::paths_csv(e.table);
    all += io::stability_csv(paths);
    c.schemes = {"me"};
    c.h_list = {0x1p-5};
    const auto big = simulate(model, parse_scheme("ssm", model.rho), PathGrid::generate(kSeed, 64, 1.0, 20000, 1),
                              {{}, {}, &ex, true});
    for (double v : big.final_state.states()) all += io::format_real(v);
    return all;
  };
  const auto ref = outputs(one);
  require(ref == outputs(two) && ref == outputs(eight), "worker count");

  // Split-step Newton against bisection: Y + 0.1 Y^3 = 1.
  const auto cube = scalar_model("cube", [](double y) { return -y * y * y; }, [](double) { return 0.0; }, 1.0);
  const double zero[1] = {0.0};
  const auto y = split_step(Ensemble(std::vector<double>{1.0}, 1), cube, SchemeConfig::split_step(), 0.1, zero);
  const double oracle = bisect([](double v) { return v + 0.1 * v * v * v - 1.0; }, 0.0, 1.0);
  const double newton_gap = std::abs(y.states()[0] - oracle);
  require(newton_gap <= 1e-10, "newton");

  // W2 to the Dirac mass at 0 equals the second moment; exact 1-d W2 against
  // the best permutation.
  bool w2 = true;
  rng::RngStream s(kSeed, rng::StreamTag::Sampling, 77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(6), b(6);
    for (double& v : a) v = s.normal();
    for (double& v : b) v = 3 * s.normal();
    const Ensemble ea(a, 1), eb(b, 1);
    const std::vector<double> origin{0.0};
    const double to_origin = w2_1d(a, origin);
    w2 = w2 && std::abs(to_origin * to_origin - w2sq_dirac0(ea)) <= 1e-12 * (1 + w2sq_dirac0(ea));
    w2 = w2 && w2sq_dirac0(ea) == ea.measure().w2sq_to_dirac0();
    std::sort(b.begin(), b.end());
    double best = INFINITY;
    do {
      double sum = 0.0;
      for (std::size_t i = 0; i < 6; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
      best = std::min(best, sum / 6);
    } while (std::next_permutation(b.begin(), b.end()));
    w2 = w2 && std::abs(w2_1d_exact(ea, eb) - std::sqrt(best)) <= 1e-12 * (1 + std::sqrt(best));
  }
  require(w2, "w2");

  std::string failed;
  for (const auto& f : failures) failed += " " + f;
  return {failures.empty(), fmt::format("coarsening bitwise {}; 1/2/8 workers byte-identical {}; |newton - bisection| "
                                        "= {:.3g}; W2 checks {}{}",
                                        telescopes, ref == outputs(two), newton_gap, w2,
                                        failed.empty() ? "" : "; failed:" + failed)};
}

const std::map<int, std::pair<const char*, Outcome (*)()>> kCriteria{
    {1, {"strong order, cubic model", criterion1}},
    {2, {"strong order, quintic model", criterion2}},
    {3, {"self-comparison is zero", criterion3}},
    {4, {"deterministic Euler order", criterion4}},
    {5, {"moment bound vs plain Euler", criterion5}},
    {6, {"double-well stability matrix", criterion6}},
    {7, {"double-well clustering", criterion7}},
    {8, {"propagation of chaos slope", criterion8}},
    {9, {"assumption suite", criterion9}},
    {10, {"infrastructure properties", criterion10}},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) {
    for (const auto& [id, c] : kCriteria) ids.push_back(id);
  }
  int failed = 0;
  for (int id : ids) {
    const auto it = kCriteria.find(id);
    if (it == kCriteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, it->second.first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
