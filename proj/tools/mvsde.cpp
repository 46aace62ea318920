// mvsde: experiment driver for the particle solvers.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mvsde/config.hpp"
#include "mvsde/csv.hpp"
#include "mvsde/error.hpp"
#include "mvsde/experiments.hpp"
#include "mvsde/model.hpp"
#include "mvsde/parallel.hpp"
#include "mvsde/simd/kernels.hpp"
#include "mvsde/svg.hpp"

namespace fs = std::filesystem;
using namespace mvsde;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::optional<std::string> out_dir;
  bool paper_scale = false;
  std::optional<std::string> formats;
  bool strict = false;
};

struct Output {
  fs::path dir;
  bool csv = true;
  bool svg = false;
  std::uint64_t fingerprint = 0;

  void write(const std::string& name, const std::string& content) const {
    io::write_file(dir / name, content);
    std::cout << "wrote " << (dir / name).string() << '\n';
  }
};

std::string scheme_tag(const std::string& name, const ModelSpec& model) {
  return parse_scheme(name, model.rho).label();
}

std::string h_suffix(const ExperimentConfig& cfg, double h) {
  return cfg.h_list.size() > 1 ? "_h" + io::real_tag(h) : std::string();
}

std::string rep_suffix(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.repetitions > 1 ? fmt::format("_s{}", seed) : std::string();
}

bool converge(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx, const Output& out) {
  const auto report = run_convergence(cfg, model, ctx);
  bool diverged = false;
  for (const auto& sc : report.schemes) {
    if (out.csv) out.write(fmt::format("converge_{}_{}.csv", model.name, scheme_tag(sc.scheme, model)), io::convergence_csv(sc));
    for (const auto& r : sc.rows) diverged |= r.diverged;
    if (sc.fit) {
      fmt::print("{:<12} slope={:.4f} intercept={:.4f} r2={:.4f}\n", sc.scheme, sc.fit->slope, sc.fit->intercept, sc.fit->r2);
    } else {
      fmt::print("{:<12} slope unavailable (fewer than three usable rows)\n", sc.scheme);
    }
  }
  if (out.csv) out.write("converge_summary.csv", io::convergence_summary_csv(report));
  if (out.svg) {
    try {
      out.write(fmt::format("converge_{}.svg", model.name), svg::render(svg::convergence_plot(report, out.fingerprint)));
    } catch (const InvalidArgument& e) {
      std::cerr << "svg skipped: " << e.what() << '\n';
    }
  }
  return diverged;
}

bool density(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx, const Output& out) {
  const auto bundle = run_density(cfg, model, ctx);
  bool diverged = false;
  std::map<double, std::vector<const DensityEntry*>> by_time;
  for (const auto& e : bundle.entries) {
    diverged |= e.diverged;
    by_time[e.t].push_back(&e);
    const std::string tag = scheme_tag(e.scheme, model) + (e.reference ? "_ref" : h_suffix(cfg, e.h));
    if (!e.curve) {
      fmt::print("{} t={:g}: no finite particles\n", tag, e.t);
      continue;
    }
    if (out.csv) out.write(fmt::format("density_{}_T{}.csv", tag, io::real_tag(e.t)), io::density_csv(*e.curve));
  }
  if (out.svg) {
    for (const auto& [t, entries] : by_time) {
      const auto plot = svg::density_plot(entries, fmt::format("Density at t = {:g}", t), out.fingerprint);
      if (plot.series.empty()) continue;
      out.write(fmt::format("density_T{}.svg", io::real_tag(t)), svg::render(plot));
    }
  }
  return diverged;
}

bool paths(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx, const Output& out) {
  const auto bundle = run_paths(cfg, model, ctx);
  bool diverged = false;
  for (const auto& e : bundle.entries) {
    diverged |= !e.summary.all_finite();
    const std::string tag = scheme_tag(e.scheme, model) + h_suffix(cfg, e.h) + rep_suffix(cfg, e.seed);
    if (out.csv && !e.table.particle_ids.empty()) out.write(fmt::format("paths_{}.csv", tag), io::paths_csv(e.table));
    if (out.svg && !e.table.particle_ids.empty()) {
      try {
        out.write(fmt::format("paths_{}.svg", tag), svg::render(svg::paths_plot(e, out.fingerprint)));
      } catch (const InvalidArgument& err) {
        std::cerr << "svg skipped: " << err.what() << '\n';
      }
    }
    fmt::print("{:<12} h={:<8g} max|X|={:.4g} settled(t>={:g})={:.4g} {}\n", e.scheme, e.h, e.summary.max_abs,
               e.summary.burn_in, e.summary.settled_max_abs,
               e.summary.first_nonfinite_t ? fmt::format("non-finite at t={:g}", *e.summary.first_nonfinite_t)
                                           : std::string("finite"));
  }
  if (out.csv) out.write("paths_summary.csv", io::stability_csv(bundle));
  return diverged;
}

bool moments(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx, const Output& out) {
  const auto bundle = run_moments(cfg, model, ctx);
  bool diverged = false;
  for (const auto& s : bundle.series) {
    diverged |= s.first_nonfinite_t.has_value();
    const std::string tag = scheme_tag(s.scheme, model) + h_suffix(cfg, s.h) + rep_suffix(cfg, s.seed);
    if (out.csv) out.write(fmt::format("moments_{}.csv", tag), io::moments_csv(s));
    if (out.svg) {
      try {
        out.write(fmt::format("moments_{}.svg", tag), svg::render(svg::moments_plot(s, out.fingerprint)));
      } catch (const InvalidArgument& err) {
        std::cerr << "svg skipped: " << err.what() << '\n';
      }
    }
    std::string sups;
    for (std::size_t o = 0; o < s.orders.size(); ++o) sups += fmt::format(" sup m{}={:.4g}", s.orders[o], s.sup[o]);
    fmt::print("{:<12} h={:<8g} seed={}{}{}\n", s.scheme, s.h, s.seed, sups, s.exceeded_ceiling ? " (above ceiling)" : "");
  }
  return diverged;
}

bool nscaling(const ExperimentConfig& cfg, const ModelSpec& model, const RunContext& ctx, const Output& out) {
  const auto report = run_nscaling(cfg, model, ctx);
  bool diverged = false;
  for (const auto& r : report.rows) {
    for (double e : r.errors) diverged |= !std::isfinite(e);
    fmt::print("N={:<6} mean W2={:.5g} se={:.3g}\n", r.n, r.mean_error, r.std_error);
  }
  if (report.fit) fmt::print("slope={:.4f} (log2 W2 against log2 N)\n", report.fit->slope);
  if (out.csv) out.write("nscaling.csv", io::nscaling_csv(report));
  if (out.svg) {
    svg::Plot p;
    p.title = fmt::format("W2 to proxy (N = {})", report.proxy_n);
    p.x_label = "log2 N";
    p.y_label = "log2 mean W2";
    p.fingerprint = out.fingerprint;
    svg::Series s{report.scheme, {}, {}, true, true};
    for (const auto& r : report.rows) {
      s.x.push_back(std::log2(static_cast<double>(r.n)));
      s.y.push_back(std::log2(r.mean_error));
    }
    p.series.push_back(s);
    if (report.fit) p.notes.push_back(fmt::format("slope={:.3f}", report.fit->slope));
    try {
      out.write("nscaling.svg", svg::render(p));
    } catch (const InvalidArgument& err) {
      std::cerr << "svg skipped: " << err.what() << '\n';
    }
  }
  return diverged;
}

bool check(const ExperimentConfig& cfg, const ModelSpec& model, const Output& out) {
  const auto report = run_check(cfg, model);
  for (const auto& r : report.rows) {
    fmt::print("{:<14} {:<10} {} max_violation={:.4g}\n", r.subject, verify::assumption_name(r.assumption),
               r.pass ? "pass" : "FAIL", r.max_violation);
  }
  for (const auto& t : report.theory) {
    fmt::print("G(rho={:g}, r1={:g}, r2={:g}) = {:g}; p_max = {:g} at p_bar = {:g}\n", t.rho, t.r1, t.r2, t.G,
               t.p_max_lemma, t.p_bar);
  }
  out.write("check_report.csv", io::check_csv(report));
  return false;
}

int run(const std::string& command, const Options& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  if (opt.formats) cfg.formats = split_list(*opt.formats);
  if (opt.paper_scale) apply_paper_scale(cfg);
  const Experiment kind = command == "converge"  ? Experiment::Converge
                          : command == "density" ? Experiment::Density
                          : command == "paths"   ? Experiment::Paths
                          : command == "moments" ? Experiment::Moments
                          : command == "nscaling" ? Experiment::NScaling
                                                  : Experiment::Check;
  validate(cfg, kind);
  const ModelSpec model = ModelRegistry::global().make(cfg.model, cfg.model_params);

  Output out;
  out.dir = cfg.out_dir;
  out.csv = std::find(cfg.formats.begin(), cfg.formats.end(), "csv") != cfg.formats.end();
  out.svg = std::find(cfg.formats.begin(), cfg.formats.end(), "svg") != cfg.formats.end();
  out.fingerprint = fnv1a64(canonical_text(cfg));

  const Executor executor(opt.threads);
  const RunContext ctx{&executor, true};
  bool diverged = false;
  switch (kind) {
    case Experiment::Converge: diverged = converge(cfg, model, ctx, out); break;
    case Experiment::Density: diverged = density(cfg, model, ctx, out); break;
    case Experiment::Paths: diverged = paths(cfg, model, ctx, out); break;
    case Experiment::Moments: diverged = moments(cfg, model, ctx, out); break;
    case Experiment::NScaling: diverged = nscaling(cfg, model, ctx, out); break;
    case Experiment::Check: diverged = check(cfg, model, out); break;
  }
  if (diverged) {
    std::cerr << "note: at least one run produced non-finite states\n";
    if (opt.strict) return kExitDivergence;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle solvers for McKean-Vlasov SDEs with tamed Euler schemes"};
  app.require_subcommand(1);
  Options opt;
  std::string command;

  const std::vector<std::pair<std::string, std::string>> experiments{
      {"converge", "strong convergence rates against a fine reference"},
      {"density", "kernel density estimates at the record times"},
      {"paths", "particle paths and a stability summary"},
      {"moments", "empirical moments over time"},
      {"nscaling", "W2 error against the particle count"},
      {"check", "sampled checks of the structural assumptions"},
  };
  for (const auto& [name, help] : experiments) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "base seed (overrides the config)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", opt.out_dir, "output directory (overrides the config)");
    sub->add_flag("--paper-scale", opt.paper_scale, "published convergence protocol (h_ref = 2^-17)");
    sub->add_option("--format", opt.formats, "comma-separated output formats: csv, svg");
    sub->add_flag("--strict", opt.strict, "exit with status 3 when any run diverges");
    sub->callback([&command, n = name] { command = n; });
  }
  auto* list = app.add_subcommand("list-models", "print the builtin models");
  list->callback([&command] { command = "list-models"; });
  auto* isa = app.add_option("--isa", "kernel instruction set: scalar or avx2 (default: best available)")
                  ->check(CLI::IsMember({"scalar", "avx2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (isa->count() > 0) simd::set_active_isa(isa->as<std::string>() == "avx2" ? simd::Isa::Avx2 : simd::Isa::Scalar);
    if (command == "list-models") {
      for (const auto& [name, entry] : ModelRegistry::global().entries()) fmt::print("{:<12} {}\n", name, entry.summary);
      return 0;
    }
    return run(command, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
