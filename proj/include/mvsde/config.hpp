#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/model.hpp"

namespace mvsde {

enum class Experiment { Converge, Density, Paths, Moments, NScaling, Check };

std::string_view experiment_name(Experiment e) noexcept;

/// Settings for one harness run. Grammar (UTF-8, line oriented):
///
///   # comment            ; comment
///   [section]
///   key = value
///
/// Sections: model, schemes, grid, experiment, output. Arrays are
/// comma-separated (commas inside parentheses do not split). A number may be
/// written as 2^e, e.g. 2^-14.
struct ExperimentConfig {
  std::string model = "cubic";
  ModelParams model_params;

  std::vector<std::string> schemes{"me"};
  /// Reference scheme for density runs, simulated at h_ref.
  std::string reference_scheme = "ssm";

  double T = 1.0;
  std::size_t N = 100;
  std::uint64_t seed = 1;
  double h_ref = 0x1p-14;
  std::vector<double> h_list{0x1p-7, 0x1p-8, 0x1p-9, 0x1p-10, 0x1p-11};

  /// Empty selects the experiment default ({1, 3, 10} for density, T otherwise).
  std::vector<double> record_times;
  std::size_t repetitions = 1;

  std::vector<std::size_t> trace_ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t trace_stride = 1;
  /// Start of the settled window of the path stability summary.
  double burn_in = 1.0;

  std::vector<int> orders{2, 4};
  double moment_ceiling = 1e2;
  std::size_t moment_stride = 1;

  std::size_t kde_points = 512;

  std::vector<std::size_t> n_list{50, 100, 200, 400, 800};
  std::size_t proxy_n = 10000;
  std::optional<std::uint64_t> proxy_seed;

  std::string out_dir = "out";
  std::vector<std::string> formats{"csv"};
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses a real, accepting 2^e.
double parse_number(std::string_view text);

/// Splits at commas outside parentheses and trims each item.
std::vector<std::string> split_list(std::string_view text);

/// Restores the published convergence protocol: h_ref = 2^-17,
/// h_list = 2^-13 .. 2^-16, N = 100, T = 1.
void apply_paper_scale(ExperimentConfig& cfg);

/// Number of steps T / h, or ConfigError when h does not divide T.
std::size_t steps_for(double horizon, double h, const char* what);

/// Coarsening factor h / h_ref, or ConfigError when it is not an integer
/// dividing T / h_ref.
std::size_t coarsening_factor(const ExperimentConfig& cfg, double h);

/// Checks the fields an experiment relies on; throws ConfigError.
void validate(const ExperimentConfig& cfg, Experiment experiment);

/// Stable textual form of every field, used for fingerprints.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace mvsde
