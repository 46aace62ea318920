#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/experiments.hpp"

namespace mvsde::io {

/// 17 significant digits; nan, inf and -inf for non-finite values.
std::string format_real(double v);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view text);

/// Accumulates an RFC 4180 table with LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  const std::string& str() const noexcept { return out_; }

 private:
  void append(const std::vector<std::string>& fields);

  std::size_t width_;
  std::string out_;
};

/// Writes bytes verbatim, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Columns h, rmse, log2_h, log2_rmse.
std::string convergence_csv(const SchemeConvergence& sc);
/// Columns scheme, slope, intercept, r2, residual, points.
std::string convergence_summary_csv(const ConvergenceReport& report);
/// Columns x, density.
std::string density_csv(const DensityCurve& curve);
/// Columns t, p<id>...
std::string paths_csv(const PathTable& table);
/// Columns scheme, h, seed, max_abs, settled_max_abs, burn_in, nonfinite_paths, first_nonfinite_t.
std::string stability_csv(const PathBundle& bundle);
/// Columns t, m<order>...
std::string moments_csv(const MomentSeries& series);
/// Columns n, mean_error, std_error, repetitions.
std::string nscaling_csv(const NScalingReport& report);
/// Columns subject, assumption, pass, max_violation, witness, constants.
std::string check_csv(const CheckReport& report);

/// File-name tag for a real: shortest %g form (0.5, 10, 1e-05).
std::string real_tag(double v);

}  // namespace mvsde::io
