#include "mvsde/csv.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "mvsde/error.hpp"

namespace mvsde::io {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) : width_(header.size()) { append(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw DimensionMismatch("CsvWriter: row width differs from header");
  append(fields);
}

void CsvWriter::append(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_field(fields[i]);
  }
  out_ += '\n';
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::string convergence_csv(const SchemeConvergence& sc) {
  CsvWriter w({"h", "rmse", "log2_h", "log2_rmse"});
  for (const auto& r : sc.rows) w.row({format_real(r.h), format_real(r.rmse), format_real(r.log2_h), format_real(r.log2_rmse)});
  return w.str();
}

std::string convergence_summary_csv(const ConvergenceReport& report) {
  CsvWriter w({"scheme", "slope", "intercept", "r2", "residual", "points"});
  for (const auto& sc : report.schemes) {
    if (sc.fit) {
      w.row({sc.scheme, format_real(sc.fit->slope), format_real(sc.fit->intercept), format_real(sc.fit->r2),
             format_real(sc.fit->residual), std::to_string(sc.fit->points)});
    } else {
      w.row({sc.scheme, "nan", "nan", "nan", "nan", "0"});
    }
  }
  return w.str();
}

std::string density_csv(const DensityCurve& curve) {
  CsvWriter w({"x", "density"});
  for (std::size_t i = 0; i < curve.grid.size(); ++i) w.row({format_real(curve.grid[i]), format_real(curve.values[i])});
  return w.str();
}

std::string paths_csv(const PathTable& table) {
  std::vector<std::string> header{"t"};
  for (std::size_t id : table.particle_ids) header.push_back(fmt::format("p{}", id));
  CsvWriter w(header);
  const std::size_t width = table.particle_ids.size();
  for (std::size_t r = 0; r < table.times.size(); ++r) {
    std::vector<std::string> row{format_real(table.times[r])};
    for (std::size_t c = 0; c < width; ++c) row.push_back(format_real(table.values[r * width + c]));
    w.row(row);
  }
  return w.str();
}

std::string stability_csv(const PathBundle& bundle) {
  CsvWriter w({"scheme", "h", "seed", "max_abs", "settled_max_abs", "burn_in", "nonfinite_paths", "first_nonfinite_t"});
  for (const auto& e : bundle.entries) {
    const auto& s = e.summary;
    w.row({e.scheme, format_real(e.h), std::to_string(e.seed), format_real(s.max_abs), format_real(s.settled_max_abs),
           format_real(s.burn_in), std::to_string(s.nonfinite_paths),
           s.first_nonfinite_t ? format_real(*s.first_nonfinite_t) : std::string()});
  }
  return w.str();
}

std::string moments_csv(const MomentSeries& series) {
  std::vector<std::string> header{"t"};
  for (int k : series.orders) header.push_back(fmt::format("m{}", k));
  CsvWriter w(header);
  const std::size_t width = series.orders.size();
  for (std::size_t r = 0; r < series.times.size(); ++r) {
    std::vector<std::string> row{format_real(series.times[r])};
    for (std::size_t c = 0; c < width; ++c) row.push_back(format_real(series.values[r * width + c]));
    w.row(row);
  }
  return w.str();
}

std::string nscaling_csv(const NScalingReport& report) {
  CsvWriter w({"n", "mean_error", "std_error", "repetitions"});
  for (const auto& r : report.rows) {
    w.row({std::to_string(r.n), format_real(r.mean_error), format_real(r.std_error), std::to_string(r.errors.size())});
  }
  return w.str();
}

std::string check_csv(const CheckReport& report) {
  CsvWriter w({"subject", "assumption", "pass", "max_violation", "witness", "constants"});
  for (const auto& r : report.rows) {
    w.row({r.subject, std::string(verify::assumption_name(r.assumption)), r.pass ? "true" : "false",
           format_real(r.max_violation), r.witness, r.constants});
  }
  return w.str();
}

std::string real_tag(double v) { return fmt::format("{:g}", v); }

}  // namespace mvsde::io
