#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvsde/experiments.hpp"

namespace mvsde::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
  bool markers = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  /// Extra text lines drawn under the legend.
  std::vector<std::string> notes;
  /// Written as an XML comment near the top of the document.
  std::uint64_t fingerprint = 0;
};

/// Self-contained SVG. Each connected run of finite points becomes one
/// polyline; axes and ticks use line and text elements only. Throws
/// InvalidArgument when no series holds a finite point.
std::string render(const Plot& plot);

/// log2 h against log2 RMSE per scheme, with the fitted line and its slope.
Plot convergence_plot(const ConvergenceReport& report, std::uint64_t fingerprint);

/// Overlaid density curves, one per entry.
Plot density_plot(const std::vector<const DensityEntry*>& entries, const std::string& title, std::uint64_t fingerprint);

/// One line per traced particle.
Plot paths_plot(const PathEntry& entry, std::uint64_t fingerprint);

/// One line per moment order.
Plot moments_plot(const MomentSeries& series, std::uint64_t fingerprint);

}  // namespace mvsde::svg
