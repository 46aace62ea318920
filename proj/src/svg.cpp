#include "mvsde/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "mvsde/error.hpp"

namespace mvsde::svg {
namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 190.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = INFINITY;
  double hi = -INFINITY;

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double m = 0.04 * (hi - lo);
      lo -= m;
      hi += m;
    }
  }
};

/// Roughly five ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(const Range& r) {
  const double raw = (r.hi - r.lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-9 * step; t += step) {
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return out;
}

}  // namespace

std::string render(const Plot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw DimensionMismatch("svg: series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
    }
  }
  if (!(xr.hi >= xr.lo)) throw InvalidArgument("svg: nothing to plot");
  xr.pad();
  yr.pad();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string out;
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  out += fmt::format("<!-- mvsde config fnv1a64={:016x} -->\n", plot.fingerprint);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  out += fmt::format("<text x=\"{:.2f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     kLeft + pw / 2, escape(plot.title));
  out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);
  for (double t : ticks(xr)) {
    const double x = px(t);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", x,
                       kTop + ph, kTop + ph + 5);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:g}</text>\n", x, kTop + ph + 18, t);
  }
  for (double t : ticks(yr)) {
    const double y = py(t);
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n",
                       kLeft - 5, y, kLeft);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 8, y + 4, t);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 15, escape(plot.x_label));
  out += fmt::format("<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">{1}</text>\n",
                     kTop + ph / 2, escape(plot.y_label));

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kPalette[k % kPalette.size()];
    if (s.line) {
      std::string points;
      std::size_t count = 0;
      auto flush = [&] {
        if (count > 0) {
          out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
        }
        points.clear();
        count = 0;
      };
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          flush();
          continue;
        }
        if (count) points += ' ';
        points += fmt::format("{:.2f},{:.2f}", px(s.x[i]), py(s.y[i]));
        ++count;
      }
      flush();
    }
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[i]), py(s.y[i]), color);
      }
    }
    const double ly = kTop + 14.0 + 16.0 * static_cast<double>(k);
    const double lx = kLeft + pw + 12.0;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       lx, ly - 4, lx + 18, ly - 4, color);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", lx + 24, ly, escape(s.label));
  }
  for (std::size_t k = 0; k < plot.notes.size(); ++k) {
    const double ny = kTop + 14.0 + 16.0 * static_cast<double>(plot.series.size() + 1 + k);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft + pw + 12.0, ny, escape(plot.notes[k]));
  }
  out += "</svg>\n";
  return out;
}

Plot convergence_plot(const ConvergenceReport& report, std::uint64_t fingerprint) {
  Plot p;
  p.title = fmt::format("Strong error, {} (N = {})", report.model, report.particles);
  p.x_label = "log2 h";
  p.y_label = "log2 RMSE";
  p.fingerprint = fingerprint;
  for (const auto& sc : report.schemes) {
    Series pts{sc.scheme, {}, {}, false, true};
    for (const auto& r : sc.rows) {
      if (r.excluded) continue;
      pts.x.push_back(r.log2_h);
      pts.y.push_back(r.log2_rmse);
    }
    p.series.push_back(pts);
    if (sc.fit && !pts.x.empty()) {
      const auto [lo, hi] = std::minmax_element(pts.x.begin(), pts.x.end());
      Series fit{fmt::format("{} slope={:.3f}", sc.scheme, sc.fit->slope), {*lo, *hi}, {}, true, false};
      fit.y = {sc.fit->slope * *lo + sc.fit->intercept, sc.fit->slope * *hi + sc.fit->intercept};
      p.series.push_back(fit);
    }
  }
  return p;
}

Plot density_plot(const std::vector<const DensityEntry*>& entries, const std::string& title, std::uint64_t fingerprint) {
  Plot p;
  p.title = title;
  p.x_label = "x";
  p.y_label = "density";
  p.fingerprint = fingerprint;
  for (const auto* e : entries) {
    if (!e->curve) continue;
    p.series.push_back({fmt::format("{} h={:g} t={:g}", e->scheme, e->h, e->t), e->curve->grid, e->curve->values, true, false});
  }
  if (!p.series.empty()) p.notes.push_back("gaussian kde, silverman bandwidth");
  return p;
}

Plot paths_plot(const PathEntry& entry, std::uint64_t fingerprint) {
  Plot p;
  p.title = fmt::format("Paths, {} h={:g}", entry.scheme, entry.h);
  p.x_label = "t";
  p.y_label = "X";
  p.fingerprint = fingerprint;
  const std::size_t width = entry.table.particle_ids.size();
  for (std::size_t c = 0; c < width; ++c) {
    Series s{fmt::format("p{}", entry.table.particle_ids[c]), entry.table.times, {}, true, false};
    for (std::size_t r = 0; r < entry.table.times.size(); ++r) s.y.push_back(entry.table.values[r * width + c]);
    p.series.push_back(std::move(s));
  }
  p.notes.push_back(fmt::format("max|X| = {:.4g}", entry.summary.max_abs));
  if (entry.summary.first_nonfinite_t) p.notes.push_back(fmt::format("non-finite at t = {:g}", *entry.summary.first_nonfinite_t));
  return p;
}

Plot moments_plot(const MomentSeries& series, std::uint64_t fingerprint) {
  Plot p;
  p.title = fmt::format("Moments, {} h={:g}", series.scheme, series.h);
  p.x_label = "t";
  p.y_label = "E|X|^k";
  p.fingerprint = fingerprint;
  const std::size_t width = series.orders.size();
  for (std::size_t c = 0; c < width; ++c) {
    Series s{fmt::format("m{}", series.orders[c]), series.times, {}, true, false};
    for (std::size_t r = 0; r < series.times.size(); ++r) s.y.push_back(series.values[r * width + c]);
    p.series.push_back(std::move(s));
  }
  return p;
}

}  // namespace mvsde::svg
