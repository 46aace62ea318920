#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "mvsde/csv.hpp"
#include "mvsde/error.hpp"
#include "mvsde/svg.hpp"

using namespace mvsde;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("real formatting round-trips") {
  CHECK(io::format_real(0.5) == "0.5");
  CHECK(io::format_real(NAN) == "nan");
  CHECK(io::format_real(INFINITY) == "inf");
  CHECK(io::format_real(-INFINITY) == "-inf");
  for (double v : {0.1, 1.0 / 3.0, -2.2250738585072014e-308, 1.7976931348623157e308, 5e-324, 0x1p-14}) {
    CHECK(std::strtod(io::format_real(v).c_str(), nullptr) == v);
  }
  CHECK(io::real_tag(0.5) == "0.5");
  CHECK(io::real_tag(10.0) == "10");
  CHECK(io::real_tag(1e-5) == "1e-05");
}

TEST_CASE("csv quoting") {
  CHECK(io::csv_field("plain") == "plain");
  CHECK(io::csv_field("a,b") == "\"a,b\"");
  CHECK(io::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(io::csv_field("two\nlines") == "\"two\nlines\"");
  io::CsvWriter w({"a", "b"});
  w.row({"1", "x,y"});
  CHECK(w.str() == "a,b\n1,\"x,y\"\n");
  CHECK_THROWS_AS(w.row({"1"}), DimensionMismatch);
}

TEST_CASE("tables") {
  SchemeConvergence sc;
  sc.scheme = "me";
  sc.rows.push_back({0.25, 4, 0.125, -2, -3, false, false});
  sc.rows.push_back({0.125, 2, NAN, -3, NAN, true, true});
  const auto conv = lines(io::convergence_csv(sc));
  REQUIRE(conv.size() == 3);
  CHECK(conv[0] == "h,rmse,log2_h,log2_rmse");
  CHECK(conv[1] == "0.25,0.125,-2,-3");
  CHECK(conv[2] == "0.125,nan,-3,nan");

  ConvergenceReport report;
  sc.fit = LinearFit{0.5, -2, 0.99, 0.01, 3};
  report.schemes.push_back(sc);
  const auto summary = lines(io::convergence_summary_csv(report));
  CHECK(summary[0] == "scheme,slope,intercept,r2,residual,points");
  CHECK(summary[1] == "me,0.5,-2,0.98999999999999999,0.01,3");

  PathTable t;
  t.particle_ids = {0, 7};
  t.times = {0, 0.5};
  t.values = {1, 2, 3, NAN};
  CHECK(io::paths_csv(t) == "t,p0,p7\n0,1,2\n0.5,3,nan\n");

  MomentSeries ms;
  ms.orders = {2, 4};
  ms.times = {0};
  ms.values = {1, 3};
  CHECK(io::moments_csv(ms) == "t,m2,m4\n0,1,3\n");

  DensityCurve dc;
  dc.grid = {0, 1};
  dc.values = {0.25, 0.5};
  CHECK(io::density_csv(dc) == "x,density\n0,0.25\n1,0.5\n");

  CheckReport cr;
  cr.rows.push_back({"me", verify::Assumption::H1, true, -0.5, "h=0.5;v=1", "L=1"});
  const auto check = lines(io::check_csv(cr));
  CHECK(check[0] == "subject,assumption,pass,max_violation,witness,constants");
  CHECK(check[1] == "me,H1,true,-0.5,h=0.5;v=1,L=1");

  NScalingReport nr;
  nr.rows.push_back({50, 0.1, 0.01, {0.09, 0.11}});
  CHECK(lines(io::nscaling_csv(nr))[1] == "50,0.10000000000000001,0.01,2");
}

TEST_CASE("files are written verbatim") {
  const auto dir = std::filesystem::temp_directory_path() / "mvsde_output_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  io::write_file(dir / "a.csv", "x\n1\n");
  std::ifstream in(dir / "a.csv", std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "x\n1\n");
  std::filesystem::remove_all(dir.parent_path());
}

TEST_CASE("a two point series draws one polyline") {
  svg::Plot p;
  p.title = "t";
  p.series.push_back({"line", {0, 1}, {0, 1}, true, false});
  const auto doc = svg::render(p);
  CHECK(count(doc, "<polyline") == 1);
  const std::regex pts("points=\"([^\"]*)\"");
  std::smatch m;
  REQUIRE(std::regex_search(doc, m, pts));
  CHECK(count(m[1].str(), ",") == 2);
  CHECK(doc.rfind("<svg", 0) == 0);
  CHECK(doc.find("</svg>") != std::string::npos);
  CHECK(doc.find("href") == std::string::npos);
  CHECK(doc.find("<script") == std::string::npos);
}

TEST_CASE("non-finite points split lines") {
  svg::Plot p;
  p.series.push_back({"gap", {0, 1, 2, 3, 4}, {0, 1, NAN, 1, 0}, true, false});
  CHECK(count(svg::render(p), "<polyline") == 2);
  svg::Plot empty;
  CHECK_THROWS_AS(svg::render(empty), InvalidArgument);
  empty.series.push_back({"nan", {0, 1}, {NAN, INFINITY}, true, false});
  CHECK_THROWS_AS(svg::render(empty), InvalidArgument);
}

TEST_CASE("convergence plot labels the slope") {
  ConvergenceReport r;
  r.model = "cubic";
  SchemeConvergence sc;
  sc.scheme = "me";
  for (int k = 5; k <= 8; ++k) {
    const double h = std::ldexp(1.0, -k);
    sc.rows.push_back({h, 1, std::sqrt(h), double(-k), -k / 2.0, false, false});
  }
  sc.fit = LinearFit{0.51234, 0.0, 1.0, 0.0, 4};
  r.schemes.push_back(sc);
  const auto a = svg::render(svg::convergence_plot(r, 0xabcdef));
  CHECK(a.find("slope=0.512") != std::string::npos);
  CHECK(a.find("slope=0.5123") == std::string::npos);
  CHECK(a.find("fnv1a64=0000000000abcdef") != std::string::npos);
  CHECK(a == svg::render(svg::convergence_plot(r, 0xabcdef)));
  CHECK(a != svg::render(svg::convergence_plot(r, 0xabcdee)));
}
