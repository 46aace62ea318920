#include "mvsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mvsde/error.hpp"

namespace mvsde {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ConfigError(fmt::format("config line {}: {}", line, msg));
}

double strict_double(std::string_view text) {
  const std::string s(trim(text));
  if (s.empty()) throw ConfigError("empty number");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(std::string_view text) {
  const auto s = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("not a nonnegative integer: '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_positive(std::string_view text, const char* key) {
  const auto v = parse_u64(text);
  if (v == 0) throw ConfigError(std::string(key) + " must be positive");
  return static_cast<std::size_t>(v);
}

template <typename T, typename F>
std::vector<T> parse_array(std::string_view text, F&& f) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(f(item));
  return out;
}

bool near_integer(double q, long long& rounded) {
  rounded = std::llround(q);
  return rounded >= 1 && std::abs(q - static_cast<double>(rounded)) <= 1e-9 * static_cast<double>(rounded);
}

void apply(ExperimentConfig& cfg, const std::string& section, const std::string& key, std::string_view value) {
  if (section == "model") {
    if (key == "name") {
      cfg.model = std::string(value);
    } else {
      cfg.model_params[key] = parse_number(value);
    }
  } else if (section == "schemes") {
    if (key == "list") {
      cfg.schemes = split_list(value);
    } else if (key == "reference") {
      cfg.reference_scheme = std::string(value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } else if (section == "grid") {
    if (key == "t") {
      cfg.T = parse_number(value);
    } else if (key == "n") {
      cfg.N = parse_positive(value, "N");
    } else if (key == "seed") {
      cfg.seed = parse_u64(value);
    } else if (key == "h_ref") {
      cfg.h_ref = parse_number(value);
    } else if (key == "h_list") {
      cfg.h_list = parse_array<double>(value, parse_number);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } else if (section == "experiment") {
    if (key == "record_times") {
      cfg.record_times = parse_array<double>(value, parse_number);
    } else if (key == "repetitions") {
      cfg.repetitions = parse_positive(value, "repetitions");
    } else if (key == "trace_ids") {
      cfg.trace_ids = parse_array<std::size_t>(value, [](std::string_view s) { return parse_u64(s); });
    } else if (key == "trace_stride") {
      cfg.trace_stride = parse_positive(value, "trace_stride");
    } else if (key == "burn_in") {
      cfg.burn_in = parse_number(value);
    } else if (key == "orders") {
      cfg.orders = parse_array<int>(value, [](std::string_view s) { return static_cast<int>(parse_u64(s)); });
    } else if (key == "moment_ceiling") {
      cfg.moment_ceiling = parse_number(value);
    } else if (key == "moment_stride") {
      cfg.moment_stride = parse_positive(value, "moment_stride");
    } else if (key == "kde_points") {
      cfg.kde_points = parse_positive(value, "kde_points");
    } else if (key == "n_list") {
      cfg.n_list = parse_array<std::size_t>(value, [](std::string_view s) { return parse_positive(s, "n_list"); });
    } else if (key == "proxy_n") {
      cfg.proxy_n = parse_positive(value, "proxy_n");
    } else if (key == "proxy_seed") {
      cfg.proxy_seed = parse_u64(value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } else if (section == "output") {
    if (key == "dir") {
      cfg.out_dir = std::string(value);
    } else if (key == "formats") {
      cfg.formats = split_list(value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } else {
    throw ConfigError("unknown section '" + section + "'");
  }
}

}  // namespace

std::string_view experiment_name(Experiment e) noexcept {
  switch (e) {
    case Experiment::Converge: return "converge";
    case Experiment::Density: return "density";
    case Experiment::Paths: return "paths";
    case Experiment::Moments: return "moments";
    case Experiment::NScaling: return "nscaling";
    case Experiment::Check: return "check";
  }
  return "?";
}

double parse_number(std::string_view text) {
  const auto s = trim(text);
  if (s.size() > 2 && s[0] == '2' && s[1] == '^') {
    const double e = strict_double(s.substr(2));
    if (e == std::floor(e) && std::abs(e) < 1000) return std::ldexp(1.0, static_cast<int>(e));
    return std::pow(2.0, e);
  }
  return strict_double(s);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const char c = i < text.size() ? text[i] : ',';
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      const auto item = trim(text.substr(start, i - start));
      if (item.empty()) throw ConfigError("empty list item in '" + std::string(text) + "'");
      out.emplace_back(item);
      start = i + 1;
    }
  }
  if (depth != 0) throw ConfigError("unbalanced parentheses in '" + std::string(text) + "'");
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside of a section");
    const std::string key = lower(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    try {
      apply(cfg, section, key, value);
    } catch (const ConfigError& e) {
      fail(line_no, e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.h_ref = 0x1p-17;
  cfg.h_list = {0x1p-13, 0x1p-14, 0x1p-15, 0x1p-16};
  cfg.N = 100;
  cfg.T = 1.0;
}

std::size_t steps_for(double horizon, double h, const char* what) {
  if (!(h > 0.0) || !(h < 1.0)) throw ConfigError(fmt::format("{}: step {} outside (0, 1)", what, h));
  long long n = 0;
  if (!near_integer(horizon / h, n)) throw ConfigError(fmt::format("{}: T / h = {} is not an integer", what, horizon / h));
  return static_cast<std::size_t>(n);
}

std::size_t coarsening_factor(const ExperimentConfig& cfg, double h) {
  const std::size_t n_ref = steps_for(cfg.T, cfg.h_ref, "h_ref");
  long long f = 0;
  if (!near_integer(h / cfg.h_ref, f)) {
    throw ConfigError(fmt::format("h = {} is not an integer multiple of h_ref = {}", h, cfg.h_ref));
  }
  if (n_ref % static_cast<std::size_t>(f) != 0) {
    throw ConfigError(fmt::format("h = {} does not divide the reference grid", h));
  }
  return static_cast<std::size_t>(f);
}

void validate(const ExperimentConfig& cfg, Experiment experiment) {
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("T must be positive");
  if (cfg.schemes.empty()) throw ConfigError("at least one scheme is required");
  for (double t : cfg.record_times) {
    if (!(t >= 0.0 && t <= cfg.T * (1.0 + 1e-12))) throw ConfigError(fmt::format("record time {} outside [0, T]", t));
  }
  switch (experiment) {
    case Experiment::Converge:
    case Experiment::Density:
      steps_for(cfg.T, cfg.h_ref, "h_ref");
      if (cfg.h_list.empty()) throw ConfigError("h_list is empty");
      for (double h : cfg.h_list) coarsening_factor(cfg, h);
      break;
    case Experiment::Paths:
    case Experiment::Moments:
    case Experiment::NScaling:
      if (cfg.h_list.empty()) throw ConfigError("h_list is empty");
      for (double h : cfg.h_list) steps_for(cfg.T, h, "h_list");
      break;
    case Experiment::Check:
      break;
  }
  if (experiment == Experiment::Moments && cfg.orders.empty()) throw ConfigError("orders is empty");
  for (int k : cfg.orders) {
    if (k < 1) throw ConfigError("moment orders must be positive");
  }
  if (experiment == Experiment::NScaling && cfg.n_list.size() < 2) throw ConfigError("n_list needs two entries");
  for (const auto& f : cfg.formats) {
    if (f != "csv" && f != "svg") throw ConfigError("unknown output format '" + f + "'");
  }
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) { out += fmt::format("{}={}\n", key, value); };
  line("model", cfg.model);
  for (const auto& [k, v] : cfg.model_params) line("model." + k, fmt::format("{:.17g}", v));
  line("schemes", fmt::format("{}", fmt::join(cfg.schemes, ",")));
  line("reference", cfg.reference_scheme);
  line("T", fmt::format("{:.17g}", cfg.T));
  line("N", fmt::format("{}", cfg.N));
  line("seed", fmt::format("{}", cfg.seed));
  line("h_ref", fmt::format("{:.17g}", cfg.h_ref));
  line("h_list", fmt::format("{:.17g}", fmt::join(cfg.h_list, ",")));
  line("record_times", fmt::format("{:.17g}", fmt::join(cfg.record_times, ",")));
  line("repetitions", fmt::format("{}", cfg.repetitions));
  line("trace_ids", fmt::format("{}", fmt::join(cfg.trace_ids, ",")));
  line("trace_stride", fmt::format("{}", cfg.trace_stride));
  line("burn_in", fmt::format("{:.17g}", cfg.burn_in));
  line("orders", fmt::format("{}", fmt::join(cfg.orders, ",")));
  line("moment_ceiling", fmt::format("{:.17g}", cfg.moment_ceiling));
  line("moment_stride", fmt::format("{}", cfg.moment_stride));
  line("kde_points", fmt::format("{}", cfg.kde_points));
  line("n_list", fmt::format("{}", fmt::join(cfg.n_list, ",")));
  line("proxy_n", fmt::format("{}", cfg.proxy_n));
  line("proxy_seed", cfg.proxy_seed ? fmt::format("{}", *cfg.proxy_seed) : std::string("default"));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mvsde
