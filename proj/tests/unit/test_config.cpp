#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "mvsde/config.hpp"
#include "mvsde/error.hpp"
#include "mvsde/stepper.hpp"

using namespace mvsde;

TEST_CASE("numbers and lists") {
  CHECK(parse_number("2^-14") == std::ldexp(1.0, -14));
  CHECK(parse_number(" 2^3 ") == 8.0);
  CHECK(parse_number("0.01") == 0.01);
  CHECK(parse_number("1e-3") == 1e-3);
  CHECK_THROWS_AS(parse_number(""), ConfigError);
  CHECK_THROWS_AS(parse_number("1.5x"), ConfigError);
  CHECK_THROWS_AS(parse_number("2^"), ConfigError);

  CHECK(split_list("me, te(1) ,dte(0.5)") == std::vector<std::string>{"me", "te(1)", "dte(0.5)"});
  CHECK(split_list("f(a,b), g") == std::vector<std::string>{"f(a,b)", "g"});
  CHECK(split_list("").empty());
  CHECK_THROWS_AS(split_list("a,,b"), ConfigError);
  CHECK_THROWS_AS(split_list("f(a"), ConfigError);
}

TEST_CASE("a full config") {
  const std::string text =
      "\xEF\xBB\xBF# leading comment\n"
      "[Model]\n"
      "name = quintic\n"
      "Gamma = 0.02\n"
      "\n"
      "[schemes]\n"
      "list = me, te(1)   \n"
      "reference =\n"
      "; another comment\n"
      "[grid]\n"
      "T = 10\r\n"
      "N = 1000\n"
      "seed = 18446744073709551615\n"
      "h_ref = 2^-10\n"
      "h_list = 2^-6, 2^-8\n"
      "[experiment]\n"
      "record_times = 1, 3, 10\n"
      "repetitions = 3\n"
      "trace_ids = 4, 5\n"
      "trace_stride = 5\n"
      "burn_in = 2\n"
      "orders = 2, 4, 6\n"
      "moment_ceiling = 1e3\n"
      "n_list = 10, 20\n"
      "proxy_n = 500\n"
      "proxy_seed = 9\n"
      "[output]\n"
      "dir = out/q\n"
      "formats = csv, svg\n";
  const auto c = parse_config(text);
  CHECK(c.model == "quintic");
  CHECK(c.model_params.at("gamma") == 0.02);
  CHECK(c.schemes == std::vector<std::string>{"me", "te(1)"});
  CHECK(c.reference_scheme.empty());
  CHECK(c.T == 10.0);
  CHECK(c.N == 1000);
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.h_ref == std::ldexp(1.0, -10));
  CHECK(c.h_list == std::vector<double>{1.0 / 64, 1.0 / 256});
  CHECK(c.record_times == std::vector<double>{1, 3, 10});
  CHECK(c.repetitions == 3);
  CHECK(c.trace_ids == std::vector<std::size_t>{4, 5});
  CHECK(c.trace_stride == 5);
  CHECK(c.burn_in == 2.0);
  CHECK(c.orders == std::vector<int>{2, 4, 6});
  CHECK(c.moment_ceiling == 1000.0);
  CHECK(c.n_list == std::vector<std::size_t>{10, 20});
  CHECK(c.proxy_n == 500);
  CHECK(c.proxy_seed == 9u);
  CHECK(c.out_dir == "out/q");
  CHECK(c.formats == std::vector<std::string>{"csv", "svg"});
  CHECK_NOTHROW(validate(c, Experiment::Converge));
  CHECK_NOTHROW(validate(c, Experiment::Density));
}

TEST_CASE("defaults") {
  const auto c = parse_config("");
  CHECK(c.model == "cubic");
  CHECK(c.schemes == std::vector<std::string>{"me"});
  CHECK(c.N == 100);
  CHECK(c.h_ref == std::ldexp(1.0, -14));
  CHECK(c.h_list.size() == 5);
  for (auto e : {Experiment::Converge, Experiment::Density, Experiment::Paths, Experiment::Moments,
                 Experiment::NScaling, Experiment::Check}) {
    CHECK_NOTHROW(validate(c, e));
  }
}

TEST_CASE("syntax errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[grid]\nN = 10\nT 1\n").find("line 3") != std::string::npos);
  CHECK(message("[grid\n").find("line 1") != std::string::npos);
  CHECK(message("N = 1\n").find("line 1") != std::string::npos);
  CHECK(message("[grid]\nbogus = 1\n").find("bogus") != std::string::npos);
  CHECK(message("[nowhere]\nx = 1\n").find("nowhere") != std::string::npos);
  CHECK(message("[grid]\nN = -4\n").find("line 2") != std::string::npos);
  CHECK(message("[grid]\nN = 0\n").find("line 2") != std::string::npos);
  CHECK(message("[experiment]\nrepetitions = 2.5\n").find("line 2") != std::string::npos);
}

TEST_CASE("semantic validation") {
  ExperimentConfig c;
  c.h_list = {0.003};
  CHECK_THROWS_AS(validate(c, Experiment::Converge), ConfigError);
  c.h_list = {0x1p-6};
  c.h_ref = 0x1p-5;
  CHECK_THROWS_AS(validate(c, Experiment::Converge), ConfigError);
  c = {};
  c.schemes.clear();
  CHECK_THROWS_AS(validate(c, Experiment::Paths), ConfigError);
  c = {};
  c.formats = {"pdf"};
  CHECK_THROWS_AS(validate(c, Experiment::Paths), ConfigError);
  c = {};
  c.record_times = {2.0};
  CHECK_THROWS_AS(validate(c, Experiment::Density), ConfigError);
  c = {};
  c.n_list = {50};
  CHECK_THROWS_AS(validate(c, Experiment::NScaling), ConfigError);
  c = {};
  c.h_list = {0.01, 0.004};
  c.T = 10;
  CHECK_NOTHROW(validate(c, Experiment::Paths));
}

TEST_CASE("grid arithmetic") {
  CHECK(steps_for(1.0, 0x1p-14, "h") == 16384);
  CHECK(steps_for(10.0, 0.01, "h") == 1000);
  CHECK(steps_for(10.0, 0.004, "h") == 2500);
  CHECK_THROWS_AS(steps_for(1.0, 0.3, "h"), ConfigError);
  CHECK_THROWS_AS(steps_for(1.0, 1.0, "h"), ConfigError);
  ExperimentConfig c;
  CHECK(coarsening_factor(c, 0x1p-7) == 128);
  CHECK(coarsening_factor(c, 0x1p-14) == 1);
  CHECK_THROWS_AS(coarsening_factor(c, 0.003), ConfigError);
  apply_paper_scale(c);
  CHECK(c.h_ref == 0x1p-17);
  CHECK(c.h_list == std::vector<double>{0x1p-13, 0x1p-14, 0x1p-15, 0x1p-16});
}

TEST_CASE("fingerprints") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  ExperimentConfig a, b;
  CHECK(canonical_text(a) == canonical_text(b));
  b.seed = 2;
  CHECK(canonical_text(a) != canonical_text(b));
  b = a;
  b.h_list[0] = std::nextafter(b.h_list[0], 1.0);
  CHECK(canonical_text(a) != canonical_text(b));
}

TEST_CASE("model lookup") {
  CHECK_THROWS_AS(ModelRegistry::global().make("nope"), ConfigError);
  CHECK_THROWS_AS(ModelRegistry::global().make("cubic", {{"gama", 0.1}}), ConfigError);
  CHECK(ModelRegistry::global().make("quintic", {{"gamma", 0.1}}).name == "quintic");
}

TEST_CASE("shipped configs parse and validate") {
  const std::filesystem::path dir = MVSDE_SOURCE_DIR "/configs";
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK_NOTHROW(ModelRegistry::global().make(c.model, c.model_params));
    for (const auto& s : c.schemes) CHECK_NOTHROW(parse_scheme(s, 1.0));
    ++count;
  }
  CHECK(count >= 3);
  CHECK_THROWS_AS(load_config(dir / "missing.ini"), ConfigError);
}
