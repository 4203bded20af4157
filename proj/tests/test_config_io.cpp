#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gsflow/config.hpp"
#include "gsflow/error.hpp"
#include "gsflow/io.hpp"

using namespace gsflow;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / "gsflow_test_config_io";
  std::filesystem::create_directories(d);
  return d / name;
}

}  // namespace

TEST_CASE("typed getters and defaults") {
  const Config c = Config::parse(
      "[nonlinearity]\na0 = 2\nterms = 1:2, 0.5:3\n[flow]\nscheme = euler\n"
      "[threshold]\nrelative = false\n[run]\nseed = 18446744073709551615\n");
  CHECK(c.get("nonlinearity.a0", 1.0) == 2.0);
  CHECK(c.get("grid.h", 0.25) == 0.25);
  CHECK_FALSE(c.get("threshold.relative", true));
  CHECK(c.get_u64("run.seed", 1) == 18446744073709551615ull);
  CHECK(c.has("flow.scheme"));
  const Nonlinearity nl = nonlinearity_from(c);
  CHECK(nl.a0() == 2.0);
  CHECK(nl.terms().size() == 2);
  CHECK(nl.terms()[1].exponent == 3.0);
  CHECK(flow_options_from(c).scheme == Scheme::euler);
}

TEST_CASE("unknown keys and malformed values are config errors") {
  CHECK_THROWS_AS(Config::parse("[grid]\nhh = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[nope]\nx = 1\n"), ConfigError);
  const Config c = Config::parse("[grid]\nh = abc\n[flow]\nscheme = rk4\n[nonlinearity]\nterms = 1-2\n");
  CHECK_THROWS_AS(c.get("grid.h", 1.0), ConfigError);
  CHECK_THROWS_AS(flow_options_from(c), ConfigError);
  CHECK_THROWS_AS(nonlinearity_from(c), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/gsflow.ini"), ConfigError);
}

TEST_CASE("hash is canonical") {
  const Config a = Config::parse("[grid]\nR = 30\nh = 0.01\n[run]\nseed = 1\n");
  const Config b = Config::parse("[run]\nseed = 1\n\n[grid]\nh =   0.01\nR = 30\n");
  const Config d = Config::parse("[grid]\nR = 30\nh = 0.02\n[run]\nseed = 1\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != d.hash());
  CHECK(a.hash().size() == 64);
  CHECK(a.canonical() == "grid.R=30\ngrid.h=0.01\nrun.seed=1\n");
}

TEST_CASE("list parsers") {
  CHECK(parse_list("1, 2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(parse_list("").empty());
  const auto pts = parse_points("0 0 1; -2 3.5 0");
  REQUIRE(pts.size() == 2);
  CHECK(pts[1] == std::vector<double>{-2.0, 3.5, 0.0});
  CHECK(parse_criteria("all").size() == 11);
  CHECK(parse_criteria("3, 1") == std::vector<int>{1, 3});
  CHECK_THROWS_AS(parse_criteria("12"), ConfigError);
  CHECK(parse_criteria("").empty());
  CHECK_THROWS_AS(parse_list("1, x"), ConfigError);
}

TEST_CASE("outputs carry the config hash") {
  const std::string hash = Config::parse("[run]\nseed = 3\n").hash();
  const auto jp = scratch("doc.json");
  write_json(jp, Json{{"a", 1}}, hash);
  const Json back = Json::parse(slurp(jp));
  CHECK(back["config_hash"] == hash);
  CHECK(back["a"] == 1);

  const auto cp = scratch("run.csv");
  std::vector<Sample> hist = {{0.0, 1.0, 0.5, 0.0, 1.0, 1.0}, {0.1, 0.9, 0.4, 0.05, 0.9, 0.9}};
  write_history_csv(cp, hist, hash);
  const std::string text = slurp(cp);
  CHECK(text.rfind("# config_hash=" + hash, 0) == 0);
  CHECK(text.find("t,J,rate,dissipation,sup,l2") != std::string::npos);
}
