#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gsflow/config.hpp"
#include "gsflow/io.hpp"

using namespace gsflow;
namespace fs = std::filesystem;

namespace {

const std::string cli = GSFLOW_CLI;
const std::string configs = GSFLOW_CONFIG_DIR;

fs::path work() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / "gsflow_test_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int exit_code(const std::string& args) {
  const std::string cmd = cli + " " + args + " > " + (work() / "last.log").string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = work() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string out(const std::string& name) { return (work() / name).string(); }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(exit_code("") == 2);
  CHECK(exit_code("frobnicate") == 2);
  CHECK(exit_code("separate --bogus") == 2);
  CHECK(exit_code("verify --threads 0") == 2);
  CHECK(exit_code("verify --config /nonexistent.ini") == 2);
  CHECK(exit_code("verify --config " + write_config("typo.ini", "[verify]\ncriterias = 1\n").string()) == 2);
  CHECK(exit_code("verify --config " + write_config("empty.ini", "[verify]\ncriteria =\n").string()) == 2);
  CHECK(exit_code("verify --config " + write_config("range.ini", "[verify]\ncriteria = 0\n").string()) == 2);
  CHECK(exit_code("flow --config " + configs + "/separate.ini") == 2);
  CHECK(exit_code("ground-state --config " + write_config("bad_nl.ini", "[nonlinearity]\na0 = -1\n").string()) == 2);
  CHECK(exit_code("--help") == 0);
}

TEST_CASE("ground-state writes hashed outputs") {
  const std::string cfg = configs + "/ground_state.ini";
  REQUIRE(exit_code("ground-state --config " + cfg + " --out " + out("gs")) == 0);
  const Json rep = Json::parse(slurp(work() / "gs" / "report.json"));
  CHECK(rep["config_hash"] == Config::load(cfg).hash());
  CHECK(rep["xi0"].get<double>() > 4.0);
  const std::string csv = slurp(work() / "gs" / "profile.csv");
  CHECK(csv.rfind("# config_hash=" + Config::load(cfg).hash(), 0) == 0);
}

TEST_CASE("1D ground state reports its closed-form error") {
  const auto cfg = write_config("gs1.ini", "[nonlinearity]\nterms = 1:3\n[problem]\ndimension = 1\n");
  REQUIRE(exit_code("ground-state --config " + cfg.string() + " --out " + out("gs1")) == 0);
  const Json rep = Json::parse(slurp(work() / "gs1" / "report.json"));
  CHECK(rep["analytic_sup_error"].get<double>() <= 1e-6);
}

TEST_CASE("separate is deterministic in the seed") {
  const auto cfg = write_config("sep.ini",
                                "[separate]\ninstances = 20\ndirections = 500\nneighborhood = 50\n"
                                "[run]\nseed = 5\n");
  REQUIRE(exit_code("separate --config " + cfg.string() + " --out " + out("s1")) == 0);
  REQUIRE(exit_code("separate --config " + cfg.string() + " --out " + out("s2")) == 0);
  CHECK(slurp(work() / "s1" / "certificates.json") == slurp(work() / "s2" / "certificates.json"));
  REQUIRE(exit_code("separate --config " + cfg.string() + " --seed 6 --out " + out("s3")) == 0);
  CHECK(slurp(work() / "s1" / "certificates.json") != slurp(work() / "s3" / "certificates.json"));
}

TEST_CASE("verify passes a cheap criterion and fails on a coarse grid") {
  const auto ok = write_config("v10.ini", "[verify]\ncriteria = 10\n");
  CHECK(exit_code("verify --config " + ok.string() + " --out " + out("v10")) == 0);
  CHECK(slurp(work() / "v10" / "summary.txt").find("PASS 10") != std::string::npos);

  CHECK(exit_code("verify --config " + configs + "/verify_coarse.ini --out " + out("vc")) == 1);
  const std::string s = slurp(work() / "vc" / "summary.txt");
  CHECK(s.find("FAIL  3") != std::string::npos);
  const Json doc = Json::parse(slurp(work() / "vc" / "verify.json"));
  CHECK(doc["pass"] == false);
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : fs::directory_iterator(configs)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(Config::load(entry.path().string()));
  }
}
