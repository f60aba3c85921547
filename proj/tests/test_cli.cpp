#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("PIPLUS_KIT_BIN");
  REQUIRE_MESSAGE(b != nullptr, "PIPLUS_KIT_BIN must point at the CLI binary");
  return b;
}

std::string scenario_dir() {
  const char* d = std::getenv("PIPLUS_SCENARIO_DIR");
  REQUIRE_MESSAGE(d != nullptr, "PIPLUS_SCENARIO_DIR must point at the scenario files");
  return d;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("piplus_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("run on the lq scenario succeeds and writes artifacts") {
  const fs::path out = temp_dir("lq");
  const int code = run(bin() + " run --scenario " + scenario_dir() + "/lq.toml --iters 3 --out " +
                       out.string());
  CHECK(code == 0);
  CHECK(fs::exists(out / "config_echo.toml"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "trace_0.csv"));
  CHECK(fs::exists(out / "trace_3.csv"));
}

TEST_CASE("identical runs produce byte-identical artifacts") {
  const fs::path out_a = temp_dir("rep_a");
  const fs::path out_b = temp_dir("rep_b");
  const std::string base = bin() + " run --scenario " + scenario_dir() +
                           "/lq.toml --iters 2 --seed 3 --out ";
  REQUIRE(run(base + out_a.string()) == 0);
  REQUIRE(run(base + out_b.string()) == 0);
  for (const char* name : {"trace_0.csv", "trace_1.csv", "trace_2.csv", "config_echo.toml"}) {
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }
}

TEST_CASE("iteration budget zero emits only the initial table") {
  const fs::path out = temp_dir("zero");
  const int code = run(bin() + " run --scenario " + scenario_dir() +
                       "/lq.toml --iters 0 --out " + out.string());
  CHECK(code == 0);  // monotonicity is trivially satisfied
  CHECK(fs::exists(out / "trace_0.csv"));
  CHECK_FALSE(fs::exists(out / "trace_1.csv"));
}

TEST_CASE("adversarial pi on the counterexample exits with the diagnostic code") {
  const fs::path out = temp_dir("cx_pi");
  const int code = run(bin() + " run --scenario " + scenario_dir() +
                       "/counterexample.toml --algo pi --select adversarial --out " +
                       out.string());
  CHECK(code == 4);
  CHECK(fs::exists(out / "lsc_gap_report.json"));
  const std::string report = slurp(out / "lsc_gap_report.json");
  CHECK(report.find("\"stable\": true") != std::string::npos);
}

TEST_CASE("config errors exit with code 2") {
  const fs::path out = temp_dir("bad");
  const fs::path bad = out / "bad.toml";
  {
    std::ofstream os(bad);
    os << "[model]\nid = \"lq\"\nunknown_key = 3\n";
  }
  CHECK(run(bin() + " run --scenario " + bad.string() + " --out " + out.string()) == 2);
  CHECK(run(bin() + " run --scenario " + (out / "missing.toml").string()) == 2);
}

TEST_CASE("bounds emits the lattice with the stopping iteration header") {
  const fs::path out = temp_dir("bounds");
  const int code = run(bin() + " bounds --scenario " + scenario_dir() + "/lq.toml --out " +
                       out.string());
  CHECK(code == 0);
  const std::string csv = slurp(out / "bounds.csv");
  CHECK(csv.find("# i_star = ") != std::string::npos);
  CHECK(csv.find("s,k,beta,near_opt") != std::string::npos);
  // The s = 0 rows are all zero.
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);  // header comment
  std::getline(ss, line);  // column header
  int zero_rows = 0;
  while (std::getline(ss, line) && zero_rows < 41) {
    CHECK(line.rfind("0,", 0) == 0);
    CHECK(line.find(",0,") != std::string::npos);
    ++zero_rows;
  }
  CHECK(zero_rows == 41);
}

TEST_CASE("demo-counterexample runs clean") {
  const fs::path out = temp_dir("demo");
  CHECK(run(bin() + " demo-counterexample --out " + out.string()) == 0);
  CHECK(fs::exists(out / "objective_curve.csv"));
  CHECK(fs::exists(out / "counterexample_report.json"));
  const std::string report = slurp(out / "counterexample_report.json");
  CHECK(report.find("\"gap_stable\": true") != std::string::npos);
}
