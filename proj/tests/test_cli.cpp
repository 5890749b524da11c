#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "skewdiff/densities.hpp"

namespace fs = std::filesystem;
using namespace skewdiff;

namespace {

const fs::path kWork = fs::temp_directory_path() / "skewdiff_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(SKEWDIFF_CLI) + " " + args + " > /dev/null 2>&1";
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string dir(const std::string& name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("density grid matches direct evaluation") {
  fs::remove_all(kWork);
  REQUIRE(run("density --kind theorem2 --alpha 1 --t 0.5,1,2 --x -5:5:0.01 -o " + dir("d")) == 0);
  std::ifstream is(kWork / "d" / "density.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,t,q");
  std::size_t rows = 0;
  double worst = 0.0;
  while (std::getline(is, line)) {
    double x, t, q;
    char c1, c2;
    std::stringstream ss(line);
    ss >> x >> c1 >> t >> c2 >> q;
    worst = std::max(worst, std::abs(q - q_theorem2(x, t, 1.0, Chirality::Right)));
    ++rows;
  }
  CHECK(rows == 3 * 1001);
  CHECK(worst == 0.0);
  const auto m = nlohmann::json::parse(slurp(kWork / "d" / "manifest.json"));
  CHECK(m["schema"] == "skewdiff.manifest/1");
  CHECK(m["command"] == "density");
  CHECK(m["parameters"]["alpha"] == 1.0);
  CHECK(m.contains("versions"));
  CHECK(m.contains("wall_time_s"));
}

TEST_CASE("outputs are byte-reproducible") {
  const std::string args = "simulate --kind theorem2 --alpha 1 --paths 300 --steps 200 --t-end 1 --x0 -0.25 ";
  REQUIRE(run(args + "--format binary -o " + dir("s1")) == 0);
  REQUIRE(run(args + "--format binary -o " + dir("s2")) == 0);
  CHECK(slurp(kWork / "s1" / "ensemble.bin") == slurp(kWork / "s2" / "ensemble.bin"));
  REQUIRE(run(args + "--format csv -o " + dir("c1")) == 0);
  REQUIRE(run(args + "--format csv -o " + dir("c2")) == 0);
  CHECK(slurp(kWork / "c1" / "ensemble.csv") == slurp(kWork / "c2" / "ensemble.csv"));
  const auto s = nlohmann::json::parse(slurp(kWork / "s1" / "summary.json"));
  CHECK(s["per_column"].size() == 101);
}

TEST_CASE("config file overrides flags and rejects unknown keys") {
  fs::create_directories(kWork);
  {
    std::ofstream(kWork / "ok.json") << R"({"kind": "censored", "rho": 0.3, "t": [2.0], "x": "-1:1:0.5"})";
  }
  REQUIRE(run("density --kind theorem1 --config " + dir("ok.json") + " -o " + dir("cfg")) == 0);
  const auto m = nlohmann::json::parse(slurp(kWork / "cfg" / "manifest.json"));
  CHECK(m["parameters"]["kind"] == "censored");
  CHECK(m["parameters"]["rho"] == 0.3);
  {
    std::ofstream(kWork / "bad.json") << R"({"kind": "theorem2", "alhpa": 2})";
  }
  CHECK(run("density --config " + dir("bad.json") + " -o " + dir("bad")) == 2);
  CHECK(run("density --no-such-flag 1 -o " + dir("bad")) == 2);
  CHECK(run("density --alpha one -o " + dir("bad")) == 2);
  CHECK(run("density --kind nonsense -o " + dir("bad")) == 2);
  CHECK(run("simulate --chirality 2 -o " + dir("bad")) == 2);
  CHECK(run("density --help") == 0);
}

TEST_CASE("numerical failure writes diagnostics") {
  CHECK(run("fokker-planck --kind linear --theta 0 --dt 0.1 -o " + dir("fp")) == 3);
  CHECK(fs::exists(kWork / "fp" / "diagnostics.json"));
  const auto m = nlohmann::json::parse(slurp(kWork / "fp" / "manifest.json"));
  CHECK(m["exit_status"] == 3);
}

TEST_CASE("other commands run") {
  CHECK(run("family --kind constant_correlation -o " + dir("f")) == 0);
  CHECK(fs::exists(kWork / "f" / "family.csv"));
  CHECK(run("fokker-planck --kind theorem2 --n-x 801 --dt 0.002 -o " + dir("fp2")) == 0);
  const auto s = nlohmann::json::parse(slurp(kWork / "fp2" / "summary.json"));
  CHECK(s["closed_form"].back()["l1_vs_closed_form"].get<double>() < 5e-3);
  CHECK(run("censor --paths 4000 --steps 100 -o " + dir("c")) == 0);
  CHECK(run("mixture --base ou --x0 0.5 --paths 2000 --steps 200 --t-end 1 -o " + dir("m")) == 0);
  CHECK(run("ou --paths 2000 --steps 200 --t-end 1 -o " + dir("o")) == 0);
  const auto o = nlohmann::json::parse(slurp(kWork / "o" / "summary.json"));
  CHECK(o["terminal_ks_vs_marginal"]["below_threshold"] == true);
}
