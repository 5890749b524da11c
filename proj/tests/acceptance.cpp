// Runs the full validation suite and prints one line per acceptance criterion.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "skewdiff/validation.hpp"

int main(int argc, char** argv) {
  using namespace skewdiff;
  const SuiteScale scale = argc > 1 && std::string(argv[1]) == "core" ? SuiteScale::Core : SuiteScale::Full;
  int index = 0;
  const auto report = run_suite(scale, 1, [&](const Check& c) {
    ++index;
    std::printf("ACC%-2d %s  %-24s statistic=%.4g  n=%zu  %.1fs\n", index, c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.statistic, c.n_effective, c.wall_time_s);
    for (const auto& s : c.subs) {
      std::printf("        %s %s: %.4g %s %.4g\n", s.pass ? "ok  " : "FAIL", s.name.c_str(), s.value, s.relation.c_str(), s.bound);
    }
    if (!c.notes.empty()) std::printf("        note: %s\n", c.notes.c_str());
    std::fflush(stdout);
  });
  std::ofstream("acceptance_report.json") << report.to_json().dump(2) << '\n';
  std::printf("%s: %d checks, %.1fs\n", report.all_pass() ? "ALL PASS" : "SOME FAILED", index, report.wall_time_s);
  return report.all_pass() ? EXIT_SUCCESS : EXIT_FAILURE;
}
