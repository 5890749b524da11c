#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/rng.hpp"
#include "skewdiff/sde_engine.hpp"
#include "skewdiff/validation.hpp"

using namespace skewdiff;
using doctest::Approx;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

SimConfig cfg(std::size_t n, std::uint64_t seed = 7) {
  SimConfig c;
  c.n_paths = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  const auto a = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(a == Philox4x32Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const auto b = philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  CHECK(b == Philox4x32Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  const auto c = philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  CHECK(c == Philox4x32Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniforms are open on both ends") {
  CHECK(u01_open(0, 0) > 0.0);
  CHECK(u01_open(0xffffffff, 0xffffffff) < 1.0);
  PathNoise n(3, 5, 0);
  CHECK(n.normal(0) == n.normal_pair(0)[0]);
  CHECK(n.normal(3) == n.normal_pair(1)[1]);
}

TEST_CASE("zero drift gives Brownian variance") {
  const std::size_t n = 20000;
  const auto e = simulate(DriftSpec::linear(0.0), 0.0, TimeGrid{0.0, 2.0, 200, 0.0}, cfg(n));
  const auto v = variance(e.terminal());
  CHECK(std::abs(v - 2.0) < 3.0 * std::sqrt(2.0 / n) * 2.0);
  CHECK(e.n_columns() == 201);
  CHECK(e.time_of(e.n_columns() - 1) == Approx(2.0));
}

TEST_CASE("finite-horizon drift ends mostly on its favoured side") {
  const double T = 1.0;
  auto c = cfg(4000);
  c.record_every = 10000;
  const auto e = simulate(DriftSpec::from_family(SkewFamily::theorem1(T, Chirality::Right)), 0.0,
                          TimeGrid::up_to_horizon(T, 10000, 1e-4), c);
  const auto term = e.terminal();
  const double neg = static_cast<double>(std::count_if(term.begin(), term.end(), [](double x) { return x < 0.0; })) / term.size();
  CHECK(neg < 0.02);
  CHECK(e.clamp_fraction() < 1e-3);
}

TEST_CASE("constant-skewness terminal mean") {
  const std::size_t n = 20000;
  auto c = cfg(n, 1);
  c.record_every = 1000;
  const auto e = simulate(DriftSpec::from_family(SkewFamily::theorem2(1.0, Chirality::Right)), 0.0,
                          TimeGrid{0.0, 1.0, 1000, 0.0}, c);
  const auto m = sn_moments(SkewNormalParams::from_time_skew(1.0, 1.0));
  const auto term = e.terminal();
  CHECK(std::abs(mean(term) - m.mean) < 3.0 * std::sqrt(variance(term) / n));
}

TEST_CASE("ensembles are reproducible across thread counts") {
  const auto d = DriftSpec::from_family(SkewFamily::theorem2(1.0, Chirality::Right));
  const TimeGrid g{0.0, 1.0, 100, 0.0};
  setenv("SKEWDIFF_THREADS", "1", 1);
  const auto a = simulate(d, 0.2, g, cfg(257));
  setenv("SKEWDIFF_THREADS", "5", 1);
  const auto b = simulate(d, 0.2, g, cfg(257));
  unsetenv("SKEWDIFF_THREADS");
  CHECK(a.values == b.values);
  const auto c = simulate(d, 0.2, g, cfg(257, 8));
  CHECK(a.values != c.values);
}

TEST_CASE("antithetic pairs mirror the noise") {
  auto c = cfg(10);
  c.antithetic = true;
  const auto e = simulate(DriftSpec::linear(0.0), 0.0, TimeGrid{0.0, 1.0, 10, 0.0}, c);
  for (std::size_t i = 0; i < 10; i += 2) CHECK(e.at(i, 10) == -e.at(i + 1, 10));
}

TEST_CASE("NaN drift is reported with its location") {
  const auto d = DriftSpec::custom([](double x, double) { return x > 1.0 ? NAN : 0.0; });
  CHECK_THROWS_AS(simulate(d, 0.0, TimeGrid{0.0, 100.0, 1000, 0.0}, cfg(50)), NumericalError);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(simulate(DriftSpec::linear(0.0), 0.0, TimeGrid{1.0, 0.5, 10, 0.0}, cfg(10)), DomainError);
  CHECK_THROWS_AS(simulate(DriftSpec::linear(0.0), 0.0, TimeGrid{0.0, 1.0, 10, 0.0}, cfg(0)), DomainError);
  const auto d = DriftSpec::from_family(SkewFamily::theorem1(1.0, Chirality::Right));
  CHECK_THROWS_AS(simulate(d, 0.0, TimeGrid{0.0, 1.5, 10, 0.0}, cfg(10)), DomainError);
}

TEST_CASE("bivariate censoring pair") {
  const TimeGrid g{0.0, 1.0, 200, 0.0};
  const std::size_t n = 20000;
  const auto [x0, y0] = simulate_bivariate_censoring([](double) { return 0.0; }, g, cfg(n));
  const auto a = x0.terminal(), b = y0.terminal();
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) cov += a[i] * b[i];
  const double corr = cov / n / std::sqrt(variance(a) * variance(b));
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));

  const auto [x1, y1] = simulate_bivariate_censoring([](double) { return 1.0; }, g, cfg(100));
  CHECK(x1.values == y1.values);

  const auto [x2, y2] = simulate_bivariate_censoring([](double t) { return std::sqrt(t); }, g, cfg(n));
  const auto yq = y2.column(y2.column_at(0.25));
  CHECK(std::abs(variance(yq) - 0.25) < 3.0 * std::sqrt(2.0 / n) * 0.25);
}

TEST_CASE("mixture sampling") {
  const auto mp = mixture_probability(0.0, 1.0);
  CHECK(mp.p_plus == 0.5);
  CHECK(mp.p_minus == 0.5);
  CHECK(mixture_probability(1.0, 1.0).p_plus == Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(mixture_probability(40.0, 1.0).p_plus == 1.0);

  const auto plus = DriftSpec::from_family(SkewFamily::theorem2(1.0, Chirality::Right));
  const TimeGrid g{0.0, 1.0, 100, 0.0};
  const auto e = simulate_mixture(plus, plus.mirrored(), 1.0, 0.0, g, cfg(300));
  const auto s = simulate(plus, 0.0, g, cfg(300));
  CHECK(e.values == s.values);
  for (int l : e.labels) CHECK(l == 1);

  const auto h = simulate_mixture(plus, plus.mirrored(), 0.3, 0.0, g, cfg(20000));
  const double fp = std::count(h.labels.begin(), h.labels.end(), 1) / 20000.0;
  CHECK(std::abs(fp - 0.3) < 3.0 * std::sqrt(0.21 / 20000.0));
}

TEST_CASE("binary and CSV output") {
  auto c = cfg(7);
  c.record_every = 3;
  const auto e = simulate(DriftSpec::from_family(SkewFamily::theorem2(2.0, Chirality::Left)), 0.5,
                          TimeGrid{0.0, 1.0, 10, 0.0}, c);
  CHECK(e.steps == std::vector<std::size_t>{0, 3, 6, 9, 10});
  std::stringstream bin;
  write_binary(bin, e);
  const auto r = read_binary(bin);
  CHECK(r.values == e.values);
  CHECK(r.steps == e.steps);
  CHECK(r.n_paths == e.n_paths);
  CHECK(r.seed == e.seed);
  std::stringstream bad("SKDX");
  CHECK_THROWS(read_binary(bad));

  std::stringstream csv;
  write_csv(csv, e);
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("# skewdiff ensemble v1", 0) == 0);
  std::getline(csv, line);
  CHECK(line.rfind("path,t=0", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 7);
}
