#include <doctest.h>

#include <cmath>
#include <numbers>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/densities.hpp"
#include "skewdiff/skew_family.hpp"

using namespace skewdiff;
using doctest::Approx;

TEST_CASE("finite-horizon family") {
  const auto f = SkewFamily::theorem1(10.0, Chirality::Right);
  CHECK(f.alpha(9.0) == Approx(1.0).epsilon(1e-15));
  CHECK(f.validity_horizon() == 10.0);
  for (double t : {0.0, 3.0, 9.99}) CHECK(f.psi(t) == 1.0);
  CHECK(f.alpha(10.0 - 1e-10) > 1e4);
  CHECK_THROWS_AS(f.alpha(10.0), DomainError);
  CHECK(SkewFamily::theorem1(10.0, Chirality::Left).alpha(9.0) == -1.0);
}

TEST_CASE("constant-skewness family") {
  const auto f = SkewFamily::theorem2(1.0, Chirality::Right);
  CHECK(f.psi(0.0) == 1.0);
  CHECK(f.psi(1.0) == 0.75);
  CHECK(f.psi(1e12) == Approx(0.5).epsilon(1e-10));
  CHECK(f.alpha(123.0) == 1.0);
  CHECK(f.alpha_dot(2.0) == 0.0);
}

TEST_CASE("constant-correlation family") {
  const auto f = SkewFamily::constant_correlation(1.0 / std::sqrt(2.0), Chirality::Right);
  CHECK(f.alpha(1.0) == Approx(1.0).epsilon(1e-15));
  for (double t : {0.25, 1.0, 9.0}) {
    CHECK(f.psi(t) == 0.5);
    CHECK(std::exp(f.gamma(t)) == Approx(1.0 / std::sqrt(t)).epsilon(1e-14));
  }
  const auto z = SkewFamily::constant_correlation(0.0, Chirality::Right);
  CHECK(z.alpha(2.0) == 0.0);
  CHECK(drift_value(DriftSpec::from_family(z), 0.7, 2.0) == 0.0);
}

TEST_CASE("psi-driven solver reproduces the closed forms") {
  const double T = 2.0;
  const auto grid = linspace(0.01, T, 200);
  const auto s1 = solve_family_from_psi([](double) { return 1.0; }, 1.0 / std::sqrt(T), Chirality::Right, grid);
  const auto th1 = SkewFamily::theorem1(T, Chirality::Right);
  for (double t : linspace(0.01, 0.99 * T, 97)) CHECK(std::abs(s1.alpha(t) - th1.alpha(t)) < 1e-10);

  const auto grid10 = linspace(0.01, 10.0, 200);
  const auto th2 = SkewFamily::theorem2(1.5, Chirality::Left);
  const auto s2 = solve_family_from_psi([&](double t) { return th2.psi(t); }, 1.5, Chirality::Left, grid10);
  for (double t : linspace(0.01, 9.9, 97)) CHECK(std::abs(s2.alpha(t) - th2.alpha(t)) < 1e-8);

  const auto cc = SkewFamily::constant_correlation(0.6, Chirality::Right);
  const auto s3 = solve_family_from_psi([](double) { return 0.5; }, 0.6, Chirality::Right, grid10);
  for (double t : linspace(0.01, 9.9, 97)) CHECK(std::abs(s3.alpha(t) - cc.alpha(t)) < 1e-10);
}

TEST_CASE("psi table interpolation and round trip") {
  const auto psi = psi_from_table({0.0, 1.0, 2.0}, {1.0, 0.8, 0.6});
  CHECK(psi(0.5) == Approx(0.9));
  CHECK(psi(5.0) == Approx(0.6));
  const auto f = solve_family_from_psi(psi, 0.5, Chirality::Right, linspace(0.01, 2.0, 100));
  for (double t : {0.3, 0.9, 1.6}) CHECK(psi_from_alpha(f, t) == Approx(psi(t)).epsilon(1e-6));
  CHECK(std::abs(alpha_ode_residual(f, 0.7)) < 1e-6);
  const auto th2 = SkewFamily::theorem2(1.0, Chirality::Right);
  CHECK(psi_from_alpha(SkewFamily::theorem1(3.0, Chirality::Right), 1.0) == Approx(1.0).epsilon(1e-8));
  CHECK(psi_from_alpha(SkewFamily::constant_correlation(0.4, Chirality::Left), 2.0) == Approx(0.5).epsilon(1e-8));
  (void)th2;
}

TEST_CASE("horizon of a solved family") {
  // psi = 1 with C = 1/sqrt(T) blows up at T.
  const auto f = solve_family_from_psi([](double) { return 1.0; }, 0.5, Chirality::Right, linspace(0.01, 3.0, 50));
  CHECK(f.validity_horizon() == Approx(4.0).epsilon(1e-8));
}

TEST_CASE("alpha ODE residual") {
  // alpha_dot = psi alpha (alpha^2 + 1/t) - alpha/t - alpha^3/2 holds for every family.
  for (const auto& f : {SkewFamily::theorem1(1.0, Chirality::Right), SkewFamily::theorem2(2.0, Chirality::Left),
                        SkewFamily::constant_correlation(0.3, Chirality::Right)}) {
    for (double t : {0.1, 0.4, 0.8}) CHECK(std::abs(alpha_ode_residual(f, t)) < 1e-6);
  }
  // The sign-flipped form alpha_dot + alpha psi (alpha^2 - 1/t) + alpha/t + alpha^3/2 does not vanish.
  const auto f = SkewFamily::theorem2(1.0, Chirality::Right);
  const double t = 1.0;
  const double a = f.alpha(t), psi = f.psi(t);
  CHECK(std::abs(f.alpha_dot(t) + a * psi * (a * a - 1.0 / t) + a / t + 0.5 * a * a * a) > 0.1);
}

TEST_CASE("drift slices") {
  const auto f = SkewFamily::theorem1(1.0, Chirality::Right);
  const auto d = DriftSpec::from_family(f);
  const double t = 0.36;
  CHECK(d.value(0.0, t) == Approx(f.alpha(t) * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  const auto g = DriftSpec::from_family(SkewFamily::theorem2(1.3, Chirality::Right));
  const auto gm = DriftSpec::from_family(SkewFamily::theorem2(1.3, Chirality::Left));
  for (double x : {-2.0, 0.1, 1.5}) CHECK(gm.value(x, 0.8) == Approx(-g.value(-x, 0.8)).epsilon(1e-15));
  CHECK(g.mirrored().value(0.4, 0.8) == Approx(gm.value(0.4, 0.8)).epsilon(1e-15));
  // Far on the unfavoured side the drift grows like -psi alpha^2 x.
  const double x = -50.0;
  const auto fam2 = SkewFamily::theorem2(1.3, Chirality::Right);
  CHECK(g.value(x, 0.8) / (-fam2.psi(0.8) * 1.3 * 1.3 * x) == Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(d.at(1.0), DomainError);
  const auto lin = DriftSpec::linear(-2.0);
  CHECK(lin.value(1.5, 3.0) == -3.0);
}

TEST_CASE("family and drift JSON round trip") {
  for (const auto& f : {SkewFamily::theorem1(3.0, Chirality::Left), SkewFamily::theorem2(0.7, Chirality::Right),
                        SkewFamily::constant_correlation(0.2, Chirality::Right)}) {
    const auto g = SkewFamily::from_json(f.to_json());
    CHECK(g.alpha(0.5) == f.alpha(0.5));
    CHECK(g.psi(0.5) == f.psi(0.5));
  }
  const auto d = DriftSpec::ou_h_transform(1.5, Chirality::Left);
  CHECK(DriftSpec::from_json(d.to_json()).value(0.3, 0.0) == d.value(0.3, 0.0));
  auto bad = SkewFamily::theorem2(1.0, Chirality::Right).to_json();
  bad["surprise"] = 1;
  CHECK_THROWS_AS(SkewFamily::from_json(bad), DomainError);
}
