#include <doctest.h>

#include <cmath>
#include <numbers>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/quadrature.hpp"

using namespace skewdiff;
using doctest::Approx;

// Reference values computed once with 40-digit arithmetic.
namespace ref {
constexpr double kPhi1 = 0.8413447460685429485852;
constexpr double kLogMills0 = -0.2257913526447274323631;
constexpr double kMillsMinus30 = 30.03325966743367703707;
constexpr double kSnShape1Mean = 0.5641895835477562869481;
constexpr double kSnShape1Var = 0.6816901138162093284622;
constexpr double kSnShape1Skew = 0.1369487673116525317694;
}  // namespace ref

TEST_CASE("standard normal cdf") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(40.0) == 1.0);
  CHECK(std_normal_cdf(1.0) == Approx(ref::kPhi1).epsilon(1e-15));
  CHECK(std::exp(log_std_normal_cdf(1.0)) == Approx(ref::kPhi1).epsilon(1e-15));
  CHECK(std::isfinite(log_std_normal_cdf(-40.0)));
}

TEST_CASE("inverse Mills ratio") {
  CHECK(log_mills(0.0) == Approx(ref::kLogMills0).epsilon(1e-14));
  CHECK(mills(0.0) == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  CHECK(mills(-30.0) == Approx(ref::kMillsMinus30).epsilon(1e-13));
  // -x - 1/x + 2/x^3 - 10/x^5 + 74/x^7 at x = -30
  const double x = -30.0;
  const double series = -x - 1.0 / x + 2.0 / (x * x * x) - 10.0 / std::pow(x, 5) + 74.0 / std::pow(x, 7);
  CHECK(std::abs(mills(x) - series) < 1e-10);
  for (double y : {-1e3, -1e5, -1e8}) CHECK(std::abs(log_mills(y) - std::log(-y)) < 1e-5);
  CHECK(mills(50.0) < 1e-300);
  CHECK(std::isfinite(log_mills(-1e10)));
}

TEST_CASE("skew-Normal pdf") {
  for (double x : {-2.0, -0.3, 0.0, 1.7}) {
    CHECK(sn_pdf(x, {0.0, 1.0, 0.0}) == Approx(std_normal_pdf(x)).epsilon(1e-15));
  }
  for (double a : {-5.0, 0.5, 3.0}) CHECK(sn_pdf(0.0, {0.0, 1.0, a}) == Approx(kInvSqrt2Pi).epsilon(1e-15));
  const SkewNormalParams p{0.3, 1.7, 4.0};
  const double bp[] = {0.3 - 12 * 1.7, 0.3, 0.3 + 12 * 1.7};
  CHECK(std::abs(integrate_pieces([&](double x) { return sn_pdf(x, p); }, bp).value - 1.0) < 1e-10);
  CHECK(std::exp(sn_log_pdf(-50.0, p)) == sn_pdf(-50.0, p));
  CHECK(std::isfinite(sn_log_pdf(-50.0, p)));
  CHECK_THROWS_AS(sn_pdf(0.0, {0.0, -1.0, 0.0}), DomainError);
}

TEST_CASE("skew-Normal moments") {
  const auto m0 = sn_moments({1.5, 2.0, 0.0});
  CHECK(m0.mean == 1.5);
  CHECK(m0.variance == Approx(4.0));
  CHECK(m0.skewness == 0.0);
  const auto m1 = sn_moments({0.0, 1.0, 1.0});
  CHECK(m1.mean == Approx(ref::kSnShape1Mean).epsilon(1e-14));
  CHECK(m1.variance == Approx(ref::kSnShape1Var).epsilon(1e-14));
  CHECK(m1.skewness == Approx(ref::kSnShape1Skew).epsilon(1e-12));
  const auto big = sn_moments({0.2, 3.0, 1e8});
  CHECK(big.mean == Approx(0.2 + 3.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("extended skew-Normal pdf") {
  const ExtendedSkewNormalParams e0{0.4, 1.3, 2.5, 0.0};
  for (double x : {-1.0, 0.4, 2.0}) {
    CHECK(std::abs(esn_pdf(x, e0) - sn_pdf(x, {0.4, 1.3, 2.5})) < 1e-14);
  }
  CHECK(esn_pdf(0.7, {0.0, 1.0, 0.0, 3.0}) == Approx(std_normal_pdf(0.7)).epsilon(1e-14));
  const ExtendedSkewNormalParams e{-0.5, 0.8, -3.0, 1.2};
  const double bp[] = {-0.5 - 12 * 0.8, -0.5, -0.5 + 12 * 0.8};
  CHECK(std::abs(integrate_pieces([&](double x) { return esn_pdf(x, e); }, bp).value - 1.0) < 1e-9);
  // Very negative truncation stays finite and normalized; the mass sits near 12.
  const ExtendedSkewNormalParams far{0.0, 1.0, 2.0, -30.0};
  const double bp2[] = {0.0, 10.0, 12.0, 14.0, 25.0};
  CHECK(std::abs(integrate_pieces([&](double x) { return esn_pdf(x, far); }, bp2).value - 1.0) < 1e-8);
}

TEST_CASE("half-Normal pdf") {
  const double v = 2.0;
  CHECK(half_normal_pdf(0.0, v, 0.0, Chirality::Right) == Approx(std::sqrt(2.0 / (std::numbers::pi * v))));
  CHECK(half_normal_pdf(-0.1, v, 0.0, Chirality::Right) == 0.0);
  CHECK(half_normal_pdf(0.1, v, 0.0, Chirality::Left) == 0.0);
  const double m = integrate([&](double x) { return half_normal_pdf(x, v, 1.0, Chirality::Right); }, 1.0, 1.0 + 12 * std::sqrt(v)).value;
  CHECK(std::abs(m - 1.0) < 1e-10);
}

TEST_CASE("unnormalized Gaussian integral") {
  CHECK(paper_phi_big(0.0) == Approx(std::sqrt(2.0 * std::numbers::pi) / 2.0).epsilon(1e-15));
  CHECK(paper_phi_big(40.0) == Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(paper_phi_big(1.0) == Approx(std::sqrt(2.0 * std::numbers::pi) * ref::kPhi1).epsilon(1e-15));
  CHECK(std::exp(log_paper_phi_big(-3.0)) == Approx(paper_phi_big(-3.0)).epsilon(1e-14));
}

TEST_CASE("time-indexed skew-Normal parameters") {
  const auto p = SkewNormalParams::from_time_skew(4.0, 0.5, 1.0);
  CHECK(p.location == 1.0);
  CHECK(p.scale == 2.0);
  CHECK(p.shape == 1.0);
}
