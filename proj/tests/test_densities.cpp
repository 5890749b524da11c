#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/densities.hpp"
#include "skewdiff/quadrature.hpp"

using namespace skewdiff;
using doctest::Approx;

namespace {

double mass(const std::function<double(double)>& q, double center, double sd) {
  const double bp[] = {center - 14 * sd, center - 2 * sd, center, center + 2 * sd, center + 14 * sd};
  return integrate_pieces(q, bp, 1e-13, 1e-16).value;
}

double first_moment(const std::function<double(double)>& q, double center, double sd) {
  return mass([&](double x) { return x * q(x); }, center, sd);
}

// 40-digit reference values of N(x; x0, t) Phi(x / sqrt(T - t)) / Phi(x0 / sqrt(T)).
struct Q1Ref {
  double x, t, x0, T, value;
};
constexpr Q1Ref kQ1[] = {
    {0.3, 0.5, 0.0, 1.0, 0.6850804202519574842181},
    {-0.4, 0.25, 0.7, 1.0, 0.03014574435198062672534},
    {1.2, 0.9, -0.5, 2.0, 0.2038752937896184123780},
};

}  // namespace

TEST_CASE("finite-horizon density") {
  for (const auto& r : kQ1) CHECK(q_theorem1(r.x, r.t, r.x0, r.T, Chirality::Right) == Approx(r.value).epsilon(1e-13));
  const double T = 2.0, t = 0.7;
  const double a = 1.0 / std::sqrt(T - t);
  for (double x : {-1.0, 0.0, 0.4, 2.5}) {
    CHECK(q_theorem1(x, t, 0.0, T, Chirality::Right) ==
          Approx(sn_pdf(x, SkewNormalParams::from_time_skew(t, a))).epsilon(1e-14));
    CHECK(q_theorem1(x, t, 0.0, T, Chirality::Left) ==
          Approx(sn_pdf(x, SkewNormalParams::from_time_skew(t, -a))).epsilon(1e-14));
  }
  for (double x : {0.2, 1.0, 2.0}) {
    CHECK(q_theorem1(x, T - 1e-9, 0.0, T, Chirality::Right) == Approx(half_normal_pdf(x, T, 0.0, Chirality::Right)).epsilon(1e-6));
  }
  CHECK(q_theorem1(-1.0, T - 1e-9, 0.0, T, Chirality::Right) < 1e-100);
  CHECK(std::abs(mass([&](double x) { return q_theorem1(x, 1.0, 0.7, T, Chirality::Right); }, 0.7, 1.0) - 1.0) < 1e-9);
  CHECK(std::exp(log_q_theorem1_tpd(0.3, 0.8, 0.1, 0.2, 1.0, Chirality::Left)) ==
        Approx(q_theorem1_tpd(0.3, 0.8, 0.1, 0.2, 1.0, Chirality::Left)).epsilon(1e-14));
  CHECK(std::isfinite(log_q_theorem1_tpd(-30.0, 0.99, 0.0, 0.0, 1.0, Chirality::Right)));
}

TEST_CASE("constant-skewness density") {
  for (double x : {-1.0, 0.3}) CHECK(q_theorem2(x, 1.5, 0.0, Chirality::Right) == Approx(gaussian_pdf(x, 0.0, 1.5)).epsilon(1e-15));
  CHECK(q_theorem2(0.5, 1.0, 1.0, Chirality::Right) == Approx(0.4868799147473643934260).epsilon(1e-14));
  for (double x : {-2.0, 0.1, 1.4}) CHECK(q_theorem2(x, 0.7, 1.3, Chirality::Right) == Approx(q_theorem2(-x, 0.7, 1.3, Chirality::Left)).epsilon(1e-15));
  const auto g = tabulate([](double x, double t) { return q_theorem2(x, t, 1.0, Chirality::Right); }, linspace(-12, 12, 24001), {1.0});
  const auto m = g.moments(0);
  const auto ref = sn_moments({0.0, 1.0, 1.0});
  CHECK(m.mass == Approx(1.0).epsilon(1e-9));
  CHECK(m.mean == Approx(ref.mean).epsilon(1e-7));
  CHECK(m.skewness == Approx(ref.skewness).epsilon(1e-5));
}

TEST_CASE("class densities") {
  const auto f2 = SkewFamily::theorem2(1.7, Chirality::Left);
  for (double x : {-1.0, 0.5}) CHECK(q_class(x, 0.6, f2, 0.0) == Approx(q_theorem2(x, 0.6, 1.7, Chirality::Left)).epsilon(1e-14));
  const auto f1 = SkewFamily::theorem1(1.0, Chirality::Right);
  for (double x : {-1.0, 0.5}) CHECK(q_class(x, 0.6, f1, 0.0) == Approx(q_theorem1(x, 0.6, 0.0, 1.0, Chirality::Right)).epsilon(1e-14));
  for (double x0 : {-2.0, 1.5}) {
    CHECK(std::abs(mass([&](double x) { return q_class(x, 1.0, f2, x0); }, x0, 1.0) - 1.0) < 1e-9);
  }
  CHECK(std::abs(mass([&](double x) { return q_class_unshifted(x, 1.0, SkewFamily::theorem2(1.0, Chirality::Right), 1.5); }, 1.5, 1.0) - 1.0) > 1e-3);
}

TEST_CASE("censored posterior") {
  for (double x : {-1.0, 0.2}) CHECK(censored_posterior(x, 0.8, 0.0) == Approx(gaussian_pdf(x, 0.0, 0.8)).epsilon(1e-15));
  const double T = 1.0;
  for (double t : {0.25, 0.5, 0.9}) {
    for (double x : {-0.7, 0.0, 1.1}) {
      CHECK(censored_posterior(x, t, std::sqrt(t / T)) == Approx(q_theorem1(x, t, 0.0, T, Chirality::Right)).epsilon(1e-13));
    }
  }
  CHECK(std::abs(mass([](double x) { return censored_posterior(x, 0.7, 0.6); }, 0.0, std::sqrt(0.7)) - 1.0) < 1e-9);
  CHECK_THROWS_AS(censored_posterior(0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("OU skew density") {
  const double lam = 0.8, t = 0.9;
  const double s2 = std::expm1(2 * lam * t) / (2 * lam);
  for (double x : {-1.0, 0.0, 2.0}) {
    CHECK(q_esn_ou(x, t, lam, 0.0, Chirality::Right) ==
          Approx(sn_pdf(x, {0.0, std::sqrt(s2), std::sqrt(std::expm1(2 * lam * t))})).epsilon(1e-14));
  }
  // Small lambda: the law tends to N(x0, t).
  for (double x : {-1.0, 0.3, 1.5}) CHECK(std::abs(q_esn_ou(x, t, 1e-9, 0.3, Chirality::Right) - gaussian_pdf(x, 0.3, t)) < 1e-4);
  for (double x0 : {-0.6, 0.0, 0.9}) {
    const double m = x0 * std::exp(lam * t);
    CHECK(std::abs(mass([&](double x) { return q_esn_ou(x, t, lam, x0, Chirality::Left); }, m, std::sqrt(s2)) - 1.0) < 1e-9);
  }
}

TEST_CASE("marginal of an OU driven by skew noise") {
  const double lam = 1.0, T = 2.0, t = 1.0;
  for (double x0 : {0.0, 0.5}) {
    const auto q = [&](double x) { return p_marginal_ou_sknoise(x, t, lam, x0, T); };
    CHECK(std::abs(mass(q, x0, 1.0) - 1.0) < 1e-8);
    // E[X_t] = x0 e^{-lambda t} + sqrt(2/pi) (1 - e^{-lambda t}) / (lambda sqrt T)
    const double mean = x0 * std::exp(-lam * t) + std::sqrt(2.0 / std::numbers::pi) * (1.0 - std::exp(-lam * t)) / (lam * std::sqrt(T));
    CHECK(first_moment(q, x0, 1.0) == Approx(mean).epsilon(1e-9));
  }
  const double v = -std::expm1(-2.0 * lam * t) / (2.0 * lam);
  CHECK(p_marginal_ou_sknoise(0.0, t, lam, 0.0, T) == Approx(1.0 / std::sqrt(2 * std::numbers::pi * v)).epsilon(1e-14));
  double worst = 0.0;
  for (double x : linspace(-4, 4, 81)) worst = std::max(worst, std::abs(p_marginal_ou_sknoise(x, t, 1e-4, 0.0, T) - q_theorem1(x, t, 0.0, T, Chirality::Right)));
  CHECK(worst < 1e-3);
  const double printed = mass([&](double x) { return p_marginal_ou_sknoise_as_typeset(x, t, lam, 0.0, T); }, 0.0, 1.0);
  CHECK(std::abs(printed - 1.0) > 0.1);
}

TEST_CASE("Chapman-Kolmogorov") {
  const auto xs = linspace(-3, 3, 31);
  CHECK(chapman_kolmogorov_residual(brownian_tpd(), 0.3, 0.2, 0.5, 0.8, xs) < 1e-10);
  CHECK(chapman_kolmogorov_residual(theorem1_tpd(1.0, Chirality::Right), 0.3, 0.2, 0.5, 0.8, xs) < 1e-8);
  CHECK(chapman_kolmogorov_residual(theorem1_tpd(1.0, Chirality::Left), -0.5, 0.0, 0.4, 0.9, xs) < 1e-8);
  CHECK(chapman_kolmogorov_residual(class_tpd(SkewFamily::theorem2(1.0, Chirality::Right), false), 1.5, 0.2, 0.5, 0.8, xs) > 1e-3);
}

TEST_CASE("density grids") {
  const auto xs = linspace_step(-5, 5, 0.01);
  CHECK(xs.size() == 1001);
  CHECK(xs.back() == 5.0);
  const auto g = tabulate([](double x, double t) { return q_theorem2(x, t, 1.0, Chirality::Right); }, xs, {0.5, 1.0, 2.0});
  CHECK(g.at(1, 600) == q_theorem2(xs[600], 1.0, 1.0, Chirality::Right));
  CHECK(g.mass_per_t[0] == Approx(1.0).epsilon(1e-6));
  CHECK(g.mass_per_t[1] == Approx(1.0).epsilon(1e-5));
  std::stringstream os;
  write_csv(os, g);
  std::string line;
  std::getline(os, line);
  CHECK(line == "x,t,q");
  std::getline(os, line);
  CHECK(line.rfind("-5,0.5,", 0) == 0);
  CHECK(l1_distance(xs, g.row(0), g.row(0)) == 0.0);
  CHECK_THROWS_AS(tabulate([](double, double) { return 0.0; }, {1.0, 0.0}, {1.0}), DomainError);
}
