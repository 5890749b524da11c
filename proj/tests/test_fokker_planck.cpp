#include <doctest.h>

#include <cmath>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/densities.hpp"
#include "skewdiff/fokker_planck.hpp"
#include "skewdiff/ou_skew.hpp"

using namespace skewdiff;

namespace {

double terminal_l1(const DriftSpec& d, double x0, const TimeGrid& grid, const FpConfig& cfg,
                   const std::function<double(double, double)>& exact) {
  const auto g = solve_kfe(d, 1.0, x0, grid, cfg);
  const std::size_t last = g.t_nodes.size() - 1;
  std::vector<double> ref(g.x_nodes.size());
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = exact(g.x_nodes[i], g.t_nodes[last]);
  return l1_distance(g.x_nodes, g.row(last), ref);
}

}  // namespace

TEST_CASE("forward solver against closed forms") {
  FpConfig cfg;
  const TimeGrid grid{0.0, 1.0, 10000, 0.0};
  CHECK(terminal_l1(DriftSpec::linear(0.0), 0.0, grid, cfg, [](double x, double t) { return gaussian_pdf(x, 0.0, t); }) < 1e-4);
  CHECK(terminal_l1(DriftSpec::linear(-1.0), 0.5, grid, cfg, [](double x, double t) { return ou_stationary_tpd(x, t, 0.5, 1.0); }) < 5e-4);
  CHECK(terminal_l1(DriftSpec::from_family(SkewFamily::theorem2(1.0, Chirality::Right)), 0.0, grid, cfg,
                    [](double x, double t) { return q_theorem2(x, t, 1.0, Chirality::Right); }) < 5e-3);
}

TEST_CASE("second-order convergence in dx") {
  const TimeGrid grid{0.0, 1.0, 2000, 0.0};
  auto heat = [](double x, double t) { return gaussian_pdf(x, 0.0, t); };
  FpConfig coarse;
  coarse.n_x = 201;
  FpConfig fine;
  fine.n_x = 401;
  const double e1 = terminal_l1(DriftSpec::linear(0.0), 0.0, grid, coarse, heat);
  const double e2 = terminal_l1(DriftSpec::linear(0.0), 0.0, grid, fine, heat);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("solver diagnostics and failure modes") {
  FpConfig cfg;
  cfg.n_x = 401;
  FpDiagnostics diag;
  const auto g = solve_kfe(DriftSpec::from_family(SkewFamily::theorem2(1.0, Chirality::Left)), 1.0, 0.0,
                           TimeGrid{0.0, 1.0, 1000, 0.0}, cfg, &diag);
  CHECK(diag.max_mass_drift < 1e-12);
  CHECK(diag.min_value > -1e-12);
  for (double m : g.mass_per_t) CHECK(std::abs(m - 1.0) < 1e-6);

  FpConfig explicit_cfg;
  explicit_cfg.theta = 0.0;
  CHECK_THROWS_AS(solve_kfe(DriftSpec::linear(0.0), 1.0, 0.0, TimeGrid{0.0, 1.0, 10, 0.0}, explicit_cfg), NumericalError);
  CHECK_THROWS_AS(solve_kfe(DriftSpec::linear(0.0), 1.0, 20.0, TimeGrid{0.0, 1.0, 10, 0.0}, cfg), DomainError);
  CHECK_THROWS_AS(solve_kfe(DriftSpec::from_family(SkewFamily::theorem1(1.0, Chirality::Right)), 1.0, 0.0,
                            TimeGrid{0.0, 1.0, 10, 0.0}, cfg),
                  DomainError);
}

TEST_CASE("backward residual of the Brownian h") {
  const auto xs = linspace(-3, 3, 101);
  const auto ts = linspace(0.0, 0.95, 101);
  const auto f = SkewFamily::theorem1(1.0, Chirality::Right);
  CHECK(backward_residual_brownian_h(f, xs, ts) < 1e-12);
  const double x0[] = {0.0};
  CHECK(backward_residual_brownian_h([](double t) { return 1.01 / std::sqrt(1.0 - t); },
                                     [](double t) { return 0.505 * std::pow(1.0 - t, -1.5); }, x0, ts) == 0.0);
  CHECK(backward_residual_brownian_h([](double t) { return 1.01 / std::sqrt(1.0 - t); },
                                     [](double t) { return 0.505 * std::pow(1.0 - t, -1.5); }, xs, ts) > 1e-3);
  CHECK_THROWS_AS(backward_residual_brownian_h(SkewFamily::theorem2(1.0, Chirality::Right), xs, ts), DomainError);
}

TEST_CASE("backward residual of the OU h") {
  const auto xs = linspace(-3, 3, 101);
  const auto ts = linspace(0.0, 2.0, 101);
  const double rp = backward_residual_ou_h(1.0, Chirality::Right, xs, ts);
  const double rm = backward_residual_ou_h(1.0, Chirality::Left, xs, ts);
  CHECK(rp < 1e-10);
  CHECK(rm < 1e-10);
  CHECK(backward_residual_ou_h(1.0, Chirality::Right, xs, ts, false) > 1e-2);
}
