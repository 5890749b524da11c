#include "skewdiff/densities.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/io_util.hpp"
#include "skewdiff/quadrature.hpp"

namespace skewdiff {

double log_q_theorem1_tpd(double x, double t, double x0, double t0, double T, Chirality chirality) {
  require(t0 >= 0.0 && t0 < t && t < T, "Theorem-1 density needs 0 <= t0 < t < T");
  const double c = sign(chirality);
  return gaussian_log_pdf(x, x0, t - t0) + log_std_normal_cdf(c * x / std::sqrt(T - t)) -
         log_std_normal_cdf(c * x0 / std::sqrt(T - t0));
}

double q_theorem1_tpd(double x, double t, double x0, double t0, double T, Chirality chirality) {
  return std::exp(log_q_theorem1_tpd(x, t, x0, t0, T, chirality));
}

double q_theorem1(double x, double t, double x0, double T, Chirality chirality) {
  if (!(t > 0.0 && t < T)) {
    std::ostringstream os;
    os << "Theorem-1 density needs 0 < t < T, got t = " << t << ", T = " << T;
    throw DomainError(os.str());
  }
  return q_theorem1_tpd(x, t, x0, 0.0, T, chirality);
}

double q_theorem2(double x, double t, double alpha, Chirality chirality) {
  require(t > 0.0, "Theorem-2 density needs t > 0");
  return sn_pdf(x, SkewNormalParams::from_time_skew(t, sign(chirality) * alpha));
}

double q_class(double x, double t, const SkewFamily& family, double x0) {
  require(t > 0.0, "class density needs t > 0");
  const double a = family.alpha(t);
  return std::exp(std::numbers::ln2 + gaussian_log_pdf(x, x0, t) + log_std_normal_cdf(a * (x - x0)));
}

double q_class_unshifted(double x, double t, const SkewFamily& family, double x0) {
  require(t > 0.0, "class density needs t > 0");
  const double a = family.alpha(t);
  return std::exp(std::numbers::ln2 + gaussian_log_pdf(x, x0, t) + log_std_normal_cdf(a * x));
}

double censored_posterior(double x, double t, double rho_t) {
  require(t > 0.0, "censored posterior needs t > 0");
  require(std::abs(rho_t) < 1.0, "censored posterior needs |rho| < 1 (use the half-Normal law at |rho| = 1)");
  const double k = rho_t / std::sqrt(1.0 - rho_t * rho_t);
  return std::exp(std::numbers::ln2 + gaussian_log_pdf(x, 0.0, t) +
                  log_std_normal_cdf(x / std::sqrt(t) * k));
}

double q_esn_ou(double x, double t, double lambda, double x0, Chirality chirality) {
  require(t > 0.0 && lambda > 0.0, "OU skew density needs t > 0 and lambda > 0");
  const double c = sign(chirality);
  const double em1 = std::expm1(2.0 * lambda * t);
  const double elt = std::exp(lambda * t);
  ExtendedSkewNormalParams p;
  p.location = x0 * elt;
  p.scale = std::sqrt(em1 / (2.0 * lambda));
  p.shape = c * std::sqrt(em1);
  p.truncation = c * std::sqrt(2.0 * lambda) * x0 * elt;
  return esn_pdf(x, p);
}

namespace {

void check_marginal_args(double t, double lambda, double T) {
  require(lambda > 0.0, "OU marginal needs lambda > 0");
  require(t > 0.0 && t < T, "OU marginal needs 0 < t < T");
}

}  // namespace

double p_marginal_ou_sknoise(double x, double t, double lambda, double x0, double T) {
  check_marginal_args(t, lambda, T);
  const double v = -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
  const double k = -std::expm1(-lambda * t) / lambda;
  const double u = x - x0 * std::exp(-lambda * t);
  const double kv = k / v;
  const double s = std::sqrt(T - k * kv);
  return std::exp(std::numbers::ln2 + gaussian_log_pdf(u, 0.0, v) + log_std_normal_cdf(kv * u / s));
}

double p_marginal_ou_sknoise_as_typeset(double x, double t, double lambda, double x0, double T) {
  check_marginal_args(t, lambda, T);
  const double v = -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
  const double u = x - x0 * std::exp(-lambda * t);
  const double a = std::sqrt(2.0 * lambda) / std::sqrt(2.0 * (T - t) * std::expm1(2.0 * lambda * t));
  return std::exp(gaussian_log_pdf(u, 0.0, v) + log_paper_phi_big(a * u));
}

Tpd theorem1_tpd(double T, Chirality chirality) {
  return [T, chirality](double x, double t, double x0, double t0) {
    return q_theorem1_tpd(x, t, x0, t0, T, chirality);
  };
}

Tpd class_tpd(const SkewFamily& family, bool shifted) {
  return [family, shifted](double x, double t, double x0, double t0) {
    const double tau = t - t0;
    require(tau > 0.0, "class tpd needs t > t0");
    const double a = family.alpha(tau);
    const double arg = shifted ? a * (x - x0) : a * x;
    return std::exp(std::numbers::ln2 + gaussian_log_pdf(x, x0, tau) + log_std_normal_cdf(arg));
  };
}

Tpd brownian_tpd() {
  return [](double x, double t, double x0, double t0) { return gaussian_pdf(x, x0, t - t0); };
}

double chapman_kolmogorov_residual(const Tpd& tpd, double x0, double t0, double t1, double t2,
                                   std::span<const double> x2_grid) {
  require(t0 < t1 && t1 < t2, "Chapman-Kolmogorov check needs t0 < t1 < t2");
  const double s = std::sqrt(t2 - t0);
  double worst = 0.0;
  for (double x2 : x2_grid) {
    const double lo = std::min(x0, x2) - 14.0 * s;
    const double hi = std::max(x0, x2) + 14.0 * s;
    std::vector<double> bp{lo, std::min(x0, x2)};
    if (std::abs(x2 - x0) > 1e-3 * s) bp.push_back(std::max(x0, x2));
    bp.push_back(hi);
    auto f = [&](double x1) { return tpd(x2, t2, x1, t1) * tpd(x1, t1, x0, t0); };
    const double composed = integrate_pieces(f, bp, 1e-13, 1e-16).value;
    worst = std::max(worst, std::abs(tpd(x2, t2, x0, t0) - composed));
  }
  return worst;
}

// ---------------------------------------------------------------------------

void DensityGrid::recompute_mass() {
  mass_per_t.resize(t_nodes.size());
  for (std::size_t it = 0; it < t_nodes.size(); ++it) mass_per_t[it] = trapezoid(x_nodes, row(it));
}

DensityGrid::Moments DensityGrid::moments(std::size_t it) const {
  const auto q = row(it);
  const std::size_t n = x_nodes.size();
  std::vector<double> w(n);
  auto integral = [&](auto&& g) {
    for (std::size_t i = 0; i < n; ++i) w[i] = g(x_nodes[i]) * q[i];
    return trapezoid(x_nodes, w);
  };
  Moments m{};
  m.mass = integral([](double) { return 1.0; });
  m.mean = integral([](double x) { return x; }) / m.mass;
  m.variance = integral([&](double x) { return (x - m.mean) * (x - m.mean); }) / m.mass;
  const double m3 = integral([&](double x) { return std::pow(x - m.mean, 3); }) / m.mass;
  m.skewness = m.variance > 0.0 ? m3 / std::pow(m.variance, 1.5) : 0.0;
  return m;
}

nlohmann::json DensityGrid::summary() const {
  auto rows = nlohmann::json::array();
  for (std::size_t it = 0; it < t_nodes.size(); ++it) {
    const auto m = moments(it);
    rows.push_back({{"t", t_nodes[it]},
                    {"mass", m.mass},
                    {"mean", m.mean},
                    {"variance", m.variance},
                    {"skewness", m.skewness}});
  }
  return {{"n_x", x_nodes.size()}, {"n_t", t_nodes.size()}, {"per_t", rows}};
}

DensityGrid tabulate(const std::function<double(double, double)>& q, std::vector<double> xs,
                     std::vector<double> ts) {
  require(!xs.empty() && !ts.empty(), "density grid: empty axis");
  require(std::is_sorted(xs.begin(), xs.end()) && std::is_sorted(ts.begin(), ts.end()),
          "density grid: axes must be ordered");
  DensityGrid g;
  g.x_nodes = std::move(xs);
  g.t_nodes = std::move(ts);
  g.values.resize(g.x_nodes.size() * g.t_nodes.size());
  for (std::size_t it = 0; it < g.t_nodes.size(); ++it) {
    for (std::size_t ix = 0; ix < g.x_nodes.size(); ++ix) {
      g.values[it * g.x_nodes.size() + ix] = q(g.x_nodes[ix], g.t_nodes[it]);
    }
  }
  g.recompute_mass();
  return g;
}

std::vector<double> linspace_step(double lo, double hi, double step) {
  require(step > 0.0 && hi >= lo, "range needs step > 0 and hi >= lo");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = lo + static_cast<double>(i) * step;
  return v;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  require(n >= 2, "linspace needs at least two points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

void write_csv(std::ostream& os, const DensityGrid& g) {
  os << "x,t,q\n";
  for (std::size_t it = 0; it < g.t_nodes.size(); ++it) {
    for (std::size_t ix = 0; ix < g.x_nodes.size(); ++ix) {
      os << format_real(g.x_nodes[ix]) << ',' << format_real(g.t_nodes[it]) << ','
         << format_real(g.at(it, ix)) << '\n';
    }
  }
}

double l1_distance(std::span<const double> x, std::span<const double> p, std::span<const double> q) {
  require(x.size() == p.size() && p.size() == q.size(), "l1_distance: size mismatch");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = std::abs(p[i] - q[i]);
  return trapezoid(x, d);
}

}  // namespace skewdiff
