#pragma once

// Closed-form transition and marginal densities, and grids of them.

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "skewdiff/skew_family.hpp"

namespace skewdiff {

/// Q(x, t | x0, t0).
using Tpd = std::function<double(double x, double t, double x0, double t0)>;

/// Gaussian(x0, t) times Phi(c x / sqrt(T - t)) / Phi(c x0 / sqrt T).
double q_theorem1(double x, double t, double x0, double T, Chirality chirality);
/// The same h-ratio between arbitrary times t0 < t < T.
double q_theorem1_tpd(double x, double t, double x0, double t0, double T, Chirality chirality);
double log_q_theorem1_tpd(double x, double t, double x0, double t0, double T, Chirality chirality);

/// SN(0, sqrt t, c alpha sqrt t).
double q_theorem2(double x, double t, double alpha, Chirality chirality);

/// (1/(pi sqrt t)) e^{-(x-x0)^2/2t} int^{alpha_t (x - x0)}: the shifted density.
double q_class(double x, double t, const SkewFamily& family, double x0);
/// Same Gaussian factor but the skew factor evaluated at alpha_t x.
double q_class_unshifted(double x, double t, const SkewFamily& family, double x0);

/// 2 phi_t(x) Phi((x / sqrt t) rho / sqrt(1 - rho^2)).
double censored_posterior(double x, double t, double rho_t);

/// ESN(m, s, shape, tau) with m = x0 e^{lt}, s^2 = (e^{2lt} - 1)/(2l),
/// shape = c sqrt(e^{2lt} - 1), tau = c sqrt(2l) x0 e^{lt}.
double q_esn_ou(double x, double t, double lambda, double x0, Chirality chirality);

/// Marginal of X in dX = -lambda X dt + dZ with Z the finite-horizon skew
/// diffusion started at 0:
/// 2 g_v(u) Phi((k/v) u / sqrt(T - k^2/v)), u = x - x0 e^{-lt},
/// v = (1 - e^{-2lt})/(2l), k = (1 - e^{-lt})/l.
double p_marginal_ou_sknoise(double x, double t, double lambda, double x0, double T);
/// OU Gaussian times int_{-inf}^{a u} e^{-s^2/2} ds with
/// a = sqrt(2l) / sqrt(2 (T - t)(e^{2lt} - 1)), exactly as printed.
double p_marginal_ou_sknoise_as_typeset(double x, double t, double lambda, double x0, double T);

/// Theorem-1 h-ratio as a general tpd.
Tpd theorem1_tpd(double T, Chirality chirality);
/// Class density as a tpd with elapsed time tau = t - t0 in place of t;
/// shifted uses alpha_tau (x - x0), unshifted alpha_tau x.
Tpd class_tpd(const SkewFamily& family, bool shifted);
Tpd brownian_tpd();

/// sup over x2 of |Q(x2,t2|x0,t0) - int Q(x2,t2|x1,t1) Q(x1,t1|x0,t0) dx1|.
double chapman_kolmogorov_residual(const Tpd& tpd, double x0, double t0, double t1, double t2,
                                   std::span<const double> x2_grid);

struct DensityGrid {
  std::vector<double> x_nodes;
  std::vector<double> t_nodes;
  /// Row-major |t| x |x|.
  std::vector<double> values;
  std::vector<double> mass_per_t;

  double at(std::size_t it, std::size_t ix) const { return values[it * x_nodes.size() + ix]; }
  std::span<const double> row(std::size_t it) const {
    return {values.data() + it * x_nodes.size(), x_nodes.size()};
  }
  void recompute_mass();

  struct Moments {
    double mass, mean, variance, skewness;
  };
  Moments moments(std::size_t it) const;

  nlohmann::json summary() const;
};

DensityGrid tabulate(const std::function<double(double, double)>& q, std::vector<double> xs,
                     std::vector<double> ts);

/// lo, lo+step, ... up to hi (inclusive within half a step).
std::vector<double> linspace_step(double lo, double hi, double step);
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Columns x, t, q.
void write_csv(std::ostream& os, const DensityGrid& g);

double l1_distance(std::span<const double> x, std::span<const double> p, std::span<const double> q);

}  // namespace skewdiff
