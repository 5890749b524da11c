#pragma once

// Statistics (KS, KL, martingale means, Girsanov energy) and the check suite.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewdiff/densities.hpp"
#include "skewdiff/sde_engine.hpp"

namespace skewdiff {

/// sup |F_n - F|. Throws on NaN samples or fewer than 100 of them.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Limiting Kolmogorov distribution P(K <= k).
double kolmogorov_cdf(double k);
double kolmogorov_quantile(double p);
/// kolmogorov_quantile(0.99) / sqrt(n).
double ks_threshold_99(std::size_t n);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct MartingalePoint {
  double t;
  McEstimate estimate;
};

/// Sample mean of h(X_t, t) / h(x0, t0) per requested column (all columns if empty).
/// The paths must come from the base measure of h.
std::vector<MartingalePoint> martingale_mean(const std::function<double(double, double)>& h,
                                             const PathEnsemble& paths, double x0,
                                             std::vector<std::size_t> columns = {});

enum class KlOrientation {
  /// int p log(p / q)
  Forward,
  /// int q log(q / p)
  Reverse,
};

/// Trapezoid KL on a shared grid, row t_index. Densities are floored at 1e-300
/// and points where both are below 1e-12 are skipped.
double kl_grid(const DensityGrid& p, const DensityGrid& q, std::size_t t_index = 0,
               KlOrientation orientation = KlOrientation::Forward);

/// (1/2) sum_k mu(X_k, t_k)^2 dt per path (left Riemann over stored columns);
/// the paths must come from the skewed dynamics of `family`.
McEstimate girsanov_energy(const SkewFamily& family, const PathEnsemble& paths_under_q);

/// E_Q[log h(X_t, t) / h(x0, 0)] at the last column, h = Phi(alpha_t x). This is
/// the relative entropy of the skewed path law with respect to Brownian motion.
McEstimate telescoped_path_kl(const SkewFamily& family, const PathEnsemble& paths_under_q);

/// The same quantity by quadrature against the finite-horizon density.
double exact_path_kl_theorem1(double T, double t, double x0);

struct SubCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  /// "<=" or ">=".
  std::string relation = "<=";
  bool pass = false;

  nlohmann::json to_json() const;
};

struct Check {
  std::string name;
  std::string claim;
  /// max over sub-checks of value/bound ("<=") or bound/value (">=").
  double statistic = 0.0;
  double threshold = 1.0;
  bool pass = false;
  std::size_t n_effective = 0;
  std::string notes;
  std::vector<SubCheck> subs;
  nlohmann::json meta = nlohmann::json::object();
  double wall_time_s = 0.0;

  void at_most(const std::string& what, double value, double bound);
  void at_least(const std::string& what, double value, double bound);
  /// Recomputes statistic and pass from the sub-checks.
  void finish();

  nlohmann::json to_json() const;
};

struct ValidationReport {
  std::string suite;
  std::uint64_t seed = 1;
  double wall_time_s = 0.0;
  std::vector<Check> checks;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

/// Mass of q(., t; x0) by quadrature over mean +- 12 sd, shifted and unshifted,
/// for every (x0, t).
Check normalization_audit(const SkewFamily& family, std::span<const double> x0_list,
                          std::span<const double> t_list);

enum class SuiteScale { Core, Full };

/// Number of suite checks; check i (1-based) covers one stated property.
inline constexpr int kSuiteChecks = 12;

Check run_check(int index, SuiteScale scale, std::uint64_t seed);
ValidationReport run_suite(SuiteScale scale, std::uint64_t seed,
                           const std::function<void(const Check&)>& on_check = {});

}  // namespace skewdiff
