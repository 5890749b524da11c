#include "skewdiff/censoring_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/ou_skew.hpp"

namespace skewdiff {

void TruncatedNormalSpec::validate() const {
  require(std::isfinite(mean), "truncated normal: mean must be finite");
  require(std::isfinite(std) && std > 0.0, "truncated normal: std must be > 0");
  require(!std::isnan(threshold), "truncated normal: threshold is NaN");
}

double truncated_normal_mean(const TruncatedNormalSpec& spec) {
  spec.validate();
  const double beta = (spec.threshold - spec.mean) / spec.std;
  if (spec.side == TruncationSide::Above) {
    if (beta == -kInf) return spec.mean;
    return spec.mean + spec.std * mills(-beta);
  }
  if (beta == kInf) return spec.mean;
  return spec.mean - spec.std * mills(beta);
}

SelectionCheck verify_selection_representation(const SkewFamily& family, double x, double t) {
  const double direct = drift_value(DriftSpec::from_family(family), x, t);
  const double a = std::abs(family.alpha(t));
  const TruncationSide side =
      family.chirality() == Chirality::Right ? TruncationSide::Above : TruncationSide::Below;
  const double e = truncated_normal_mean({0.0, 1.0, -a * x, side});
  const double via = family.psi(t) * a * e;
  return {direct, via, std::abs(direct - via)};
}

OuSelectionCheck verify_ou_selection(double lambda, double x, Chirality chirality) {
  require(std::isfinite(lambda) && lambda > 0.0, "OU selection: lambda must be > 0");
  const double direct = ou_h_drift(x, lambda, chirality);
  const TruncationSide side =
      chirality == Chirality::Right ? TruncationSide::Below : TruncationSide::Above;
  const double var = 2.0 * lambda;
  const double e = truncated_normal_mean({-2.0 * lambda * x, std::sqrt(var), 0.0, side});
  const double via = -lambda * x - e;
  const double e_typeset = truncated_normal_mean({-lambda * x, std::sqrt(2.0 / lambda), 0.0, side});
  const double typeset = -e_typeset;
  return {direct, via, std::abs(direct - via), var, typeset, std::abs(direct - typeset)};
}

double silverman_bandwidth(const std::vector<double>& s) {
  require(s.size() >= 2, "bandwidth needs at least two samples");
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - mean) * (v - mean);
  return 1.06 * std::sqrt(ss / (n - 1.0)) * std::pow(n, -0.2);
}

CensoredPosterior posterior_from_censored_sim(const PathEnsemble& x, const PathEnsemble& y,
                                              std::size_t t_index, double bandwidth,
                                              const std::vector<double>& x_grid,
                                              std::size_t min_survivors) {
  require(x.n_paths == y.n_paths && x.steps == y.steps, "censored posterior: ensembles do not match");
  require(t_index < x.n_columns(), "censored posterior: column index out of range");
  CensoredPosterior out;
  for (std::size_t i = 0; i < x.n_paths; ++i) {
    if (y.at(i, t_index) >= 0.0) out.survivors.push_back(x.at(i, t_index));
  }
  out.n_survivors = out.survivors.size();
  if (out.n_survivors < min_survivors) {
    throw NumericalError("censored posterior: only " + std::to_string(out.n_survivors) +
                         " survivors, need " + std::to_string(min_survivors));
  }
  out.survivor_fraction = static_cast<double>(out.n_survivors) / static_cast<double>(x.n_paths);
  out.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(out.survivors);
  out.x_grid = x_grid;
  out.density.assign(x_grid.size(), 0.0);

  // Sorted samples let each grid point visit only the kernels within 8 bandwidths.
  std::vector<double> s = out.survivors;
  std::sort(s.begin(), s.end());
  const double h = out.bandwidth;
  const double norm = 1.0 / (static_cast<double>(s.size()) * h);
  for (std::size_t g = 0; g < x_grid.size(); ++g) {
    const auto lo = std::lower_bound(s.begin(), s.end(), x_grid[g] - 8.0 * h);
    const auto hi = std::upper_bound(s.begin(), s.end(), x_grid[g] + 8.0 * h);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) acc += std_normal_pdf((x_grid[g] - *it) / h);
    out.density[g] = acc * norm;
  }
  return out;
}

nlohmann::json CensoredPosterior::to_json() const {
  return {{"survivor_fraction", survivor_fraction},
          {"n_effective", n_survivors},
          {"bandwidth", bandwidth}};
}

}  // namespace skewdiff
