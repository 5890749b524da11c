#pragma once

// Censoring and dynamic-selection readings of the skew drifts.

#include <vector>

#include <json.hpp>

#include "skewdiff/sde_engine.hpp"

namespace skewdiff {

enum class TruncationSide { Above, Below };

struct TruncatedNormalSpec {
  double mean = 0.0;
  double std = 1.0;
  double threshold = 0.0;
  TruncationSide side = TruncationSide::Above;

  void validate() const;
};

/// E[x | x > a] = mu + s m(-(a-mu)/s),  E[x | x < a] = mu - s m((a-mu)/s),
/// with m the inverse Mills ratio phi/Phi.
double truncated_normal_mean(const TruncatedNormalSpec& spec);

struct SelectionCheck {
  double drift_direct;
  double drift_via_selection;
  double abs_diff;
};

/// psi |alpha| E[zeta | zeta > -|alpha| x] (chirality +) or
/// psi |alpha| E[zeta | zeta < -|alpha| x] (chirality -), zeta standard normal.
SelectionCheck verify_selection_representation(const SkewFamily& family, double x, double t);

struct OuSelectionCheck {
  double drift_direct;
  double drift_via_selection;
  double abs_diff;
  /// z ~ N(-2 lambda x, 2 lambda); drift = -lambda x - E[z | z < 0] (chirality +)
  /// or -lambda x - E[z | z > 0] (chirality -).
  double variance_used;
  /// -E[z | z < 0] / -E[z | z > 0] with z ~ N(-lambda x, 2/lambda).
  double drift_as_typeset;
  double abs_diff_as_typeset;
};

OuSelectionCheck verify_ou_selection(double lambda, double x, Chirality chirality);

struct CensoredPosterior {
  std::vector<double> x_grid;
  std::vector<double> density;
  double survivor_fraction = 0.0;
  std::size_t n_survivors = 0;
  double bandwidth = 0.0;
  /// X values of the survivors, for KS checks.
  std::vector<double> survivors;

  nlohmann::json to_json() const;
};

/// Gaussian KDE of X at column t_index over the paths with Y >= 0.
/// bandwidth <= 0 selects 1.06 sd n^{-1/5}.
CensoredPosterior posterior_from_censored_sim(const PathEnsemble& x, const PathEnsemble& y,
                                              std::size_t t_index, double bandwidth,
                                              const std::vector<double>& x_grid,
                                              std::size_t min_survivors = 1000);

double silverman_bandwidth(const std::vector<double>& samples);

}  // namespace skewdiff
