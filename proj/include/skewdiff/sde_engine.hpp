#pragma once

// Euler-Maruyama simulation of the scalar skew diffusions, the censoring pair
// (X, Y) and Bernoulli mixtures of two drifts.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skewdiff/skew_family.hpp"

namespace skewdiff {

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_steps = 1000;
  double terminal_cutoff_epsilon = 0.0;

  void validate() const;
  double t_stop() const { return t_end - terminal_cutoff_epsilon; }
  double dt() const { return (t_stop() - t_start) / static_cast<double>(n_steps); }
  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt(); }

  /// [0, T - eps] with eps = eps_rel * T.
  static TimeGrid up_to_horizon(double T, std::size_t n_steps, double eps_rel = 1e-4);

  nlohmann::json to_json() const;
  static TimeGrid from_json(const nlohmann::json& j);
};

struct SimConfig {
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  /// Bound on |mu dt| per step.
  double drift_clamp = 10.0;
  /// Paths 2i and 2i+1 share noise with opposite signs.
  bool antithetic = false;
  /// Use -Z everywhere.
  bool negate_noise = false;
  /// Keep every k-th step (the last step is always kept).
  std::size_t record_every = 1;
  std::uint32_t stream = 0;

  void validate() const;
};

enum class Scheme { EulerMaruyama };

struct PathEnsemble {
  TimeGrid grid;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::EulerMaruyama;
  std::size_t n_paths = 0;
  /// Step indices of the stored columns, increasing, starting at 0.
  std::vector<std::size_t> steps;
  /// Row-major n_paths x steps.size().
  std::vector<double> values;
  /// +1 / -1 per path for mixtures, empty otherwise.
  std::vector<int> labels;
  std::uint64_t clamp_events = 0;
  std::uint64_t total_steps = 0;

  std::size_t n_columns() const { return steps.size(); }
  double time_of(std::size_t col) const { return grid.time(steps[col]); }
  double at(std::size_t path, std::size_t col) const { return values[path * steps.size() + col]; }
  std::span<const double> path(std::size_t i) const {
    return {values.data() + i * steps.size(), steps.size()};
  }
  std::vector<double> column(std::size_t col) const;
  std::vector<double> terminal() const { return column(steps.size() - 1); }
  /// Column whose time is closest to t.
  std::size_t column_at(double t) const;
  double clamp_fraction() const {
    return total_steps ? static_cast<double>(clamp_events) / static_cast<double>(total_steps) : 0.0;
  }

  nlohmann::json metadata() const;
};

PathEnsemble simulate(const DriftSpec& drift, double x0, const TimeGrid& grid, const SimConfig& cfg);

/// X is Brownian; dY = rho(t) dX + sqrt(1 - rho^2) dW2. Both start at 0.
std::pair<PathEnsemble, PathEnsemble> simulate_bivariate_censoring(
    const std::function<double(double)>& rho, const TimeGrid& grid, const SimConfig& cfg);

PathEnsemble simulate_mixture(const DriftSpec& plus, const DriftSpec& minus, double p_plus,
                              double x0, const TimeGrid& grid, const SimConfig& cfg);

struct MixtureProbability {
  double p_minus;
  double p_plus;
};

/// p+ = Phi(x0 / sqrt T), p- = 1 - p+.
MixtureProbability mixture_probability(double x0, double T);

/// Worker count: SKEWDIFF_THREADS if set, else hardware concurrency.
unsigned worker_count();

/// Runs body(begin, end) over disjoint chunks of [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

void write_csv(std::ostream& os, const PathEnsemble& e);
void write_binary(std::ostream& os, const PathEnsemble& e);
PathEnsemble read_binary(std::istream& is);

std::string to_string(Scheme s);

}  // namespace skewdiff
