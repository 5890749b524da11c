#pragma once

// Finite-volume theta-scheme for the forward equation
//   dQ/dt = -d/dx (mu Q) + (sigma^2 / 2) d2Q/dx2
// and analytic backward-equation residuals of the space-time harmonic h.

#include <functional>
#include <span>

#include "skewdiff/densities.hpp"
#include "skewdiff/sde_engine.hpp"

namespace skewdiff {

struct FpConfig {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_x = 2001;
  /// Number of stored snapshots, evenly spread over the solve.
  std::size_t n_t = 64;
  /// Standard deviation of the Gaussian replacing the Dirac start; <= 0 means 4 dx.
  double init_width = 0.0;
  double theta = 0.5;
  /// Read the mollifier as the Brownian law at elapsed time w^2 and start the
  /// clock at t_start + w^2.
  bool shift_clock_by_mollifier = true;

  void validate(double x0) const;
  double dx() const { return (x_max - x_min) / static_cast<double>(n_x - 1); }
};

struct FpDiagnostics {
  double max_mass_drift = 0.0;
  double min_value = 0.0;
  std::size_t upwind_faces = 0;
  std::size_t steps = 0;
};

/// The time step is grid.dt(); the solve runs to grid.t_stop().
DensityGrid solve_kfe(const DriftSpec& drift, double sigma, double x0, const TimeGrid& grid,
                      const FpConfig& cfg, FpDiagnostics* diag = nullptr);

/// max |dh/dt + (1/2) d2h/dx2| for h = Phi(alpha_t x), from analytic derivatives.
double backward_residual_brownian_h(const SkewFamily& family, std::span<const double> xs,
                                    std::span<const double> ts);
double backward_residual_brownian_h(const std::function<double(double)>& alpha,
                                    const std::function<double(double)>& alpha_dot,
                                    std::span<const double> xs, std::span<const double> ts);

/// max |dh/dt - lambda x dh/dx + (1/2) d2h/dx2| for h_lambda, from analytic
/// derivatives. keep_time_factor = false drops e^{-lambda t}.
double backward_residual_ou_h(double lambda, Chirality chirality, std::span<const double> xs,
                              std::span<const double> ts, bool keep_time_factor = true);

}  // namespace skewdiff
