#pragma once

// Ornstein-Uhlenbeck extensions: the OU h-transform skew diffusions, the OU
// driven by a skew-Normal diffusion, the mixture identity and the Lamperti map.

#include <functional>
#include <span>
#include <utility>

#include "skewdiff/common.hpp"
#include "skewdiff/sde_engine.hpp"

namespace skewdiff {

struct OuSkewSpec {
  double lambda = 1.0;
  Chirality chirality = Chirality::Right;
  double x0 = 0.0;

  void validate() const;
};

/// lambda x + c sqrt(2 lambda) phi(c sqrt(2 lambda) x) / Phi(c sqrt(2 lambda) x):
/// the h-transform of dX = -lambda X dt + dW by h_lambda.
double ou_h_drift(double x, double lambda, Chirality chirality);
double drift_theorem4(double x, const OuSkewSpec& spec);

/// Drift written as lambda x + e^{-lambda x^2} / int_{-inf}^{c x} e^{-lambda s^2} ds with the
/// integral by quadrature; no chirality sign on the ratio. Only for comparisons.
double drift_theorem4_as_typeset(double x, const OuSkewSpec& spec);

/// e^{-lambda t} e^{lambda x^2} Phi(c sqrt(2 lambda) x).
double h_lambda(double x, double t, const OuSkewSpec& spec);
double log_h_lambda(double x, double t, const OuSkewSpec& spec);

struct OuMixtureProbability {
  double p_minus;
  double p_plus;
};

/// p+/- = Phi(+/- sqrt(2 lambda) x); the two add to 1 exactly.
OuMixtureProbability ou_mixture_probability(double lambda, double x);

/// Gaussian transition densities of dX = -lambda X dt + dW (stationary) and
/// dX = +lambda X dt + dW (repulsive).
double ou_stationary_tpd(double x, double t, double x0, double lambda);
double ou_repulsive_tpd(double x, double t, double x0, double lambda);

/// p_OU(x, t | x0) h(x, t) / h(x0, 0) with the Gaussian-integral factors of h
/// computed by quadrature. Independent of the extended skew-Normal mapping.
double ou_h_ratio_density(double x, double t, double lambda, double x0, Chirality chirality);

enum class IdentityPlacement {
  /// e^{-lambda t} only inside h.
  Once,
  /// An extra e^{-lambda t} outside the bracket as well.
  Twice,
};

/// p- Q-(x, t) + p+ Q+(x, t) with p+/- = Phi(+/- sqrt(2 lambda) x0).
double ou_mixture_density(double x, double t, double lambda, double x0,
                          IdentityPlacement placement = IdentityPlacement::Once);

/// max over xs of |mixture density - target| where target is the repulsive
/// (or, with stationary_target, the stationary) OU transition density.
double ou_identity_residual(double lambda, double x0, double t, std::span<const double> xs,
                            IdentityPlacement placement, bool stationary_target = false);

/// Z follows the finite-horizon skew diffusion (alpha_t = 1/sqrt(T - t), Z_0 = 0)
/// and dX = -lambda X dt + dZ with the same increments.
std::pair<PathEnsemble, PathEnsemble> simulate_ou_skew_noise(double lambda, double x0, double T,
                                                             const TimeGrid& grid,
                                                             const SimConfig& cfg);

/// Psi(z, t) = int_anchor^z du / sigma(u, t).
double lamperti_skew_map(const std::function<double(double, double)>& sigma, double z, double t,
                         double anchor = 0.0);

/// Phi(alpha_t Psi(z, t)), the density ratio attached to the mapped state.
double lamperti_rn_factor(const std::function<double(double, double)>& sigma, double z, double t,
                          double alpha_t, double anchor = 0.0);

}  // namespace skewdiff
