#pragma once

// Scalar normal special functions and the skew-Normal family.
//
// Everything here uses the standard normal cdf. The unnormalized integral
// int_{-inf}^{x} exp(-s^2/2) ds appears in closed-form drifts and densities;
// paper_phi_big() exposes it for literal formula checks only.

#include "skewdiff/common.hpp"

namespace skewdiff {

struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;  // standard-deviation units
  double shape = 0.0;

  void validate() const;

  /// The time-indexed skew-Normal Q(x,t) = (1/(pi sqrt t)) e^{-x^2/2t} int^{alpha x}
  /// is SN(0, sqrt t, alpha sqrt t).
  static SkewNormalParams from_time_skew(double t, double alpha, double location = 0.0);
};

struct ExtendedSkewNormalParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;
  double truncation = 0.0;

  void validate() const;
};

struct SnMoments {
  double mean;
  double variance;
  double skewness;
};

double std_normal_pdf(double x) noexcept;
double log_std_normal_pdf(double x) noexcept;
double std_normal_cdf(double x) noexcept;
/// log Phi(x), finite for x down to about -1e150.
double log_std_normal_cdf(double x) noexcept;

/// log(phi(x) / Phi(x)). Accepts +-inf: log_mills(+inf) = -inf, log_mills(-inf) = +inf.
double log_mills(double x) noexcept;
/// phi(x) / Phi(x), the inverse Mills ratio. Behaves like -x - 1/x for x -> -inf.
double mills(double x) noexcept;

/// int_{-inf}^{x} e^{-s^2/2} ds = sqrt(2 pi) Phi(x).
double paper_phi_big(double x) noexcept;
double log_paper_phi_big(double x) noexcept;

double sn_pdf(double x, const SkewNormalParams& p);
double sn_log_pdf(double x, const SkewNormalParams& p);
SnMoments sn_moments(const SkewNormalParams& p);

double esn_pdf(double x, const ExtendedSkewNormalParams& p);
double esn_log_pdf(double x, const ExtendedSkewNormalParams& p);

/// Half-Normal law supported on the chirality side of `origin`.
double half_normal_pdf(double x, double variance, double origin, Chirality chirality);

double gaussian_pdf(double x, double mean, double variance) noexcept;
double gaussian_log_pdf(double x, double mean, double variance) noexcept;

}  // namespace skewdiff
