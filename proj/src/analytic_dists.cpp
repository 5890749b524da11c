#include "skewdiff/analytic_dists.hpp"

#include <cmath>

namespace skewdiff {

Chirality chirality_from_int(int s) {
  require(s == 1 || s == -1, "chirality must be +1 or -1");
  return s > 0 ? Chirality::Right : Chirality::Left;
}

namespace {

constexpr double kSqrt1_2 = 0.707106781186547524400844362105;
// Below this point Phi(x) comes from the continued fraction instead of erfc.
constexpr double kTailSwitch = -5.0;

// Mills ratio R(z) = (1 - Phi(z)) / phi(z) for z >= 5, by modified Lentz on
// R(z) = 1/(z + 1/(z + 2/(z + 3/(z + ...)))).
double upper_mills_cf(double z) {
  constexpr double tiny = 1e-300;
  double f = z;
  double c = z;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = z + k * d;
    if (std::abs(d) < tiny) d = tiny;
    c = z + k / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

}  // namespace

void SkewNormalParams::validate() const {
  require(std::isfinite(location), "skew-normal location must be finite");
  require(std::isfinite(scale) && scale > 0.0, "skew-normal scale must be > 0");
  require(std::isfinite(shape), "skew-normal shape must be finite");
}

SkewNormalParams SkewNormalParams::from_time_skew(double t, double alpha, double location) {
  require(t > 0.0, "time must be positive");
  const double s = std::sqrt(t);
  return {location, s, alpha * s};
}

void ExtendedSkewNormalParams::validate() const {
  require(std::isfinite(location), "ESN location must be finite");
  require(std::isfinite(scale) && scale > 0.0, "ESN scale must be > 0");
  require(std::isfinite(shape), "ESN shape must be finite");
  require(std::isfinite(truncation), "ESN truncation must be finite");
}

double std_normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_std_normal_pdf(double x) noexcept { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kSqrt1_2); }

double log_std_normal_cdf(double x) noexcept {
  if (std::isnan(x)) return x;
  if (x == kInf) return 0.0;
  if (x == -kInf) return -kInf;
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kSqrt1_2));
  if (x > kTailSwitch) return std::log(0.5 * std::erfc(-x * kSqrt1_2));
  return log_std_normal_pdf(x) + std::log(upper_mills_cf(-x));
}

double log_mills(double x) noexcept {
  if (std::isnan(x)) return x;
  if (x == kInf) return -kInf;
  if (x == -kInf) return kInf;
  if (x > kTailSwitch) return log_std_normal_pdf(x) - log_std_normal_cdf(x);
  return -std::log(upper_mills_cf(-x));
}

double mills(double x) noexcept {
  if (std::isnan(x)) return x;
  if (x == kInf) return 0.0;
  if (x == -kInf) return kInf;
  if (x > kTailSwitch) return std_normal_pdf(x) / std_normal_cdf(x);
  return 1.0 / upper_mills_cf(-x);
}

double paper_phi_big(double x) noexcept { return kSqrt2Pi * std_normal_cdf(x); }

double log_paper_phi_big(double x) noexcept { return kLogSqrt2Pi + log_std_normal_cdf(x); }

double gaussian_log_pdf(double x, double mean, double variance) noexcept {
  const double d = x - mean;
  return -0.5 * d * d / variance - 0.5 * std::log(variance) - kLogSqrt2Pi;
}

double gaussian_pdf(double x, double mean, double variance) noexcept {
  return std::exp(gaussian_log_pdf(x, mean, variance));
}

double sn_log_pdf(double x, const SkewNormalParams& p) {
  p.validate();
  const double z = (x - p.location) / p.scale;
  return std::numbers::ln2 - std::log(p.scale) + log_std_normal_pdf(z) +
         log_std_normal_cdf(p.shape * z);
}

double sn_pdf(double x, const SkewNormalParams& p) { return std::exp(sn_log_pdf(x, p)); }

SnMoments sn_moments(const SkewNormalParams& p) {
  p.validate();
  const double delta = p.shape / std::sqrt(1.0 + p.shape * p.shape);
  const double b = std::sqrt(2.0 / std::numbers::pi);
  const double mu_z = b * delta;
  const double var_z = 1.0 - mu_z * mu_z;
  const double skew = 0.5 * (4.0 - std::numbers::pi) * mu_z * mu_z * mu_z / std::pow(var_z, 1.5);
  return {p.location + p.scale * mu_z, p.scale * p.scale * var_z, skew};
}

double esn_log_pdf(double x, const ExtendedSkewNormalParams& p) {
  p.validate();
  const double z = (x - p.location) / p.scale;
  const double norm = p.truncation / std::sqrt(1.0 + p.shape * p.shape);
  return -std::log(p.scale) + log_std_normal_pdf(z) +
         log_std_normal_cdf(p.truncation + p.shape * z) - log_std_normal_cdf(norm);
}

double esn_pdf(double x, const ExtendedSkewNormalParams& p) { return std::exp(esn_log_pdf(x, p)); }

double half_normal_pdf(double x, double variance, double origin, Chirality chirality) {
  require(variance > 0.0, "half-normal variance must be > 0");
  if (sign(chirality) * (x - origin) < 0.0) return 0.0;
  const double s = std::sqrt(variance);
  return 2.0 * std_normal_pdf((x - origin) / s) / s;
}

}  // namespace skewdiff
