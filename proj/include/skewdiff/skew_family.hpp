#pragma once

// The (psi_t, alpha_t) drift-amplitude / skewness system and the drifts built on it.
//
// A family is described by
//   Gamma'(t) = -(1 - psi_t) / t,   Lambda(t) = C exp(Gamma(t)),
//   alpha_t   = chirality * Lambda / sqrt(1 - t Lambda^2),
// which exists while t Lambda(t)^2 < 1. The three closed-form members are the
// finite-horizon bridge (psi = 1), the constant-skew family and the
// constant-correlation family (psi = 1/2).

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewdiff/common.hpp"

namespace skewdiff {

enum class FamilyKind { Theorem1, Theorem2, ConstantCorrelation, General };

/// Where Gamma is pinned to zero when integrating a user supplied psi.
/// Origin needs psi(0+) = 1 so that (1 - psi)/t is integrable at 0.
enum class GammaAnchor { Auto, Origin, UnitTime };

class SkewFamily {
 public:
  static SkewFamily theorem1(double horizon_T, Chirality chirality);
  static SkewFamily theorem2(double alpha_const, Chirality chirality);
  static SkewFamily constant_correlation(double correlation_C, Chirality chirality);

  FamilyKind kind() const { return kind_; }
  Chirality chirality() const { return chirality_; }
  /// C of Lambda(t) = C exp(Gamma(t)).
  double family_constant() const { return constant_; }
  /// First time with t Lambda^2 >= 1, or +inf.
  double validity_horizon() const { return horizon_; }
  /// T, alpha or C for the named families; NaN for General.
  double parameter() const { return parameter_; }

  double psi(double t) const;
  /// Signed skewness: sign(alpha) == chirality.
  double alpha(double t) const;
  double alpha_dot(double t) const;
  double gamma(double t) const;
  double lambda(double t) const { return constant_ * std::exp(gamma(t)); }

  SkewFamily with_chirality(Chirality c) const;

  nlohmann::json to_json() const;
  static SkewFamily from_json(const nlohmann::json& j);

 private:
  friend SkewFamily solve_family_from_psi(std::function<double(double)> psi, double C,
                                          Chirality chirality, std::span<const double> t_grid,
                                          GammaAnchor anchor);
  struct General;

  void check_time(double t) const;

  FamilyKind kind_ = FamilyKind::Theorem1;
  Chirality chirality_ = Chirality::Right;
  double constant_ = 0.0;
  double horizon_ = kInf;
  double parameter_ = 0.0;
  std::shared_ptr<const General> general_;
};

/// Integrates Gamma by adaptive quadrature on `t_grid` (ordered, positive) and
/// locates the validity horizon by bisection on t Lambda(t)^2 - 1.
SkewFamily solve_family_from_psi(std::function<double(double)> psi, double C, Chirality chirality,
                                 std::span<const double> t_grid,
                                 GammaAnchor anchor = GammaAnchor::Auto);

/// Piecewise-linear psi through (t_i, psi_i), held constant outside the table.
std::function<double(double)> psi_from_table(std::vector<double> t, std::vector<double> psi);

/// Residual of alpha' = psi alpha (alpha^2 + 1/t) - alpha/t - alpha^3/2, with alpha'
/// from a five-point centered difference of step h * min(t, horizon - t).
double alpha_ode_residual(const SkewFamily& family, double t, double h = 1e-3);

/// Inverts the ODE above for psi, using the same five-point difference.
double psi_from_alpha(const SkewFamily& family, double t, double h = 1e-3);

enum class DriftKind { Theorem1, Theorem2, GeneralClass, OUHTransform, Linear, Custom };

/// A drift mu(x, .) frozen at one instant. Cheap to evaluate per path.
struct DriftSlice {
  DriftKind kind = DriftKind::Linear;
  double psi = 0.0;
  double alpha = 0.0;  // signed
  double shift = 0.0;
  double sigma = 1.0;
  double lambda = 0.0;
  double chirality = 1.0;
  double slope = 0.0;
  double t = 0.0;
  const std::function<double(double, double)>* custom = nullptr;

  double operator()(double x) const;
};

class DriftSpec {
 public:
  /// Theorem1 families give the h-transform drift on the raw state; the others
  /// use x - shift (the initial level).
  static DriftSpec from_family(SkewFamily family, double shift = 0.0, double sigma = 1.0);
  static DriftSpec ou_h_transform(double lambda, Chirality chirality);
  static DriftSpec linear(double slope, double sigma = 1.0);
  static DriftSpec custom(std::function<double(double, double)> mu, double sigma = 1.0,
                          double horizon = kInf, std::string name = "custom");

  DriftKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double shift() const { return shift_; }
  double horizon() const;
  const SkewFamily* family() const { return family_ ? &*family_ : nullptr; }
  double lambda() const { return lambda_; }
  Chirality chirality() const;
  double slope() const { return slope_; }
  const std::string& name() const { return name_; }

  DriftSlice at(double t) const;
  double value(double x, double t) const { return at(t)(x); }

  /// Same drift with the opposite chirality (families and OU kinds only).
  DriftSpec mirrored() const;

  nlohmann::json to_json() const;
  static DriftSpec from_json(const nlohmann::json& j);

 private:
  DriftKind kind_ = DriftKind::Linear;
  std::shared_ptr<const SkewFamily> family_;
  double shift_ = 0.0;
  double sigma_ = 1.0;
  double lambda_ = 0.0;
  Chirality ou_chirality_ = Chirality::Right;
  double slope_ = 0.0;
  double horizon_ = kInf;
  std::string name_;
  std::shared_ptr<const std::function<double(double, double)>> custom_;
};

SkewFamily family_theorem1(double T, Chirality chirality);
SkewFamily family_theorem2(double alpha_const, Chirality chirality);
SkewFamily family_constant_correlation(double C, Chirality chirality);

/// mu(x, t); throws DomainError at or beyond the validity horizon.
double drift_value(const DriftSpec& spec, double x, double t);

std::string to_string(FamilyKind k);
std::string to_string(DriftKind k);

}  // namespace skewdiff
