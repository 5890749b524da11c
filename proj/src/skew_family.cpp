#include "skewdiff/skew_family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/json_util.hpp"
#include "skewdiff/ou_skew.hpp"
#include "skewdiff/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace skewdiff {

struct SkewFamily::General {
  std::function<double(double)> psi;
  GammaAnchor anchor = GammaAnchor::Origin;
  std::vector<double> t_nodes;
  std::vector<double> gamma_nodes;
  nlohmann::json psi_table;  // null unless built from a table

  // -int_a^b (1 - psi(s)) / s ds
  double segment(double a, double b) const {
    if (a == b) return 0.0;
    auto f = [this](double s) { return -(1.0 - psi(s)) / s; };
    // 1 - psi(s) cancels near s = 0, so deep bisection there only chases rounding noise.
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 8, 1e-13);
  }

  double gamma(double t) const {
    if (anchor == GammaAnchor::Origin) {
      auto it = std::upper_bound(t_nodes.begin(), t_nodes.end(), t);
      if (it == t_nodes.begin()) return segment(0.0, t);
      const auto i = static_cast<std::size_t>(it - t_nodes.begin()) - 1;
      return gamma_nodes[i] + segment(t_nodes[i], t);
    }
    // Unit-time anchor: start from whichever known point is nearest.
    double best_t = 1.0;
    double best_g = 0.0;
    for (std::size_t i = 0; i < t_nodes.size(); ++i) {
      if (std::abs(t_nodes[i] - t) < std::abs(best_t - t)) {
        best_t = t_nodes[i];
        best_g = gamma_nodes[i];
      }
    }
    return best_g + segment(best_t, t);
  }
};

namespace {

void check_chirality_family(double C) { require(C >= 0.0, "family constant C must be >= 0"); }

}  // namespace

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::Theorem1: return "theorem1";
    case FamilyKind::Theorem2: return "theorem2";
    case FamilyKind::ConstantCorrelation: return "constant_correlation";
    case FamilyKind::General: return "general";
  }
  return "?";
}

std::string to_string(DriftKind k) {
  switch (k) {
    case DriftKind::Theorem1: return "theorem1";
    case DriftKind::Theorem2: return "theorem2";
    case DriftKind::GeneralClass: return "general";
    case DriftKind::OUHTransform: return "ou_h_transform";
    case DriftKind::Linear: return "linear";
    case DriftKind::Custom: return "custom";
  }
  return "?";
}

SkewFamily SkewFamily::theorem1(double horizon_T, Chirality chirality) {
  require(std::isfinite(horizon_T) && horizon_T > 0.0, "theorem1 family: T must be > 0");
  SkewFamily f;
  f.kind_ = FamilyKind::Theorem1;
  f.chirality_ = chirality;
  f.constant_ = 1.0 / std::sqrt(horizon_T);
  f.horizon_ = horizon_T;
  f.parameter_ = horizon_T;
  return f;
}

SkewFamily SkewFamily::theorem2(double alpha_const, Chirality chirality) {
  require(std::isfinite(alpha_const) && alpha_const > 0.0,
          "theorem2 family: alpha must be > 0");
  SkewFamily f;
  f.kind_ = FamilyKind::Theorem2;
  f.chirality_ = chirality;
  f.constant_ = alpha_const;
  f.horizon_ = kInf;
  f.parameter_ = alpha_const;
  return f;
}

SkewFamily SkewFamily::constant_correlation(double correlation_C, Chirality chirality) {
  require(correlation_C >= 0.0 && correlation_C < 1.0,
          "constant-correlation family: C must lie in [0, 1)");
  SkewFamily f;
  f.kind_ = FamilyKind::ConstantCorrelation;
  f.chirality_ = chirality;
  f.constant_ = correlation_C;
  f.horizon_ = kInf;
  f.parameter_ = correlation_C;
  return f;
}

SkewFamily family_theorem1(double T, Chirality c) { return SkewFamily::theorem1(T, c); }
SkewFamily family_theorem2(double a, Chirality c) { return SkewFamily::theorem2(a, c); }
SkewFamily family_constant_correlation(double C, Chirality c) {
  return SkewFamily::constant_correlation(C, c);
}

void SkewFamily::check_time(double t) const {
  if (!(t >= 0.0) || !(t < horizon_)) {
    std::ostringstream os;
    os << "time " << t << " outside the family's validity range [0, " << horizon_ << ")";
    throw DomainError(os.str());
  }
}

double SkewFamily::psi(double t) const {
  switch (kind_) {
    case FamilyKind::Theorem1: return 1.0;
    case FamilyKind::Theorem2: {
      const double a2t = parameter_ * parameter_ * t;
      return (2.0 + a2t) / (2.0 * (1.0 + a2t));
    }
    case FamilyKind::ConstantCorrelation: return 0.5;
    case FamilyKind::General: return general_->psi(t);
  }
  return NAN;
}

double SkewFamily::gamma(double t) const {
  switch (kind_) {
    case FamilyKind::Theorem1: return 0.0;
    case FamilyKind::Theorem2: return -0.5 * std::log1p(parameter_ * parameter_ * t);
    case FamilyKind::ConstantCorrelation: return -0.5 * std::log(t);
    case FamilyKind::General: return general_->gamma(t);
  }
  return NAN;
}

double SkewFamily::alpha(double t) const {
  check_time(t);
  const double c = sign(chirality_);
  switch (kind_) {
    case FamilyKind::Theorem1: return c / std::sqrt(parameter_ - t);
    case FamilyKind::Theorem2: return c * parameter_;
    case FamilyKind::ConstantCorrelation:
      if (constant_ == 0.0) return 0.0;
      return c * constant_ / std::sqrt(1.0 - constant_ * constant_) / std::sqrt(t);
    case FamilyKind::General: {
      const double lam = lambda(t);
      const double d = 1.0 - t * lam * lam;
      require(d > 0.0, "general family evaluated past its validity horizon");
      return c * lam / std::sqrt(d);
    }
  }
  return NAN;
}

double SkewFamily::alpha_dot(double t) const {
  check_time(t);
  const double c = sign(chirality_);
  switch (kind_) {
    case FamilyKind::Theorem1: return c * 0.5 * std::pow(parameter_ - t, -1.5);
    case FamilyKind::Theorem2: return 0.0;
    case FamilyKind::ConstantCorrelation: return -alpha(t) / (2.0 * t);
    case FamilyKind::General: {
      const double lam = lambda(t);
      const double lam_dot = -(1.0 - psi(t)) / t * lam;
      const double d = 1.0 - t * lam * lam;
      return c * (lam_dot / std::sqrt(d) +
                  0.5 * lam * std::pow(d, -1.5) * (lam * lam + 2.0 * t * lam * lam_dot));
    }
  }
  return NAN;
}

SkewFamily SkewFamily::with_chirality(Chirality c) const {
  SkewFamily f = *this;
  f.chirality_ = c;
  return f;
}

nlohmann::json SkewFamily::to_json() const {
  nlohmann::json params;
  switch (kind_) {
    case FamilyKind::Theorem1: params = {{"T", parameter_}}; break;
    case FamilyKind::Theorem2: params = {{"alpha", parameter_}}; break;
    case FamilyKind::ConstantCorrelation: params = {{"C", parameter_}}; break;
    case FamilyKind::General:
      params = {{"C", constant_},
                {"anchor", general_->anchor == GammaAnchor::Origin ? "origin" : "unit_time"},
                {"t_grid", general_->t_nodes}};
      if (!general_->psi_table.is_null()) params["psi_table"] = general_->psi_table;
      break;
  }
  return {{"kind", to_string(kind_)},
          {"parameters", params},
          {"chirality", static_cast<int>(chirality_)},
          {"horizon", json_real(horizon_)}};
}

SkewFamily SkewFamily::from_json(const nlohmann::json& j) {
  expect_keys(j, {"kind", "parameters", "chirality", "horizon"}, "family descriptor");
  require(j.contains("kind") && j.contains("parameters"), "family descriptor needs kind and parameters");
  const auto kind = j.at("kind").get<std::string>();
  const auto chir = chirality_from_int(j.value("chirality", 1));
  const auto& p = j.at("parameters");
  if (kind == "theorem1") {
    expect_keys(p, {"T"}, "theorem1 parameters");
    return theorem1(p.at("T").get<double>(), chir);
  }
  if (kind == "theorem2") {
    expect_keys(p, {"alpha"}, "theorem2 parameters");
    return theorem2(p.at("alpha").get<double>(), chir);
  }
  if (kind == "constant_correlation") {
    expect_keys(p, {"C"}, "constant_correlation parameters");
    return constant_correlation(p.at("C").get<double>(), chir);
  }
  if (kind == "general") {
    expect_keys(p, {"C", "anchor", "t_grid", "psi_table"}, "general parameters");
    require(p.contains("psi_table"), "general family needs a psi_table {t, psi}");
    const auto& tab = p.at("psi_table");
    expect_keys(tab, {"t", "psi"}, "psi_table");
    auto psi = psi_from_table(tab.at("t").get<std::vector<double>>(),
                              tab.at("psi").get<std::vector<double>>());
    std::vector<double> grid = p.contains("t_grid") ? p.at("t_grid").get<std::vector<double>>()
                                                    : tab.at("t").get<std::vector<double>>();
    GammaAnchor anchor = GammaAnchor::Auto;
    if (p.contains("anchor")) {
      const auto a = p.at("anchor").get<std::string>();
      require(a == "origin" || a == "unit_time" || a == "auto", "anchor must be origin|unit_time|auto");
      anchor = a == "origin" ? GammaAnchor::Origin
                             : (a == "unit_time" ? GammaAnchor::UnitTime : GammaAnchor::Auto);
    }
    auto f = solve_family_from_psi(psi, p.at("C").get<double>(), chir, grid, anchor);
    auto g = std::make_shared<General>(*f.general_);
    g->psi_table = tab;
    f.general_ = g;
    return f;
  }
  throw DomainError("unknown family kind '" + kind + "'");
}

std::function<double(double)> psi_from_table(std::vector<double> t, std::vector<double> psi) {
  require(t.size() == psi.size() && !t.empty(), "psi table: t and psi must be non-empty and equal length");
  require(std::is_sorted(t.begin(), t.end()), "psi table: t must be ordered");
  for (double v : psi) require(v >= 0.0 && v <= 1.0, "psi table values must lie in [0, 1]");
  return [t = std::move(t), psi = std::move(psi)](double s) {
    if (s <= t.front()) return psi.front();
    if (s >= t.back()) return psi.back();
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const auto i = static_cast<std::size_t>(it - t.begin());
    const double w = (s - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * psi[i - 1] + w * psi[i];
  };
}

SkewFamily solve_family_from_psi(std::function<double(double)> psi, double C, Chirality chirality,
                                 std::span<const double> t_grid, GammaAnchor anchor) {
  check_chirality_family(C);
  require(!t_grid.empty(), "solve_family_from_psi: empty time grid");
  require(std::is_sorted(t_grid.begin(), t_grid.end()) && t_grid.front() > 0.0,
          "solve_family_from_psi: time grid must be ordered and positive");
  for (double t : t_grid) {
    const double v = psi(t);
    require(v >= -1e-12 && v <= 1.0 + 1e-12, "psi must take values in [0, 1]");
  }
  const double t_max = t_grid.back();
  if (anchor == GammaAnchor::Auto) {
    const double probe = std::min(1e-9, 1e-9 * t_max);
    anchor = std::abs(psi(probe) - 1.0) < 1e-6 ? GammaAnchor::Origin : GammaAnchor::UnitTime;
  }

  auto g = std::make_shared<SkewFamily::General>();
  g->psi = std::move(psi);
  g->anchor = anchor;
  g->t_nodes.assign(t_grid.begin(), t_grid.end());
  g->gamma_nodes.resize(t_grid.size());
  if (anchor == GammaAnchor::Origin) {
    double prev_t = 0.0;
    double prev_g = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      prev_g += g->segment(prev_t, t_grid[i]);
      prev_t = t_grid[i];
      g->gamma_nodes[i] = prev_g;
    }
  } else {
    // Accumulate outwards from t = 1 in both directions.
    const auto split = static_cast<std::size_t>(
        std::lower_bound(t_grid.begin(), t_grid.end(), 1.0) - t_grid.begin());
    double prev_t = 1.0;
    double prev_g = 0.0;
    for (std::size_t i = split; i < t_grid.size(); ++i) {
      prev_g += g->segment(prev_t, t_grid[i]);
      prev_t = t_grid[i];
      g->gamma_nodes[i] = prev_g;
    }
    prev_t = 1.0;
    prev_g = 0.0;
    for (std::size_t i = split; i-- > 0;) {
      prev_g += g->segment(prev_t, t_grid[i]);
      prev_t = t_grid[i];
      g->gamma_nodes[i] = prev_g;
    }
  }

  SkewFamily f;
  f.kind_ = FamilyKind::General;
  f.chirality_ = chirality;
  f.constant_ = C;
  f.parameter_ = NAN;
  f.general_ = g;
  f.horizon_ = kInf;

  auto excess = [&](double t) {
    const double lam = C * std::exp(g->gamma(t));
    return t * lam * lam - 1.0;
  };
  double lo = 0.0;
  double hi = NAN;
  for (double t : t_grid) {
    if (excess(t) >= 0.0) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (std::isnan(hi)) {
    for (double t = t_max * 1.5; t <= 1e4 * t_max; t *= 1.5) {
      if (excess(t) >= 0.0) {
        hi = t;
        break;
      }
      lo = t;
    }
  }
  if (!std::isnan(hi)) {
    const double tol = 1e-10 * hi;
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) >= 0.0 ? hi : lo) = mid;
    }
    f.horizon_ = hi;
  }
  return f;
}

namespace {

double five_point_alpha_dot(const SkewFamily& family, double t, double h) {
  h *= std::min(t, family.validity_horizon() - t);
  return (-family.alpha(t + 2 * h) + 8 * family.alpha(t + h) - 8 * family.alpha(t - h) +
          family.alpha(t - 2 * h)) /
         (12 * h);
}

}  // namespace

double alpha_ode_residual(const SkewFamily& family, double t, double h) {
  require(t > 0.0, "ODE residual needs t > 0");
  const double a = family.alpha(t);
  const double rhs = family.psi(t) * a * (a * a + 1.0 / t) - a / t - 0.5 * a * a * a;
  return five_point_alpha_dot(family, t, h) - rhs;
}

double psi_from_alpha(const SkewFamily& family, double t, double h) {
  require(t > 0.0, "psi_from_alpha needs t > 0");
  const double a = family.alpha(t);
  require(a != 0.0, "psi is not identifiable where alpha = 0");
  const double ad = five_point_alpha_dot(family, t, h);
  return (ad + a / t + 0.5 * a * a * a) / (a * (a * a + 1.0 / t));
}

// ---------------------------------------------------------------------------

double DriftSlice::operator()(double x) const {
  switch (kind) {
    case DriftKind::Theorem1: return sigma * alpha * mills(alpha * x / sigma);
    case DriftKind::Theorem2:
    case DriftKind::GeneralClass:
      return sigma * psi * alpha * mills(alpha * (x - shift) / sigma);
    case DriftKind::OUHTransform:
      return ou_h_drift(x, lambda, chirality > 0 ? Chirality::Right : Chirality::Left);
    case DriftKind::Linear: return slope * x;
    case DriftKind::Custom: return (*custom)(x, t);
  }
  return NAN;
}

DriftSpec DriftSpec::from_family(SkewFamily family, double shift, double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "diffusion scale sigma must be > 0");
  require(std::isfinite(shift), "shift must be finite");
  DriftSpec d;
  switch (family.kind()) {
    case FamilyKind::Theorem1: d.kind_ = DriftKind::Theorem1; break;
    case FamilyKind::Theorem2: d.kind_ = DriftKind::Theorem2; break;
    default: d.kind_ = DriftKind::GeneralClass; break;
  }
  d.horizon_ = family.validity_horizon();
  d.family_ = std::make_shared<const SkewFamily>(std::move(family));
  d.shift_ = shift;
  d.sigma_ = sigma;
  d.name_ = to_string(d.kind_);
  return d;
}

DriftSpec DriftSpec::ou_h_transform(double lambda, Chirality chirality) {
  require(std::isfinite(lambda) && lambda > 0.0, "OU h-transform: lambda must be > 0");
  DriftSpec d;
  d.kind_ = DriftKind::OUHTransform;
  d.lambda_ = lambda;
  d.ou_chirality_ = chirality;
  d.name_ = "ou_h_transform";
  return d;
}

DriftSpec DriftSpec::linear(double slope, double sigma) {
  require(std::isfinite(slope), "linear drift: slope must be finite");
  require(std::isfinite(sigma) && sigma > 0.0, "diffusion scale sigma must be > 0");
  DriftSpec d;
  d.kind_ = DriftKind::Linear;
  d.slope_ = slope;
  d.sigma_ = sigma;
  d.name_ = "linear";
  return d;
}

DriftSpec DriftSpec::custom(std::function<double(double, double)> mu, double sigma, double horizon,
                            std::string name) {
  require(static_cast<bool>(mu), "custom drift: empty function");
  require(std::isfinite(sigma) && sigma > 0.0, "diffusion scale sigma must be > 0");
  DriftSpec d;
  d.kind_ = DriftKind::Custom;
  d.custom_ = std::make_shared<const std::function<double(double, double)>>(std::move(mu));
  d.sigma_ = sigma;
  d.horizon_ = horizon;
  d.name_ = std::move(name);
  return d;
}

double DriftSpec::horizon() const { return family_ ? family_->validity_horizon() : horizon_; }

Chirality DriftSpec::chirality() const {
  if (family_) return family_->chirality();
  return ou_chirality_;
}

DriftSlice DriftSpec::at(double t) const {
  if (!(t < horizon())) {
    std::ostringstream os;
    os << "drift evaluated at t = " << t << ", at or beyond its horizon " << horizon();
    throw DomainError(os.str());
  }
  DriftSlice s;
  s.kind = kind_;
  s.sigma = sigma_;
  s.shift = shift_;
  s.t = t;
  switch (kind_) {
    case DriftKind::Theorem1:
    case DriftKind::Theorem2:
    case DriftKind::GeneralClass:
      s.psi = family_->psi(t);
      s.alpha = family_->alpha(t);
      break;
    case DriftKind::OUHTransform:
      s.lambda = lambda_;
      s.chirality = sign(ou_chirality_);
      break;
    case DriftKind::Linear: s.slope = slope_; break;
    case DriftKind::Custom: s.custom = custom_.get(); break;
  }
  return s;
}

DriftSpec DriftSpec::mirrored() const {
  DriftSpec d = *this;
  if (family_) {
    d.family_ = std::make_shared<const SkewFamily>(family_->with_chirality(flip(family_->chirality())));
  } else if (kind_ == DriftKind::OUHTransform) {
    d.ou_chirality_ = flip(ou_chirality_);
  } else {
    throw DomainError("only family and OU drifts have a mirror image");
  }
  return d;
}

nlohmann::json DriftSpec::to_json() const {
  nlohmann::json j{{"kind", to_string(kind_)}, {"sigma", sigma_}};
  switch (kind_) {
    case DriftKind::Theorem1:
    case DriftKind::Theorem2:
    case DriftKind::GeneralClass:
      j["family"] = family_->to_json();
      j["shift"] = shift_;
      break;
    case DriftKind::OUHTransform:
      j["lambda"] = lambda_;
      j["chirality"] = static_cast<int>(ou_chirality_);
      break;
    case DriftKind::Linear: j["slope"] = slope_; break;
    case DriftKind::Custom: j["name"] = name_; break;
  }
  return j;
}

DriftSpec DriftSpec::from_json(const nlohmann::json& j) {
  expect_keys(j, {"kind", "sigma", "family", "shift", "lambda", "chirality", "slope"},
              "drift descriptor");
  const auto kind = j.at("kind").get<std::string>();
  const double sigma = j.value("sigma", 1.0);
  if (kind == "theorem1" || kind == "theorem2" || kind == "general") {
    require(j.contains("family"), "family drift needs a 'family' descriptor");
    auto fam = SkewFamily::from_json(j.at("family"));
    auto d = from_family(std::move(fam), j.value("shift", 0.0), sigma);
    require(to_string(d.kind()) == kind, "drift kind does not match its family kind");
    return d;
  }
  if (kind == "ou_h_transform") {
    return ou_h_transform(j.at("lambda").get<double>(), chirality_from_int(j.value("chirality", 1)));
  }
  if (kind == "linear") return linear(j.value("slope", 0.0), sigma);
  throw DomainError("drift kind '" + kind + "' cannot be built from JSON");
}

double drift_value(const DriftSpec& spec, double x, double t) { return spec.value(x, t); }

}  // namespace skewdiff
