#include "skewdiff/ou_skew.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/quadrature.hpp"
#include "skewdiff/rng.hpp"

namespace skewdiff {

void OuSkewSpec::validate() const {
  require(std::isfinite(lambda) && lambda > 0.0, "OU rate lambda must be > 0");
  require(std::isfinite(x0), "OU initial value must be finite");
}

double ou_h_drift(double x, double lambda, Chirality chirality) {
  const double c = sign(chirality);
  const double r = std::sqrt(2.0 * lambda);
  return lambda * x + c * r * mills(c * r * x);
}

double drift_theorem4(double x, const OuSkewSpec& spec) {
  spec.validate();
  return ou_h_drift(x, spec.lambda, spec.chirality);
}

namespace {

// int_{-inf}^{y} e^{-lambda s^2} ds by quadrature.
double gauss_integral(double y, double lambda) {
  auto f = [lambda](double s) { return std::exp(-lambda * s * s); };
  return integrate(f, -kInf, y, 1e-14, 1e-300).value;
}

}  // namespace

double drift_theorem4_as_typeset(double x, const OuSkewSpec& spec) {
  spec.validate();
  const double c = sign(spec.chirality);
  return spec.lambda * x + std::exp(-spec.lambda * x * x) / gauss_integral(c * x, spec.lambda);
}

double log_h_lambda(double x, double t, const OuSkewSpec& spec) {
  spec.validate();
  const double c = sign(spec.chirality);
  return -spec.lambda * t + spec.lambda * x * x +
         log_std_normal_cdf(c * std::sqrt(2.0 * spec.lambda) * x);
}

double h_lambda(double x, double t, const OuSkewSpec& spec) {
  const double lh = log_h_lambda(x, t, spec);
  if (lh > 700.0) {
    std::ostringstream os;
    os << "h_lambda overflows at x = " << x << ", t = " << t;
    throw NumericalError(os.str());
  }
  return std::exp(lh);
}

OuMixtureProbability ou_mixture_probability(double lambda, double x) {
  require(std::isfinite(lambda) && lambda > 0.0, "OU rate lambda must be > 0");
  const double a = std::sqrt(2.0 * lambda) * x;
  if (a >= 0.0) {
    const double pm = std_normal_cdf(-a);
    return {pm, 1.0 - pm};
  }
  const double pp = std_normal_cdf(a);
  return {1.0 - pp, pp};
}

double ou_stationary_tpd(double x, double t, double x0, double lambda) {
  require(t > 0.0 && lambda > 0.0, "OU transition density needs t > 0 and lambda > 0");
  const double var = -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
  return gaussian_pdf(x, x0 * std::exp(-lambda * t), var);
}

double ou_repulsive_tpd(double x, double t, double x0, double lambda) {
  require(t > 0.0 && lambda > 0.0, "OU transition density needs t > 0 and lambda > 0");
  const double var = std::expm1(2.0 * lambda * t) / (2.0 * lambda);
  return gaussian_pdf(x, x0 * std::exp(lambda * t), var);
}

double ou_h_ratio_density(double x, double t, double lambda, double x0, Chirality chirality) {
  const double c = sign(chirality);
  const double ratio = std::exp(-lambda * t + lambda * (x * x - x0 * x0)) *
                       gauss_integral(c * x, lambda) / gauss_integral(c * x0, lambda);
  return ou_stationary_tpd(x, t, x0, lambda) * ratio;
}

double ou_mixture_density(double x, double t, double lambda, double x0, IdentityPlacement placement) {
  const auto p = ou_mixture_probability(lambda, x0);
  const OuSkewSpec plus{lambda, Chirality::Right, x0};
  const OuSkewSpec minus{lambda, Chirality::Left, x0};
  const double base = ou_stationary_tpd(x, t, x0, lambda);
  const double qp = base * h_lambda(x, t, plus) / h_lambda(x0, 0.0, plus);
  const double qm = base * h_lambda(x, t, minus) / h_lambda(x0, 0.0, minus);
  double m = p.p_plus * qp + p.p_minus * qm;
  if (placement == IdentityPlacement::Twice) m *= std::exp(-lambda * t);
  return m;
}

double ou_identity_residual(double lambda, double x0, double t, std::span<const double> xs,
                            IdentityPlacement placement, bool stationary_target) {
  double worst = 0.0;
  for (double x : xs) {
    const double target = stationary_target ? ou_stationary_tpd(x, t, x0, lambda)
                                            : ou_repulsive_tpd(x, t, x0, lambda);
    worst = std::max(worst, std::abs(ou_mixture_density(x, t, lambda, x0, placement) - target));
  }
  return worst;
}

std::pair<PathEnsemble, PathEnsemble> simulate_ou_skew_noise(double lambda, double x0, double T,
                                                             const TimeGrid& grid,
                                                             const SimConfig& cfg) {
  require(std::isfinite(lambda) && lambda >= 0.0, "OU rate lambda must be >= 0");
  require(std::isfinite(x0), "initial value must be finite");
  const auto zdrift = DriftSpec::from_family(SkewFamily::theorem1(T, Chirality::Right));
  grid.validate();
  cfg.validate();
  require(grid.time(grid.n_steps - 1) < T, "time grid reaches the driver's horizon T");
  PathEnsemble ez;
  std::vector<DriftSlice> slices(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) slices[k] = zdrift.at(grid.time(k));

  ez.grid = grid;
  ez.seed = cfg.seed;
  ez.n_paths = cfg.n_paths;
  for (std::size_t k = 0; k < grid.n_steps; k += cfg.record_every) ez.steps.push_back(k);
  ez.steps.push_back(grid.n_steps);
  ez.values.assign(ez.n_paths * ez.steps.size(), 0.0);
  PathEnsemble ex = ez;

  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const std::size_t m = ez.steps.size();
  std::atomic<std::uint64_t> clamps{0};
  parallel_for(cfg.n_paths, [&](std::size_t b, std::size_t end) {
    std::uint64_t local = 0;
    for (std::size_t i = b; i < end; ++i) {
      const std::uint64_t noise_path = cfg.antithetic ? i / 2 : i;
      double z_sign = (cfg.antithetic && (i & 1)) ? -1.0 : 1.0;
      if (cfg.negate_noise) z_sign = -z_sign;
      PathNoise noise(cfg.seed, noise_path, cfg.stream);
      double* rz = ez.values.data() + i * m;
      double* rx = ex.values.data() + i * m;
      double z = 0.0, x = x0;
      rz[0] = z;
      rx[0] = x;
      std::size_t col = 1;
      for (std::size_t k = 0; k < grid.n_steps; ++k) {
        double inc = slices[k](z) * dt;
        if (std::abs(inc) > cfg.drift_clamp) {
          inc = std::copysign(cfg.drift_clamp, inc);
          ++local;
        }
        const double dz = inc + sdt * z_sign * noise.normal(k);
        x += -lambda * x * dt + dz;
        z += dz;
        if (!std::isfinite(x) || !std::isfinite(z)) {
          std::ostringstream os;
          os << "non-finite state on path " << i << " at step " << k;
          throw NumericalError(os.str());
        }
        if (col < m && ez.steps[col] == k + 1) {
          rz[col] = z;
          rx[col] = x;
          ++col;
        }
      }
    }
    clamps += local;
  });
  ez.clamp_events = ex.clamp_events = clamps.load();
  ez.total_steps = ex.total_steps = static_cast<std::uint64_t>(cfg.n_paths) * grid.n_steps;
  return {std::move(ex), std::move(ez)};
}

double lamperti_skew_map(const std::function<double(double, double)>& sigma, double z, double t,
                         double anchor) {
  require(std::isfinite(z) && std::isfinite(anchor), "Lamperti map: z and anchor must be finite");
  auto f = [&](double u) {
    const double s = sigma(u, t);
    if (!(s > 0.0)) {
      std::ostringstream os;
      os << "Lamperti map: sigma(" << u << ", " << t << ") = " << s << " is not positive";
      throw DomainError(os.str());
    }
    return 1.0 / s;
  };
  return integrate(f, anchor, z, 1e-13, 1e-15).value;
}

double lamperti_rn_factor(const std::function<double(double, double)>& sigma, double z, double t,
                          double alpha_t, double anchor) {
  return std_normal_cdf(alpha_t * lamperti_skew_map(sigma, z, t, anchor));
}

}  // namespace skewdiff
