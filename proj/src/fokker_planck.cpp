#include "skewdiff/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "skewdiff/analytic_dists.hpp"

namespace skewdiff {

void FpConfig::validate(double x0) const {
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max, "FP grid: need x_min < x_max");
  require(n_x >= 64, "FP grid: n_x must be >= 64");
  require(n_t >= 2, "FP grid: n_t must be >= 2");
  require(theta >= 0.0 && theta <= 1.0, "FP grid: theta must lie in [0, 1]");
  require(x_min < x0 && x0 < x_max, "FP grid: x0 must lie inside (x_min, x_max)");
  const double w = init_width > 0.0 ? init_width : 4.0 * dx();
  const double lost = std_normal_cdf((x_min - x0) / w) + std_normal_cdf((x0 - x_max) / w);
  require(lost < 1e-10, "FP grid: the initial mollifier is not contained in the domain");
}

namespace {

// Face flux F = a Q_left + b Q_right.
struct Face {
  double a, b;
};

void faces_at(const DriftSlice& mu, const std::vector<double>& xf, double D, double dx,
              std::vector<Face>& out, std::size_t& upwind) {
  const double dd = D / dx;
  const double pe_scale = dx / (2.0 * D);  // |mu| dx / sigma^2
  for (std::size_t f = 0; f < xf.size(); ++f) {
    const double m = mu(xf[f]);
    if (!std::isfinite(m)) {
      std::ostringstream os;
      os << "drift is not finite at x = " << xf[f] << ", t = " << mu.t;
      throw NumericalError(os.str());
    }
    if (std::abs(m) * pe_scale > 2.0) {
      ++upwind;
      out[f] = m > 0.0 ? Face{m + dd, -dd} : Face{dd, m - dd};
    } else {
      out[f] = Face{0.5 * m + dd, 0.5 * m - dd};
    }
  }
}

// (L Q)_i = (F_{i-1/2} - F_{i+1/2}) / dx with zero flux at both ends.
void apply_L(const std::vector<Face>& F, const std::vector<double>& q, double dx,
             std::vector<double>& out) {
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? F[i - 1].a * q[i - 1] + F[i - 1].b * q[i] : 0.0;
    const double right = i + 1 < n ? F[i].a * q[i] + F[i].b * q[i + 1] : 0.0;
    out[i] = (left - right) / dx;
  }
}

}  // namespace

DensityGrid solve_kfe(const DriftSpec& drift, double sigma, double x0, const TimeGrid& grid,
                      const FpConfig& cfg, FpDiagnostics* diag) {
  grid.validate();
  cfg.validate(x0);
  require(std::isfinite(sigma) && sigma > 0.0, "FP solve: sigma must be > 0");
  const std::size_t n = cfg.n_x;
  const double dx = cfg.dx();
  const double w = cfg.init_width > 0.0 ? cfg.init_width : 4.0 * dx;
  const double D = 0.5 * sigma * sigma;

  const double t0 = grid.t_start + (cfg.shift_clock_by_mollifier ? w * w : 0.0);
  const double t1 = grid.t_stop();
  require(t1 > t0, "FP solve: the time grid is shorter than the mollifier's clock shift");
  require(t1 < drift.horizon(), "FP solve: the time grid reaches the drift's horizon");
  const auto n_steps = static_cast<std::size_t>(std::max<long long>(1, std::llround((t1 - t0) / grid.dt())));
  const double dt = (t1 - t0) / static_cast<double>(n_steps);

  std::vector<double> x(n), xf(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = cfg.x_min + static_cast<double>(i) * dx;
  for (std::size_t f = 0; f + 1 < n; ++f) xf[f] = x[f] + 0.5 * dx;

  std::vector<double> q(n);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = gaussian_pdf(x[i], x0, w * w);
    mass += q[i] * dx;
  }
  for (auto& v : q) v /= mass;

  const std::size_t n_snap = std::min(cfg.n_t, n_steps + 1);
  std::vector<std::size_t> snap_steps(n_snap);
  for (std::size_t j = 0; j < n_snap; ++j) {
    snap_steps[j] = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(n_steps) / static_cast<double>(n_snap - 1)));
  }

  DensityGrid out;
  out.x_nodes = x;
  out.values.reserve(n_snap * n);
  auto snapshot = [&](double t) {
    out.t_nodes.push_back(t);
    out.values.insert(out.values.end(), q.begin(), q.end());
  };
  std::size_t next_snap = 0;
  if (snap_steps[0] == 0) {
    snapshot(t0);
    ++next_snap;
  }

  FpDiagnostics dg;
  std::vector<Face> F_old(n - 1), F_new(n - 1);
  std::vector<double> rhs(n), Lq(n), lo(n), di(n), up(n), cp(n);
  faces_at(drift.at(t0), xf, D, dx, F_old, dg.upwind_faces);

  const double theta = cfg.theta;
  double prev_mass = 1.0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_new = t0 + static_cast<double>(k + 1) * dt;
    faces_at(drift.at(t_new), xf, D, dx, F_new, dg.upwind_faces);

    apply_L(F_old, q, dx, Lq);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = q[i] + (1.0 - theta) * dt * Lq[i];

    // (I - theta dt L_new) q_new = rhs, tridiagonal.
    const double c = theta * dt / dx;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 1.0;
      lo[i] = up[i] = 0.0;
      if (i > 0) {
        lo[i] = -c * F_new[i - 1].a;
        d -= c * F_new[i - 1].b;
      }
      if (i + 1 < n) {
        d += c * F_new[i].a;
        up[i] = c * F_new[i].b;
      }
      di[i] = d;
    }
    cp[0] = up[0] / di[0];
    rhs[0] /= di[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = di[i] - lo[i] * cp[i - 1];
      cp[i] = up[i] / m;
      rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / m;
    }
    q[n - 1] = rhs[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) q[i] = rhs[i] - cp[i] * q[i + 1];

    double m_now = 0.0;
    double q_min = 0.0;
    for (double v : q) {
      m_now += v * dx;
      q_min = std::min(q_min, v);
    }
    dg.max_mass_drift = std::max(dg.max_mass_drift, std::abs(m_now - prev_mass));
    dg.min_value = std::min(dg.min_value, q_min);
    if (q_min < -1e-10 || std::abs(m_now - 1.0) > 1e-6 || !std::isfinite(m_now)) {
      std::ostringstream os;
      os << "FP solve unstable at t = " << t_new << ": min value " << q_min << ", mass " << m_now
         << " (reduce dt or refine the grid)";
      throw NumericalError(os.str());
    }
    prev_mass = m_now;
    std::swap(F_old, F_new);
    if (next_snap < n_snap && snap_steps[next_snap] == k + 1) {
      snapshot(t_new);
      ++next_snap;
    }
  }
  dg.steps = n_steps;
  if (diag) *diag = dg;
  out.recompute_mass();
  return out;
}

// ---------------------------------------------------------------------------

double backward_residual_brownian_h(const std::function<double(double)>& alpha,
                                    const std::function<double(double)>& alpha_dot,
                                    std::span<const double> xs, std::span<const double> ts) {
  double worst = 0.0;
  for (double t : ts) {
    const double a = alpha(t);
    const double ad = alpha_dot(t);
    for (double x : xs) {
      const double p = std_normal_pdf(a * x);
      const double h_t = p * ad * x;
      const double h_xx = -a * a * a * x * p;
      worst = std::max(worst, std::abs(h_t + 0.5 * h_xx));
    }
  }
  return worst;
}

double backward_residual_brownian_h(const SkewFamily& family, std::span<const double> xs,
                                    std::span<const double> ts) {
  for (double t : ts) {
    require(family.psi(t) == 1.0, "backward residual: h = Phi(alpha_t x) is harmonic only when psi = 1");
  }
  return backward_residual_brownian_h([&](double t) { return family.alpha(t); },
                                      [&](double t) { return family.alpha_dot(t); }, xs, ts);
}

double backward_residual_ou_h(double lambda, Chirality chirality, std::span<const double> xs,
                              std::span<const double> ts, bool keep_time_factor) {
  require(lambda > 0.0, "backward residual: lambda must be > 0");
  const double c = sign(chirality);
  const double k = std::sqrt(lambda / std::numbers::pi);
  double worst = 0.0;
  for (double t : ts) {
    const double e = keep_time_factor ? std::exp(-lambda * t) : 1.0;
    const double e_t = keep_time_factor ? -lambda : 0.0;
    for (double x : xs) {
      const double h = e * std::exp(lambda * x * x) * std_normal_cdf(c * std::sqrt(2.0 * lambda) * x);
      const double h_t = e_t * h;
      const double h_x = 2.0 * lambda * x * h + c * k * e;
      const double h_xx = (2.0 * lambda + 4.0 * lambda * lambda * x * x) * h + 2.0 * lambda * x * c * k * e;
      worst = std::max(worst, std::abs(h_t - lambda * x * h_x + 0.5 * h_xx));
    }
  }
  return worst;
}

}  // namespace skewdiff
