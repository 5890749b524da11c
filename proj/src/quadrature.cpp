#include "skewdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "skewdiff/common.hpp"

namespace skewdiff {

QuadratureResult integrate(const RealFn& f, double a, double b, double rel_tol, double abs_tol) {
  using boost::math::quadrature::gauss_kronrod;
  if (a == b) return {0.0, 0.0};
  double err = 0.0;
  double l1 = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol, &err, &l1);
  if (!std::isfinite(v)) {
    throw NumericalError("quadrature produced a non-finite value");
  }
  const double budget = std::max(abs_tol, rel_tol * std::abs(v));
  if (err > 100.0 * budget && err > 1e-10 * l1) {
    std::ostringstream os;
    os << "quadrature did not converge on [" << a << ", " << b << "]: estimate " << v
       << ", error " << err;
    throw NumericalError(os.str());
  }
  return {v, err};
}

QuadratureResult integrate_pieces(const RealFn& f, std::span<const double> breakpoints,
                                  double rel_tol, double abs_tol) {
  QuadratureResult total{0.0, 0.0};
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    const auto r = integrate(f, breakpoints[i - 1], breakpoints[i], rel_tol, abs_tol);
    total.value += r.value;
    total.error_estimate += r.error_estimate;
  }
  return total;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

TabulatedCdf::TabulatedCdf(const RealFn& pdf, double lo, double hi, int n_cells)
    : lo_(lo), h_((hi - lo) / n_cells) {
  require(hi > lo && n_cells > 0, "TabulatedCdf: need hi > lo and n_cells > 0");
  using boost::math::quadrature::gauss;
  cum_.resize(n_cells + 1);
  pdf_.resize(n_cells + 1);
  cum_[0] = 0.0;
  for (int i = 0; i <= n_cells; ++i) pdf_[i] = pdf(lo + i * h_);
  for (int i = 0; i < n_cells; ++i) {
    const double a = lo + i * h_;
    cum_[i + 1] = cum_[i] + gauss<double, 20>::integrate(pdf, a, a + h_);
  }
}

double TabulatedCdf::operator()(double x) const {
  const double u = (x - lo_) / h_;
  if (u <= 0.0) return 0.0;
  const auto n = static_cast<double>(cum_.size() - 1);
  if (u >= n) return cum_.back();
  const auto i = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(i);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double v = (2 * s3 - 3 * s2 + 1) * cum_[i] + (s3 - 2 * s2 + s) * h_ * pdf_[i] +
                   (-2 * s3 + 3 * s2) * cum_[i + 1] + (s3 - s2) * h_ * pdf_[i + 1];
  return std::clamp(v, cum_[i], cum_[i + 1]);
}

}  // namespace skewdiff
