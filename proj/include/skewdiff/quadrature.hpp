#pragma once

#include <functional>
#include <span>
#include <vector>

namespace skewdiff {

using RealFn = std::function<double(double)>;

struct QuadratureResult {
  double value;
  double error_estimate;
};

/// Adaptive Gauss-Kronrod (61 point) on [a, b]; either bound may be infinite.
/// Throws NumericalError when the error estimate exceeds
/// max(abs_tol, rel_tol * |value|) by more than a factor of 100.
QuadratureResult integrate(const RealFn& f, double a, double b, double rel_tol = 1e-12,
                           double abs_tol = 1e-14);

/// Convenience: integrate over consecutive breakpoints, summing the pieces.
QuadratureResult integrate_pieces(const RealFn& f, std::span<const double> breakpoints,
                                  double rel_tol = 1e-12, double abs_tol = 1e-14);

/// Composite trapezoid on an arbitrary ordered grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// A cdf tabulated from a pdf: exact cell integrals (Gauss-Legendre) plus a
/// cubic Hermite interpolant that uses the pdf as slope, clamped per cell.
/// Below `lo` it returns 0 and above `hi` it returns the total mass.
class TabulatedCdf {
 public:
  TabulatedCdf(const RealFn& pdf, double lo, double hi, int n_cells);

  double operator()(double x) const;
  double total_mass() const { return cum_.back(); }

 private:
  double lo_;
  double h_;
  std::vector<double> cum_;
  std::vector<double> pdf_;
};

}  // namespace skewdiff
