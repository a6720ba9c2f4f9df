#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hetrx::numerics {

/// Tolerances for adaptive quadrature.
struct QuadratureSpec {
  double rel_tol = 1e-8;
  double abs_tol = 1e-15;
  int max_subdivisions = 4000;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
  /// False when the subdivision budget ran out before the tolerance was met.
  bool converged = true;
};

/// Roots of -D_v*lambda*j0'(lambda*r_T) = k_f*j0(lambda*r_T), one per
/// bracket ((n-1)*pi/r_T, n*pi/r_T).
struct EigenvalueSet {
  std::vector<double> roots;      // 1/um, strictly increasing
  std::vector<double> residuals;  // |lhs - rhs| at each root
  int truncation = 0;
};

/// erfc(x) for finite x. Throws DomainError otherwise.
double erfc_stable(double x);

/// Scaled complementary error function exp(x^2)*erfc(x).
double erfcx(double x);

/// exp(a)*erfc(b) without intermediate overflow or underflow.
double exp_erfc(double a, double b);

/// exp(reduced)*erfcx(b), falling back to exp(a)*erfc(b) when b < 0.
/// `reduced` must equal a - b^2; callers pass it in closed form so that the
/// large cancelling exponents never meet in floating point.
double exp_erfc_reduced(double reduced, double a, double b);

/// Spherical Bessel function j0(x) = sin(x)/x.
double sph_j0(double x);

/// Derivative j0'(x) = (x cos x - sin x)/x^2, accurate near x = 0.
double sph_j0_prime(double x);

EigenvalueSet solve_eigenvalues(double r_tx, double d_v, double k_f, int n_max,
                                double tol = 1e-10);

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureSpec& spec = {});

/// As above over [points.front(), points.back()], with the interior points
/// used as initial breakpoints (e.g. at known boundary layers).
QuadratureResult integrate(const std::function<double(double)>& f,
                           std::span<const double> points, const QuadratureSpec& spec = {});

}  // namespace hetrx::numerics
