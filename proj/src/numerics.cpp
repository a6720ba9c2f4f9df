#include "hetrx/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "hetrx/errors.hpp"

namespace hetrx::numerics {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)

// Switch point between exp(x^2)*erfc(x) and the continued fraction.
constexpr double kErfcxContinuedFractionFrom = 5.0;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + ": non-finite argument");
  }
}

// exp(x^2) with x^2 split into hi + lo so the rounding of the square does
// not leak into the result for |x| up to ~26.
double exp_square(double x) {
  const double hi = x * x;
  const double lo = std::fma(x, x, -hi);
  return std::exp(hi) * (1.0 + lo);
}

// Lentz evaluation of erfcx(x) = 1/(sqrt(pi) (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))).
double erfcx_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi / f;
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
};

struct ByError {
  bool operator()(const Segment& lhs, const Segment& rhs) const {
    return lhs.error < rhs.error;
  }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::fabs(kronrod - gauss)};
}

// kf*rT*sin(x) + Dv*(x cos x - sin x); zero exactly at the eigenvalues x = lambda*rT.
double eigen_function(double x, double kf_rt, double d_v) {
  double xcos_minus_sin;
  if (std::fabs(x) < 0.1) {
    const double x2 = x * x;
    xcos_minus_sin = -x * x2 * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 / 840.0));
  } else {
    xcos_minus_sin = x * std::cos(x) - std::sin(x);
  }
  return kf_rt * std::sin(x) + d_v * xcos_minus_sin;
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw DomainError("quadrature tolerances must be positive");
  }
  if (max_subdivisions < 1) {
    throw DomainError("quadrature needs at least one subdivision");
  }
}

double erfc_stable(double x) {
  require_finite(x, "erfc_stable");
  return std::erfc(x);
}

double erfcx(double x) {
  require_finite(x, "erfcx");
  if (x < 0.0) {
    return 2.0 * exp_square(x) - erfcx(-x);
  }
  if (x < kErfcxContinuedFractionFrom) {
    return exp_square(x) * std::erfc(x);
  }
  return erfcx_continued_fraction(x);
}

double exp_erfc(double a, double b) {
  require_finite(a, "exp_erfc");
  require_finite(b, "exp_erfc");
  if (b < 0.0) {
    return std::exp(a) * std::erfc(b);
  }
  const double hi = b * b;
  const double lo = std::fma(b, b, -hi);
  return std::exp((a - hi) - lo) * erfcx(b);
}

double exp_erfc_reduced(double reduced, double a, double b) {
  if (b < 0.0) {
    return std::exp(a) * std::erfc(b);
  }
  return std::exp(reduced) * erfcx(b);
}

double sph_j0(double x) {
  if (std::fabs(x) < 1e-3) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

double sph_j0_prime(double x) {
  if (std::fabs(x) < 0.1) {
    const double x2 = x * x;
    return -x * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 / 840.0));
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

EigenvalueSet solve_eigenvalues(double r_tx, double d_v, double k_f, int n_max,
                                double tol) {
  if (!(r_tx > 0.0) || !(d_v > 0.0) || !(k_f > 0.0)) {
    throw DomainError("solve_eigenvalues: r_T, D_v and k_f must be positive");
  }
  if (n_max < 1 || !(tol > 0.0)) {
    throw DomainError("solve_eigenvalues: need n_max >= 1 and tol > 0");
  }
  const double kf_rt = k_f * r_tx;
  auto g = [&](double x) { return eigen_function(x, kf_rt, d_v); };

  EigenvalueSet out;
  out.truncation = n_max;
  out.roots.reserve(n_max);
  out.residuals.reserve(n_max);
  for (int n = 1; n <= n_max; ++n) {
    double lo = (n - 1) * std::numbers::pi;
    const double hi = n * std::numbers::pi;
    if (n == 1) {
      // g(0) = 0 exactly; g > 0 on (0, sqrt(3 kf rT / Dv)).
      lo = std::min(1e-6, 0.5 * std::sqrt(3.0 * kf_rt / d_v));
    }
    const double glo = g(lo);
    const double ghi = g(hi);
    if (!(glo * ghi < 0.0)) {
      throw SolverError("solve_eigenvalues: no sign change in bracket for n = " +
                        std::to_string(n));
    }
    boost::uintmax_t max_iter = 200;
    boost::math::tools::eps_tolerance<double> stop(std::numeric_limits<double>::digits - 1);
    const auto [x0, x1] =
        boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, stop, max_iter);
    const double x = 0.5 * (x0 + x1);
    const double lambda = x / r_tx;
    const double residual =
        std::fabs(-d_v * lambda * sph_j0_prime(x) - k_f * sph_j0(x));
    if (residual > tol) {
      throw SolverError("solve_eigenvalues: residual " + std::to_string(residual) +
                        " above tolerance for n = " + std::to_string(n));
    }
    out.roots.push_back(lambda);
    out.residuals.push_back(residual);
  }
  return out;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureSpec& spec) {
  const double points[] = {a, b};
  return integrate(f, points, spec);
}

QuadratureResult integrate(const std::function<double(double)>& f,
                           std::span<const double> points, const QuadratureSpec& spec) {
  spec.validate();
  if (points.size() < 2) throw DomainError("integrate: need at least two points");
  for (double x : points) {
    if (!std::isfinite(x)) throw DomainError("integrate: limits must be finite");
  }
  const double a = points.front();
  const double b = points.back();
  if (a == b) return {};
  if (b < a) {
    std::vector<double> reversed(points.rbegin(), points.rend());
    QuadratureResult r = integrate(f, reversed, spec);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<Segment, std::vector<Segment>, ByError> heap;
  double total = 0.0;
  double total_error = 0.0;
  int subdivisions = 0;
  double prev = a;
  for (std::size_t i = 1; i < points.size(); ++i) {
    // Interior breakpoints outside (prev, b] or out of order are ignored.
    const double x = std::min(points[i], b);
    if (!(x > prev) && i + 1 < points.size()) continue;
    if (!(x > prev)) break;
    const Segment s = gauss_kronrod(f, prev, x);
    total += s.value;
    total_error += s.error;
    heap.push(s);
    ++subdivisions;
    prev = x;
  }

  auto tolerance = [&] { return std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)); };
  while (total_error > tolerance() && subdivisions < spec.max_subdivisions) {
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval at roundoff scale
    heap.pop();
    const Segment left = gauss_kronrod(f, worst.a, mid);
    const Segment right = gauss_kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }

  // Re-sum from the segments to avoid drift of the running totals.
  std::vector<Segment> segments;
  segments.reserve(heap.size());
  while (!heap.empty()) {
    segments.push_back(heap.top());
    heap.pop();
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& l, const Segment& r) { return l.a < r.a; });
  QuadratureResult result;
  for (const auto& s : segments) {
    result.value += s.value;
    result.error_estimate += s.error;
  }
  result.subdivisions = subdivisions;
  result.converged = result.error_estimate <=
                     std::max(spec.abs_tol, spec.rel_tol * std::fabs(result.value));
  return result;
}

}  // namespace hetrx::numerics
