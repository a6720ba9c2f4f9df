#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>
#include <mpfr.h>

#include "hetrx/errors.hpp"
#include "hetrx/numerics.hpp"

using namespace hetrx;
namespace nm = hetrx::numerics;

namespace {

// Arbitrary-precision references.
struct Mp {
  mpfr_t v;
  Mp() { mpfr_init2(v, 320); }
  explicit Mp(double x) : Mp() { mpfr_set_d(v, x, MPFR_RNDN); }
  ~Mp() { mpfr_clear(v); }
  Mp(const Mp&) = delete;
  Mp& operator=(const Mp&) = delete;
  double get() const { return mpfr_get_d(v, MPFR_RNDN); }
};

struct WideExponents {
  WideExponents() {
    mpfr_set_emax(mpfr_get_emax_max());
    mpfr_set_emin(mpfr_get_emin_min());
  }
} const wide_exponents;

double mp_erfc(double x) {
  Mp a(x), r;
  mpfr_erfc(r.v, a.v, MPFR_RNDN);
  return r.get();
}

double mp_exp_erfc(double a, double b) {
  Mp ea(a), eb(b), x, y;
  mpfr_exp(x.v, ea.v, MPFR_RNDN);
  mpfr_erfc(y.v, eb.v, MPFR_RNDN);
  mpfr_mul(x.v, x.v, y.v, MPFR_RNDN);
  return x.get();
}

double mp_erfcx(double x) {
  Mp a(x), sq, e;
  mpfr_sqr(sq.v, a.v, MPFR_RNDN);
  mpfr_exp(sq.v, sq.v, MPFR_RNDN);
  mpfr_erfc(e.v, a.v, MPFR_RNDN);
  mpfr_mul(sq.v, sq.v, e.v, MPFR_RNDN);
  return sq.get();
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

// Fusion boundary condition residual, written out independently.
double boundary(double lambda, double r_tx, double d_v, double k_f) {
  const double x = lambda * r_tx;
  const double j0 = std::sin(x) / x;
  const double dj0 = (x * std::cos(x) - std::sin(x)) / (x * x);
  return -d_v * lambda * dj0 - k_f * j0;
}

// Roots by a fine sign scan plus bisection in each bracket.
std::vector<double> scan_roots(double r_tx, double d_v, double k_f, int n) {
  std::vector<double> roots;
  for (int k = 1; k <= n; ++k) {
    const double lo = (k - 1) * std::numbers::pi / r_tx;
    const double hi = k * std::numbers::pi / r_tx;
    const int m = 4000;
    double prev_x = lo + (hi - lo) * 1e-9;
    double prev = boundary(prev_x, r_tx, d_v, k_f);
    for (int i = 1; i <= m; ++i) {
      const double x = lo + (hi - lo) * (i == m ? 1.0 - 1e-12 : static_cast<double>(i) / m);
      const double g = boundary(x, r_tx, d_v, k_f);
      if ((prev < 0) != (g < 0)) {
        double a = prev_x, b = x, ga = prev;
        for (int it = 0; it < 200; ++it) {
          const double c = 0.5 * (a + b);
          const double gc = boundary(c, r_tx, d_v, k_f);
          if ((gc < 0) == (ga < 0)) {
            a = c;
            ga = gc;
          } else {
            b = c;
          }
        }
        roots.push_back(0.5 * (a + b));
        break;
      }
      prev_x = x;
      prev = g;
    }
  }
  return roots;
}

}  // namespace

TEST_CASE("erfc at 1 matches the arbitrary-precision value") {
  CHECK(rel(nm::erfc_stable(1.0), mp_erfc(1.0)) < 1e-15);
}

TEST_CASE("erfc across its range") {
  for (double x : {-5.0, -1.3, -0.2, 0.0, 1e-8, 0.4, 0.9, 2.5, 4.99, 5.01, 8.0, 15.0, 26.0}) {
    CAPTURE(x);
    CHECK(rel(nm::erfc_stable(x), mp_erfc(x)) < 4e-15);
  }
}

TEST_CASE("erfcx for large arguments") {
  for (double x : {0.5, 3.0, 5.0, 7.0, 30.0, 1e3, 1e5}) {
    CAPTURE(x);
    CHECK(rel(nm::erfcx(x), mp_erfcx(x)) < 1e-14);
  }
}

TEST_CASE("exp_erfc avoids overflow where exp(a) alone overflows") {
  CHECK(std::isinf(std::exp(1000.0)));
  CHECK(rel(nm::exp_erfc(1000.0, 40.0), mp_exp_erfc(1000.0, 40.0)) < 1e-12);
  CHECK(rel(nm::exp_erfc(-3.0, -2.0), mp_exp_erfc(-3.0, -2.0)) < 1e-14);
  CHECK(rel(nm::exp_erfc(2.0, 0.5), mp_exp_erfc(2.0, 0.5)) < 1e-14);
}

TEST_CASE("exp_erfc_reduced with the reduced exponent in closed form") {
  const double a = 1500.0, b = 38.0;
  CHECK(rel(nm::exp_erfc_reduced(a - b * b, a, b), mp_exp_erfc(a, b)) < 1e-12);
  CHECK(rel(nm::exp_erfc_reduced(-1.0 - 0.25, -1.0, -0.5), mp_exp_erfc(-1.0, -0.5)) < 1e-14);
}

TEST_CASE("non-finite arguments are rejected") {
  CHECK_THROWS_AS(nm::erfc_stable(NAN), DomainError);
  CHECK_THROWS_AS(nm::erfcx(INFINITY), DomainError);
}

TEST_CASE("spherical Bessel j0 and its derivative near zero") {
  for (double x : {1e-9, 1e-4, 0.01, 0.3, 1.0, 2.0}) {
    CAPTURE(x);
    // Taylor series references, summed to convergence.
    double j = 0.0, dj = 0.0, term = 1.0;
    for (int k = 0; k < 40; ++k) {
      if (k > 0) term *= -x * x / ((2.0 * k) * (2.0 * k + 1.0));
      j += term;
      if (k > 0) dj += term * 2.0 * k / x;
    }
    CHECK(nm::sph_j0(x) == doctest::Approx(j).epsilon(1e-14));
    CHECK(nm::sph_j0_prime(x) == doctest::Approx(dj).epsilon(1e-12));
  }
  CHECK(nm::sph_j0(10.0) == doctest::Approx(std::sin(10.0) / 10.0).epsilon(1e-15));
  CHECK(nm::sph_j0(0.0) == 1.0);
  CHECK(nm::sph_j0_prime(0.0) == 0.0);
}

TEST_CASE("eigenvalues agree with a sign-scan oracle") {
  const double r_tx = 5.0, d_v = 9.0, k_f = 30.0;
  const auto eig = nm::solve_eigenvalues(r_tx, d_v, k_f, 60);
  const auto oracle = scan_roots(r_tx, d_v, k_f, 60);
  REQUIRE(eig.roots.size() == 60);
  REQUIRE(oracle.size() == 60);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CAPTURE(i);
    CHECK(rel(eig.roots[i], oracle[i]) < 1e-10);
    CHECK(eig.roots[i] > i * std::numbers::pi / r_tx);
    CHECK(eig.roots[i] < (i + 1) * std::numbers::pi / r_tx);
  }
}

TEST_CASE("eigenvalues for a small fusion rate sit near the Neumann roots") {
  // k_f -> 0: D_v lambda j0'(lambda r_T) = 0, i.e. tan(x) = x (plus x = 0).
  const auto eig = nm::solve_eigenvalues(5.0, 9.0, 1e-9, 3);
  CHECK(eig.roots[1] * 5.0 == doctest::Approx(4.493409457909064).epsilon(1e-6));
  CHECK(eig.roots[2] * 5.0 == doctest::Approx(7.725251836937707).epsilon(1e-6));
}

TEST_CASE("adaptive quadrature") {
  auto r = nm::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

  // Narrow peak: erf-based closed form.
  const double c = 0.3, k = 1e6;
  auto peak = [&](double x) { return std::exp(-k * (x - c) * (x - c)); };
  const double exact = 0.5 * std::sqrt(std::numbers::pi / k) *
                       (std::erf(std::sqrt(k) * (1.0 - c)) + std::erf(std::sqrt(k) * c));
  const std::vector<double> pts{0.0, c - 1e-3, c, c + 1e-3, 1.0};
  auto rp = nm::integrate(peak, pts);
  CHECK(rp.converged);
  CHECK(rel(rp.value, exact) < 1e-9);

  nm::QuadratureSpec tight{1e-14, 1e-300, 3};
  auto bad = nm::integrate([](double x) { return std::sin(200.0 * x); }, 0.0, 10.0, tight);
  CHECK_FALSE(bad.converged);
}

TEST_CASE("quadrature rejects bad tolerances") {
  nm::QuadratureSpec s{-1.0, 0.0, 10};
  CHECK_THROWS_AS(nm::integrate([](double) { return 1.0; }, 0.0, 1.0, s), DomainError);
}
