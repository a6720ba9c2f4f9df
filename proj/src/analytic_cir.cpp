#include "hetrx/analytic_cir.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "hetrx/errors.hpp"
#include "hetrx/homogenization.hpp"

namespace hetrx {

namespace {

using numerics::erfcx;
using numerics::exp_erfc_reduced;

constexpr double kPi = std::numbers::pi;

// Relative distance |gamma - s| / s below which zeta(w) is treated as zero,
// and the relative shift applied to gamma on either side in that case.
constexpr double kDegenerateGap = 1e-7;
constexpr double kDegenerateShift = 1e-5;

struct Symbols {
  double eps;    // (r0 - rR) / sqrt(4 D)
  double gamma;  // (w rR + D) / (D rR)
  double zeta;   // gamma^2 D - k_d
  double s;      // sqrt(k_d / D)
  double k;      // sqrt(k_d)
  double beta;   // (r0 - rR) s
  double varpi;  // gamma sqrt(D)
};

Symbols symbols(double w, const ChannelParams& p) {
  Symbols y;
  y.eps = (p.r0 - p.r_rx) / std::sqrt(4.0 * p.d_sigma);
  y.gamma = (w * p.r_rx + p.d_sigma) / (p.d_sigma * p.r_rx);
  y.zeta = y.gamma * y.gamma * p.d_sigma - p.k_d;
  y.s = std::sqrt(p.k_d / p.d_sigma);
  y.k = std::sqrt(p.k_d);
  y.beta = (p.r0 - p.r_rx) * y.s;
  y.varpi = y.gamma * std::sqrt(p.d_sigma);
  return y;
}

void check_rate(double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("reaction rate w must be finite and >= 0");
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and >= 0");
}

bool near_degenerate(double w, const ChannelParams& p) {
  if (p.k_d == 0.0) return false;
  const Symbols y = symbols(w, p);
  return std::fabs(y.gamma - y.s) <= kDegenerateGap * y.s;
}

// Average of f at w shifted by +-delta in gamma; the odd error terms cancel.
template <class F>
double degenerate_average(double w, const ChannelParams& p, F&& f) {
  const double dw = p.d_sigma * kDegenerateShift * std::sqrt(p.k_d / p.d_sigma);
  return 0.5 * (f(w + dw) + f(std::max(0.0, w - dw)));
}

double H_uniform_regular(double t, double w, const ChannelParams& p) {
  const Symbols y = symbols(w, p);
  const double pref = p.r_rx * w / p.r0;
  const double x = y.eps / std::sqrt(t);
  const double reduced = -y.eps * y.eps / t - p.k_d * t;
  const double b = x + y.gamma * std::sqrt(p.d_sigma * t);
  const double t_b = exp_erfc_reduced(reduced, y.gamma * (p.r0 - p.r_rx) + y.zeta * t, b);
  if (p.k_d == 0.0) {
    return pref / (y.gamma * p.d_sigma) * (std::erfc(x) - t_b);
  }
  const double v = std::sqrt(p.k_d * t);
  const double t_minus = exp_erfc_reduced(reduced, -y.beta, x - v);
  const double t_plus = exp_erfc_reduced(reduced, y.beta, x + v);
  const double d = p.d_sigma;
  return pref * (t_minus / (2.0 * d * (y.gamma + y.s)) + t_plus / (2.0 * d * (y.gamma - y.s)) -
                 y.gamma * t_b / (d * (y.gamma - y.s) * (y.gamma + y.s)));
}

// exp(gamma z + zeta t) * erfc(varpi sqrt(t) + z / sqrt(4 D t)), z > 0.
double xi1(double t, double z, const Symbols& y, const ChannelParams& p) {
  const double q = z / std::sqrt(4.0 * p.d_sigma * t);
  const double reduced = -q * q - p.k_d * t;
  const double b = y.varpi * std::sqrt(t) + q;
  return exp_erfc_reduced(reduced, y.gamma * z + y.zeta * t, b);
}

// Antiderivative of xi1 over [0, t].
double xi_cumulative(double t, double z, const Symbols& y, const ChannelParams& p) {
  const double q = z / std::sqrt(4.0 * p.d_sigma * t);
  const double reduced = -q * q - p.k_d * t;
  const double b = y.varpi * std::sqrt(t) + q;
  const double x = exp_erfc_reduced(reduced, y.gamma * z + y.zeta * t, b);
  if (p.k_d == 0.0) {
    const double vw = y.varpi;
    const double g = 2.0 * std::sqrt(t / kPi) * std::exp(-q * q);
    const double e0 = std::erfc(q);
    return (x + vw * g - e0 * (1.0 + vw * z / std::sqrt(p.d_sigma))) / (vw * vw);
  }
  const double kt = y.k * std::sqrt(t);
  const double zs = z * y.s;
  const double minus = exp_erfc_reduced(reduced, -zs, q - kt) / (2.0 * y.k * (y.varpi + y.k));
  const double plus = exp_erfc_reduced(reduced, zs, q + kt) / (2.0 * y.k * (y.varpi - y.k));
  return x / y.zeta + minus - plus;
}

struct ShellGeometry {
  double z1;
  double z2;
  double scale;  // rR w / (2 rT r0)
};

ShellGeometry shell_geometry(double w, const ChannelParams& p, double r_tx) {
  if (!(r_tx > 0.0)) throw DomainError("shell radius must be positive");
  const double z1 = p.r0 - r_tx - p.r_rx;
  if (!(z1 > 0.0)) throw DomainError("shell intersects the receiver");
  return {z1, p.r0 + r_tx - p.r_rx, p.r_rx * w / (2.0 * r_tx * p.r0)};
}

double H_shell_regular(double t, double w, const ChannelParams& p, double r_tx) {
  const ShellGeometry g = shell_geometry(w, p, r_tx);
  const Symbols y = symbols(w, p);
  return g.scale * (xi_cumulative(t, g.z1, y, p) - xi_cumulative(t, g.z2, y, p));
}

// Largest rate bound of a single omitted series term: |c_n| <= 2.4 k_f lambda_n.
constexpr double kCoefficientBound = 2.4;
constexpr double kOnsetTolerance = 1e-10;

// Contribution threshold below which an eigen-term is skipped in the
// convolution sums.
constexpr double kNegligibleWeight = 1e-15;

}  // namespace

// ---------------------------------------------------------------------------

double h_uniform(double t, double w, const ChannelParams& p) {
  p.validate();
  check_rate(w);
  check_time(t);
  if (t == 0.0 || w == 0.0) return 0.0;
  const Symbols y = symbols(w, p);
  const double reduced = -y.eps * y.eps / t - p.k_d * t;
  const double b = y.eps / std::sqrt(t) + y.gamma * std::sqrt(p.d_sigma * t);
  const double bracket = 1.0 / std::sqrt(kPi * p.d_sigma * t) - y.gamma * erfcx(b);
  return p.r_rx * w / p.r0 * std::exp(reduced) * bracket;
}

double H_uniform(double t, double w, const ChannelParams& p) {
  p.validate();
  check_rate(w);
  check_time(t);
  if (t == 0.0 || w == 0.0) return 0.0;
  if (near_degenerate(w, p)) {
    return degenerate_average(w, p, [&](double ws) { return H_uniform_regular(t, ws, p); });
  }
  return H_uniform_regular(t, w, p);
}

double H_uniform_inf(double w, const ChannelParams& p) {
  p.validate();
  check_rate(w);
  const Symbols y = symbols(w, p);
  return p.r_rx * w * std::exp(-y.beta) / (p.r0 * p.d_sigma * (y.gamma + y.s));
}

double h_absorbing(double t, const ChannelParams& p) {
  p.validate();
  check_time(t);
  if (t == 0.0) return 0.0;
  const double d = p.r0 - p.r_rx;
  return p.r_rx / p.r0 * d / std::sqrt(4.0 * kPi * p.d_sigma * t * t * t) *
         std::exp(-d * d / (4.0 * p.d_sigma * t) - p.k_d * t);
}

double H_absorbing(double t, const ChannelParams& p) {
  p.validate();
  check_time(t);
  if (t == 0.0) return 0.0;
  const Symbols y = symbols(0.0, p);
  const double x = y.eps / std::sqrt(t);
  const double v = std::sqrt(p.k_d * t);
  const double reduced = -x * x - v * v;
  return p.r_rx / (2.0 * p.r0) *
         (exp_erfc_reduced(reduced, -y.beta, x - v) + exp_erfc_reduced(reduced, y.beta, x + v));
}

double H_absorbing_inf(const ChannelParams& p) {
  p.validate();
  return p.r_rx / p.r0 * std::exp(-(p.r0 - p.r_rx) * std::sqrt(p.k_d / p.d_sigma));
}

double h_shell(double t, double w, const ChannelParams& p, double r_tx) {
  p.validate();
  check_rate(w);
  check_time(t);
  const ShellGeometry g = shell_geometry(w, p, r_tx);
  if (t == 0.0 || w == 0.0) return 0.0;
  const Symbols y = symbols(w, p);
  return g.scale * (xi1(t, g.z1, y, p) - xi1(t, g.z2, y, p));
}

double H_shell(double t, double w, const ChannelParams& p, double r_tx) {
  p.validate();
  check_rate(w);
  check_time(t);
  shell_geometry(w, p, r_tx);
  if (t == 0.0 || w == 0.0) return 0.0;
  if (near_degenerate(w, p)) {
    return degenerate_average(w, p,
                              [&](double ws) { return H_shell_regular(t, ws, p, r_tx); });
  }
  return H_shell_regular(t, w, p, r_tx);
}

double H_shell_inf(double w, const ChannelParams& p, double r_tx) {
  p.validate();
  check_rate(w);
  const ShellGeometry g = shell_geometry(w, p, r_tx);
  const Symbols y = symbols(w, p);
  if (p.k_d == 0.0) {
    return g.scale * (g.z2 - g.z1) / (std::sqrt(p.d_sigma) * y.varpi);
  }
  const double diff = std::exp(-g.z1 * y.s) * -std::expm1(-(g.z2 - g.z1) * y.s);
  return g.scale * diff / (y.k * (y.varpi + y.k));
}

// ---------------------------------------------------------------------------

ReleaseProfile::ReleaseProfile(const MembraneFusionTx& tx, int n_max, double tol) : tx_(tx) {
  validate_tx(tx);
  eig_ = numerics::solve_eigenvalues(tx.r_tx, tx.d_v, tx.k_f, n_max, tol);
  coeff_.reserve(eig_.roots.size());
  decay_.reserve(eig_.roots.size());
  for (double lambda : eig_.roots) {
    const double x = lambda * tx.r_tx;
    coeff_.push_back(4.0 * tx.r_tx * tx.r_tx * tx.k_f * lambda * lambda * lambda *
                     numerics::sph_j0(x) / (2.0 * x - std::sin(2.0 * x)));
    decay_.push_back(tx.d_v * lambda * lambda);
  }

  // Earliest time at which the omitted terms are below the tolerance.
  double lo = 1e-9;
  double hi = 1e3;
  if (tail_bound(hi) > kOnsetTolerance) {
    throw AccuracyError("release series: truncation too short for any onset time");
  }
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (tail_bound(mid) <= kOnsetTolerance) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  onset_ = hi;
  // A vesicle must travel r_T from the centre; bound the probability that it
  // has done so by the onset (reflection-principle bound per axis).
  const double early = 6.0 * std::erfc(tx.r_tx / std::sqrt(12.0 * tx.d_v * onset_));
  if (early > kOnsetTolerance) {
    throw AccuracyError("release series: N_max = " + std::to_string(n_max) +
                        " leaves unresolved early release; increase N_max");
  }
}

double ReleaseProfile::series(double t) const {
  double sum = 0.0;
  for (std::size_t n = 0; n < coeff_.size(); ++n) sum += coeff_[n] * std::exp(-decay_[n] * t);
  return sum;
}

double ReleaseProfile::rate(double t) const {
  if (t < onset_) return 0.0;
  return series(t);
}

double ReleaseProfile::released(double t) const {
  if (t <= onset_) return 0.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < coeff_.size(); ++n) {
    sum += coeff_[n] / decay_[n] * std::exp(-decay_[n] * onset_) *
           -std::expm1(-decay_[n] * (t - onset_));
  }
  return sum;
}

double ReleaseProfile::tail_bound(double t) const {
  if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
  const double step = std::numbers::pi / tx_.r_tx;
  double sum = 0.0;
  for (long n = static_cast<long>(coeff_.size()) + 1; n < 50'000'000; ++n) {
    const double lam_lo = (n - 1) * step;
    const double term = kCoefficientBound * tx_.k_f * n * step *
                        std::exp(-tx_.d_v * lam_lo * lam_lo * t);
    sum += term;
    // Terms decrease once 2 D_v lambda^2 t > 1; stop when negligible.
    if (2.0 * tx_.d_v * lam_lo * lam_lo * t > 1.0 && term <= 1e-17 * sum) break;
  }
  return sum;
}

double release_rate_mf(double t, const ReleaseProfile& release) {
  check_time(t);
  return release.rate(t);
}

namespace {

// Breakpoints for convolution integrals over [ts, t]: a geometric ladder
// towards both ends plus the decay layer 1/rate of the current eigen-term.
std::vector<double> convolution_points(double ts, double t, double rate) {
  std::vector<double> pts{ts, t};
  const double span = t - ts;
  for (double f : {1e-4, 1e-3, 1e-2, 0.1, 0.5}) {
    pts.push_back(ts + f * span);
    pts.push_back(t - f * span);
  }
  if (rate > 0.0) {
    for (double k : {0.3, 1.0, 3.0, 10.0, 30.0}) pts.push_back(ts + k / rate);
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double x : pts) {
    if (x < ts || x > t) continue;
    if (out.empty() || x > out.back()) out.push_back(x);
  }
  return out;
}

template <class Kernel>
MfValue eigen_sum(double t, const ReleaseProfile& release, const numerics::QuadratureSpec& spec,
                  Kernel&& kernel) {
  MfValue out;
  const double ts = release.onset();
  if (t <= ts) return out;
  const auto c = release.coefficients();
  const auto d = release.decay_rates();
  for (std::size_t n = 0; n < c.size(); ++n) {
    const double weight = std::fabs(c[n]) * std::exp(-d[n] * ts) / d[n];
    if (weight < kNegligibleWeight) continue;
    const double dn = d[n];
    auto f = [&](double u) { return std::exp(-dn * u) * kernel(t - u); };
    const numerics::QuadratureResult r =
        numerics::integrate(f, convolution_points(ts, t, dn), spec);
    out.value += c[n] * r.value;
    out.converged = out.converged && r.converged;
  }
  return out;
}

}  // namespace

MfValue h_mf(double t, double w, const ChannelParams& p, const ReleaseProfile& release,
             const numerics::QuadratureSpec& spec) {
  p.validate();
  check_rate(w);
  check_time(t);
  check_mf_geometry(p, release.tx());
  const double r_tx = release.tx().r_tx;
  return eigen_sum(t, release, spec,
                   [&](double v) { return v > 0.0 ? h_shell(v, w, p, r_tx) : 0.0; });
}

MfValue h_mf_convolution(double t, double w, const ChannelParams& p,
                         const ReleaseProfile& release, const numerics::QuadratureSpec& spec) {
  p.validate();
  check_rate(w);
  check_time(t);
  check_mf_geometry(p, release.tx());
  MfValue out;
  const double ts = release.onset();
  if (t <= ts) return out;
  const double r_tx = release.tx().r_tx;
  auto f = [&](double u) {
    const double v = t - u;
    return v > 0.0 ? release.series(u) * h_shell(v, w, p, r_tx) : 0.0;
  };
  const numerics::QuadratureResult r =
      numerics::integrate(f, convolution_points(ts, t, 0.0), spec);
  out.value = r.value;
  out.converged = r.converged;
  return out;
}

MfValue H_mf(double t, double w, const ChannelParams& p, const ReleaseProfile& release,
             const numerics::QuadratureSpec& spec) {
  p.validate();
  check_rate(w);
  check_time(t);
  check_mf_geometry(p, release.tx());
  const double r_tx = release.tx().r_tx;
  return eigen_sum(t, release, spec,
                   [&](double v) { return v > 0.0 ? H_shell(v, w, p, r_tx) : 0.0; });
}

double H_mf_inf(double w, const ChannelParams& p, double r_tx) {
  return H_shell_inf(w, p, r_tx);
}

// ---------------------------------------------------------------------------

double layout_effective_rate(const ApLayout& layout, const ChannelParams& p) {
  p.validate();
  if (std::fabs(layout.rx_radius() - p.r_rx) > 1e-12 * p.r_rx) {
    throw DomainError("layout radius differs from the channel's r_R");
  }
  return effective_rate(capacitance_auto(layout), p.d_sigma, p.r_rx).w_e;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void fill_params(CirSeries& s, const ChannelParams& p) {
  s.metadata["r_rx_um"] = fmt(p.r_rx);
  s.metadata["r0_um"] = fmt(p.r0);
  s.metadata["d_sigma_um2_per_s"] = fmt(p.d_sigma);
  s.metadata["k_d_per_s"] = fmt(p.k_d);
}

}  // namespace

CirSeries cir_uniform(std::span<const double> grid, double w, const ChannelParams& p) {
  CirSeries s;
  s.model = "PTAR";
  s.time.assign(grid.begin(), grid.end());
  for (double t : grid) {
    s.rate.push_back(h_uniform(t, w, p));
    s.cumulative.push_back(H_uniform(t, w, p));
  }
  s.asymptote = H_uniform_inf(w, p);
  fill_params(s, p);
  s.metadata["w_e_um_per_s"] = fmt(w);
  return s;
}

CirSeries cir_point_ap(std::span<const double> grid, const ApLayout& layout,
                       const ChannelParams& p) {
  const Capacitance cap = capacitance_auto(layout);
  const double w = effective_rate(cap, p.d_sigma, p.r_rx).w_e;
  CirSeries s = cir_uniform(grid, w, p);
  s.metadata["capacitance_formula"] = std::string(to_string(cap.formula));
  s.metadata["g_p_um"] = fmt(cap.g_p);
  s.metadata["n_p"] = std::to_string(layout.size());
  s.metadata["coverage"] = fmt(layout.coverage());
  return s;
}

CirSeries cir_ptfr(std::span<const double> grid, const ChannelParams& p, long n_sigma) {
  CirSeries s;
  s.model = "PTFR";
  s.time.assign(grid.begin(), grid.end());
  for (double t : grid) {
    s.rate.push_back(h_absorbing(t, p));
    s.cumulative.push_back(H_absorbing(t, p));
  }
  s.asymptote = H_absorbing_inf(p);
  fill_params(s, p);
  s.metadata["n_sigma"] = std::to_string(n_sigma);
  return s;
}

CirSeries cir_mf(std::span<const double> grid, double w, const ChannelParams& p,
                 const MembraneFusionTx& tx, const MfOptions& opts) {
  check_mf_geometry(p, tx);
  const ReleaseProfile release(tx, opts.n_max);
  CirSeries s;
  s.model = "MTAR";
  s.truncation = release.truncation();
  s.time.assign(grid.begin(), grid.end());
  for (double t : grid) {
    const MfValue h = h_mf(t, w, p, release, opts.quadrature);
    const MfValue H = H_mf(t, w, p, release, opts.quadrature);
    s.rate.push_back(h.value);
    s.cumulative.push_back(H.value);
    s.accurate = s.accurate && h.converged && H.converged;
  }
  s.asymptote = H_mf_inf(w, p, tx.r_tx);
  fill_params(s, p);
  s.metadata["w_e_um_per_s"] = fmt(w);
  s.metadata["r_tx_um"] = fmt(tx.r_tx);
  s.metadata["d_v_um2_per_s"] = fmt(tx.d_v);
  s.metadata["k_f_um_per_s"] = fmt(tx.k_f);
  s.metadata["n_v"] = std::to_string(tx.n_v);
  s.metadata["eta"] = std::to_string(tx.eta);
  s.metadata["release_onset_s"] = fmt(release.onset());
  return s;
}

CirSeries cir_mf_ap(std::span<const double> grid, const ApLayout& layout,
                    const ChannelParams& p, const MembraneFusionTx& tx, const MfOptions& opts) {
  const Capacitance cap = capacitance_auto(layout);
  const double w = effective_rate(cap, p.d_sigma, p.r_rx).w_e;
  CirSeries s = cir_mf(grid, w, p, tx, opts);
  s.metadata["capacitance_formula"] = std::string(to_string(cap.formula));
  s.metadata["g_p_um"] = fmt(cap.g_p);
  s.metadata["n_p"] = std::to_string(layout.size());
  s.metadata["coverage"] = fmt(layout.coverage());
  return s;
}

// ---------------------------------------------------------------------------

namespace detail {

double H_uniform_literal(double t, double w, const ChannelParams& p) {
  if (!(p.k_d > 0.0)) throw DomainError("literal form needs k_d > 0");
  const Symbols y = symbols(w, p);
  const double x = y.eps / std::sqrt(t);
  const double v = std::sqrt(p.k_d * t);
  const double alpha1 = 1.0 / (2.0 * std::sqrt(p.k_d * p.d_sigma)) *
                        (std::exp(-y.beta) * std::erfc(x - v) -
                         std::exp(y.beta) * std::erfc(x + v));
  const double psi1 = 2.0 * y.gamma *
                      numerics::exp_erfc(y.gamma * (p.r0 - p.r_rx) + y.zeta * t,
                                         x + y.gamma * std::sqrt(p.d_sigma * t));
  const double g2 = y.gamma * y.gamma * std::sqrt(p.d_sigma / p.k_d);
  const double psi2 = (g2 - y.gamma) * std::exp(-y.beta) * std::erf(x - v) -
                      (g2 + y.gamma) * (std::exp(-y.beta) - std::exp(y.beta) * std::erfc(x + v));
  const double alpha2 = (psi1 - psi2) / (2.0 * y.zeta) - y.gamma * std::exp(-y.beta) / y.zeta;
  return p.r_rx * w / p.r0 * (alpha1 - alpha2);
}

double sigma1_integrand(double u, double t, double z, double w, const ChannelParams& p,
                        double d_v, double lambda) {
  const double v = t - u;
  if (!(v > 0.0)) return 0.0;
  const Symbols y = symbols(w, p);
  return std::exp(-(y.zeta + d_v * lambda * lambda) * u) *
         std::erfc(y.varpi * std::sqrt(v) + z / std::sqrt(4.0 * p.d_sigma * v));
}

double sigma1(double t, double z, double w, const ChannelParams& p, double d_v, double lambda,
              const numerics::QuadratureSpec& spec) {
  auto f = [&](double u) { return sigma1_integrand(u, t, z, w, p, d_v, lambda); };
  return numerics::integrate(f, 0.0, t, spec).value;
}

}  // namespace detail

}  // namespace hetrx
