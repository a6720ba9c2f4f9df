#include "hetrx/homogenization.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hetrx/analytic_cir.hpp"
#include "hetrx/errors.hpp"

namespace hetrx {

namespace {

constexpr double kPi = std::numbers::pi;

Capacitance finish(Capacitance c, double inv_g, double rx_radius) {
  if (!(inv_g > 0.0) || !std::isfinite(inv_g)) {
    throw HomogenizationError("capacitance expansion gave 1/G_p <= 0; reduce the coverage");
  }
  c.g_p = 1.0 / inv_g;
  if (!(c.g_p < rx_radius)) {
    throw HomogenizationError("G_p >= r_R: coverage outside the validity of the expansion");
  }
  return c;
}

double pair_sum(const ApLayout& layout, const std::vector<double>& m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const Vec3 li = layout.unit_center(i);
    for (std::size_t j = i + 1; j < layout.size(); ++j) {
      sum += m[i] * m[j] * pair_kernel((li - layout.unit_center(j)).norm());
    }
  }
  return sum;
}

}  // namespace

std::string_view to_string(CapacitanceFormula f) {
  switch (f) {
    case CapacitanceFormula::general: return "general";
    case CapacitanceFormula::identical: return "identical";
    case CapacitanceFormula::mean_field: return "mean-field";
    case CapacitanceFormula::single_ap: return "single-ap";
  }
  return "unknown";
}

double pair_kernel(double d) {
  if (!(d > 0.0)) throw DomainError("pair_kernel: coincident patch centres");
  return 1.0 / d + 0.5 * std::log(d) - 0.5 * std::log(2.0 + d);
}

Capacitance capacitance_general(const ApLayout& layout) {
  const double r = layout.rx_radius();
  const auto patches = layout.patches();
  const double n = static_cast<double>(patches.size());

  Capacitance c;
  c.formula = CapacitanceFormula::general;
  c.beyond_validity = layout.beyond_validity();
  c.kappa = patches[0].radius / r;
  const double kappa = c.kappa;
  double sum_m = 0.0;
  double sum_m2 = 0.0;
  double sum_m3 = 0.0;
  double sum_ms = 0.0;
  for (const Patch& p : patches) {
    const double mi = 2.0 * p.radius / (r * kappa * kPi);
    const double si = 0.5 * mi * (std::log(4.0 * p.radius / (r * kappa)) - 1.5);
    c.m.push_back(mi);
    c.s.push_back(si);
    sum_m += mi;
    sum_m2 += mi * mi;
    sum_m3 += mi * mi * mi;
    sum_ms += mi * si;
  }
  c.m_bar = sum_m / n;
  const double nm = n * c.m_bar;
  c.vartheta = sum_m2 * sum_m2 / nm - sum_m3;
  c.pair_sum = pair_sum(layout, c.m);

  const double log_half_kappa = std::log(kappa / 2.0);
  const double bracket = 1.0 + kappa / (2.0 * nm) * log_half_kappa * sum_m2 +
                         kappa / nm * (sum_ms + 2.0 * c.pair_sum) +
                         std::pow(kappa * log_half_kappa, 2) * c.vartheta / (4.0 * nm);
  return finish(std::move(c), 2.0 / (nm * kappa * r) * bracket, r);
}

Capacitance capacitance_identical(const ApLayout& layout) {
  if (!layout.identical_sizes()) {
    throw DomainError("capacitance_identical requires equal patch radii");
  }
  const double r = layout.rx_radius();
  const double n = static_cast<double>(layout.size());

  Capacitance c;
  c.formula = CapacitanceFormula::identical;
  c.beyond_validity = layout.beyond_validity();
  c.kappa = layout.patches()[0].radius / r;
  c.m.assign(layout.size(), 2.0 / kPi);
  c.m_bar = 2.0 / kPi;
  c.s.assign(layout.size(), (std::log(4.0) - 1.5) / kPi);
  c.vartheta = 0.0;
  c.pair_sum = pair_sum(layout, c.m);

  // sum_{i<j} F = pair_sum / m^2
  const double sum_f = c.pair_sum * (kPi * kPi / 4.0);
  const double kappa = c.kappa;
  const double bracket =
      1.0 + kappa / kPi * (std::log(2.0 * kappa) - 1.5 + 4.0 / n * sum_f);
  return finish(std::move(c), kPi / (n * kappa * r) * bracket, r);
}

Capacitance capacitance_meanfield(double rx_radius, int n, double kappa) {
  if (!(rx_radius > 0.0) || n < 1 || !(kappa > 0.0 && kappa < 1.0)) {
    throw DomainError("capacitance_meanfield: need r_R > 0, N_p >= 1, kappa in (0, 1)");
  }
  Capacitance c;
  c.formula = CapacitanceFormula::mean_field;
  c.kappa = kappa;
  const double np = n;
  c.beyond_validity = np * kappa * kappa / 4.0 > ApLayout::kCoverageValidityLimit;
  const double inv_g = (1.0 + kPi / (np * kappa) +
                        (0.5 * std::log(kappa * std::sqrt(np)) + std::log(2.0) - 1.5) / np -
                        2.0 / std::sqrt(np) + std::pow(np, -1.5)) /
                       rx_radius;
  return finish(std::move(c), inv_g, rx_radius);
}

Capacitance capacitance_single(double rx_radius, double a) {
  if (!(rx_radius > 0.0) || !(a > 0.0 && a < rx_radius)) {
    throw DomainError("capacitance_single: need 0 < a < r_R");
  }
  Capacitance c;
  c.formula = CapacitanceFormula::single_ap;
  c.kappa = a / rx_radius;
  c.beyond_validity = c.kappa * c.kappa / 4.0 > ApLayout::kCoverageValidityLimit;
  const double kappa = c.kappa;
  const double bracket = 1.0 + kappa / kPi * (std::log(2.0 * kappa) - 1.5) -
                         kappa * kappa / (kPi * kPi) * ((kPi * kPi + 21.0) / 36.0);
  return finish(std::move(c), kPi / (kappa * rx_radius) * bracket, rx_radius);
}

Capacitance capacitance_auto(const ApLayout& layout) {
  if (layout.size() == 1) {
    Capacitance c = capacitance_single(layout.rx_radius(), layout.patches()[0].radius);
    c.beyond_validity = layout.beyond_validity();
    return c;
  }
  if (layout.identical_sizes()) return capacitance_identical(layout);
  return capacitance_general(layout);
}

EffectiveRate effective_rate(const Capacitance& cap, double d_sigma, double rx_radius) {
  if (!(cap.g_p > 0.0 && cap.g_p < rx_radius)) {
    throw HomogenizationError("effective_rate requires 0 < G_p < r_R");
  }
  if (!(d_sigma > 0.0)) throw DomainError("effective_rate: D_sigma must be positive");
  return {d_sigma * cap.g_p / (rx_radius * (rx_radius - cap.g_p)), cap};
}

double layout_metric_S(const ApLayout& layout) {
  if (layout.size() < 2) return 0.0;
  const double r = layout.rx_radius();
  const double kappa = layout.patches()[0].radius / r;
  std::vector<double> m;
  m.reserve(layout.size());
  for (const Patch& p : layout.patches()) m.push_back(2.0 * p.radius / (r * kappa * kPi));
  return pair_sum(layout, m);
}

double delta_H(const ApLayout& many, const ApLayout& single, const ChannelParams& p) {
  p.validate();
  if (std::fabs(many.coverage() - single.coverage()) > 1e-9 * single.coverage() ||
      many.rx_radius() != single.rx_radius()) {
    throw DomainError("delta_H: layouts must share r_R and total coverage");
  }
  if (many.rx_radius() != p.r_rx) throw DomainError("delta_H: layout radius differs from r_R");
  const double w_n = effective_rate(capacitance_auto(many), p.d_sigma, p.r_rx).w_e;
  const double w_1 = effective_rate(capacitance_auto(single), p.d_sigma, p.r_rx).w_e;
  return H_uniform_inf(w_n, p) / H_uniform_inf(w_1, p) - 1.0;
}

namespace detail {

double delta_H_zeta_form(double w_many, double w_single, const ChannelParams& p) {
  const double s = std::sqrt(p.k_d / p.d_sigma);
  auto gamma = [&](double w) { return (w * p.r_rx + p.d_sigma) / (p.d_sigma * p.r_rx); };
  auto zeta = [&](double w) { return gamma(w) * gamma(w) * p.d_sigma - p.k_d; };
  const double z_n = zeta(w_many);
  const double z_1 = zeta(w_single);
  if (z_n == 0.0 || z_1 == 0.0) throw DomainError("delta_H: zeta(w_e) vanishes");
  return w_many * z_1 * (gamma(w_many) - s) / (w_single * z_n * (gamma(w_single) - s)) - 1.0;
}

}  // namespace detail

}  // namespace hetrx
