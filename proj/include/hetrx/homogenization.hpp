#pragma once

#include <string_view>
#include <vector>

#include "hetrx/channel.hpp"
#include "hetrx/geometry.hpp"

namespace hetrx {

enum class CapacitanceFormula { general, identical, mean_field, single_ap };

std::string_view to_string(CapacitanceFormula f);

/// "Capacitance" G_p of a patchy receiver, with the intermediate quantities
/// of the asymptotic expansion kept for diagnostics.
struct Capacitance {
  double g_p = 0.0;  // um
  CapacitanceFormula formula = CapacitanceFormula::general;
  double kappa = 0.0;
  std::vector<double> m;  // m_i
  double m_bar = 0.0;
  std::vector<double> s;  // s_i
  double vartheta = 0.0;
  double pair_sum = 0.0;   // sum_{i<j} m_i m_j F(l'_i, l'_j)
  bool beyond_validity = false;  // coverage above 0.2
};

struct EffectiveRate {
  double w_e = 0.0;  // um/s
  Capacitance source;
};

/// F(d) = 1/d + ln(d)/2 - ln(2 + d)/2 for unit-sphere chord distance d.
double pair_kernel(double d);

Capacitance capacitance_general(const ApLayout& layout);
Capacitance capacitance_identical(const ApLayout& layout);
Capacitance capacitance_meanfield(double rx_radius, int n, double kappa);
Capacitance capacitance_single(double rx_radius, double a);
/// Single patch -> higher-order single-patch form, identical sizes ->
/// identical-size form, otherwise the general form.
Capacitance capacitance_auto(const ApLayout& layout);

EffectiveRate effective_rate(const Capacitance& cap, double d_sigma, double rx_radius);

/// S = sum_{i<j} m_i m_j F(l'_i, l'_j).
double layout_metric_S(const ApLayout& layout);

/// Relative gain of the asymptotic absorbed fraction of `many` over `single`.
double delta_H(const ApLayout& many, const ApLayout& single, const ChannelParams& p);

namespace detail {
/// Ratio form with explicit zeta terms; throws when zeta vanishes.
double delta_H_zeta_form(double w_many, double w_single, const ChannelParams& p);
}  // namespace detail

}  // namespace hetrx
