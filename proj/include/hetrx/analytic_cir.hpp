#pragma once

#include <span>
#include <vector>

#include "hetrx/channel.hpp"
#include "hetrx/geometry.hpp"
#include "hetrx/numerics.hpp"

namespace hetrx {

// --- Receiver with a uniform surface reaction rate w (um/s), point source ---

/// Hitting rate h_u(t, w) in 1/s.
double h_uniform(double t, double w, const ChannelParams& p);
/// Fraction captured by time t, H_u(t, w).
double H_uniform(double t, double w, const ChannelParams& p);
/// Limit of H_u as t -> infinity.
double H_uniform_inf(double w, const ChannelParams& p);

// --- Fully absorbing receiver ---

double h_absorbing(double t, const ChannelParams& p);
double H_absorbing(double t, const ChannelParams& p);
double H_absorbing_inf(const ChannelParams& p);

// --- Molecules released uniformly from a shell of radius r_tx at t = 0 ---

double h_shell(double t, double w, const ChannelParams& p, double r_tx);
double H_shell(double t, double w, const ChannelParams& p, double r_tx);
double H_shell_inf(double w, const ChannelParams& p, double r_tx);

// --- Membrane-fusion transmitter ---

/// Truncated eigen-series for the molecule release rate f_r(t) of a
/// membrane-fusion transmitter whose vesicles start at its centre.
///
/// Below the onset time t_s the truncated series is dominated by the missing
/// high-order terms, while the physical release there is below 1e-10; f_r is
/// taken as zero on [0, t_s).
class ReleaseProfile {
 public:
  explicit ReleaseProfile(const MembraneFusionTx& tx, int n_max = 100, double tol = 1e-10);

  double rate(double t) const;
  /// Raw truncated series, no onset cutoff.
  double series(double t) const;
  /// Integral of rate() over [0, t], in closed form.
  double released(double t) const;
  /// Bound on |f_r - series| at time t from the omitted terms.
  double tail_bound(double t) const;

  double onset() const { return onset_; }
  int truncation() const { return static_cast<int>(coeff_.size()); }
  const numerics::EigenvalueSet& eigenvalues() const { return eig_; }
  std::span<const double> coefficients() const { return coeff_; }
  std::span<const double> decay_rates() const { return decay_; }
  const MembraneFusionTx& tx() const { return tx_; }

 private:
  MembraneFusionTx tx_;
  numerics::EigenvalueSet eig_;
  std::vector<double> coeff_;  // c_n, 1/s
  std::vector<double> decay_;  // D_v lambda_n^2, 1/s
  double onset_ = 0.0;
};

double release_rate_mf(double t, const ReleaseProfile& release);

struct MfOptions {
  int n_max = 100;
  numerics::QuadratureSpec quadrature{1e-9, 1e-16, 4000};
};

struct MfValue {
  double value = 0.0;
  bool converged = true;
};

/// h_MF(t) by summing per-eigenvalue convolution integrals.
MfValue h_mf(double t, double w, const ChannelParams& p, const ReleaseProfile& release,
             const numerics::QuadratureSpec& spec = {1e-9, 1e-16, 4000});
/// h_MF(t) as one convolution integral of f_r with h_s.
MfValue h_mf_convolution(double t, double w, const ChannelParams& p,
                         const ReleaseProfile& release,
                         const numerics::QuadratureSpec& spec = {1e-9, 1e-16, 4000});
MfValue H_mf(double t, double w, const ChannelParams& p, const ReleaseProfile& release,
             const numerics::QuadratureSpec& spec = {1e-9, 1e-16, 4000});
double H_mf_inf(double w, const ChannelParams& p, double r_tx);

// --- CIR series on a time grid ---

CirSeries cir_uniform(std::span<const double> grid, double w, const ChannelParams& p);
CirSeries cir_point_ap(std::span<const double> grid, const ApLayout& layout,
                       const ChannelParams& p);
CirSeries cir_ptfr(std::span<const double> grid, const ChannelParams& p, long n_sigma);
CirSeries cir_mf(std::span<const double> grid, double w, const ChannelParams& p,
                 const MembraneFusionTx& tx, const MfOptions& opts = {});
CirSeries cir_mf_ap(std::span<const double> grid, const ApLayout& layout,
                    const ChannelParams& p, const MembraneFusionTx& tx,
                    const MfOptions& opts = {});

/// Effective reaction rate of a layout using the default capacitance rule.
double layout_effective_rate(const ApLayout& layout, const ChannelParams& p);

namespace detail {

/// H_u(t, w) written with the alpha/psi terms; overflows for large t and
/// needs k_d > 0. Kept for cross-checking at moderate t.
double H_uniform_literal(double t, double w, const ChannelParams& p);

/// varsigma_1(t, z) for eigenvalue lambda (1/um), by adaptive quadrature.
double sigma1(double t, double z, double w, const ChannelParams& p, double d_v, double lambda,
              const numerics::QuadratureSpec& spec = {});

/// Integrand of sigma1 at u (erfc form as written).
double sigma1_integrand(double u, double t, double z, double w, const ChannelParams& p,
                        double d_v, double lambda);

}  // namespace detail

}  // namespace hetrx
