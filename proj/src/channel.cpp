#include "hetrx/channel.hpp"

#include <cmath>
#include <string>

#include "hetrx/errors.hpp"

namespace hetrx {

void ChannelParams::validate() const {
  if (!(r_rx > 0.0) || !std::isfinite(r_rx)) throw DomainError("r_R must be positive");
  if (!(r0 > r_rx) || !std::isfinite(r0)) throw DomainError("r_0 must exceed r_R");
  if (!(d_sigma > 0.0) || !std::isfinite(d_sigma)) throw DomainError("D_sigma must be positive");
  if (!(k_d >= 0.0) || !std::isfinite(k_d)) throw DomainError("k_d must be non-negative");
}

void validate_tx(const TxSpec& tx) {
  if (const auto* pt = std::get_if<PointTx>(&tx)) {
    if (pt->n_sigma < 1) throw DomainError("N_sigma must be at least 1");
    return;
  }
  const auto& mf = std::get<MembraneFusionTx>(tx);
  if (!(mf.r_tx > 0.0) || !(mf.d_v > 0.0) || !(mf.k_f > 0.0)) {
    throw DomainError("r_T, D_v and k_f must be positive");
  }
  if (mf.n_v < 1 || mf.eta < 1) throw DomainError("N_v and eta must be at least 1");
}

long total_molecules(const TxSpec& tx) {
  if (const auto* pt = std::get_if<PointTx>(&tx)) return pt->n_sigma;
  const auto& mf = std::get<MembraneFusionTx>(tx);
  return mf.n_v * mf.eta;
}

void check_mf_geometry(const ChannelParams& p, const MembraneFusionTx& tx) {
  if (!(tx.r_tx + p.r_rx < 0.9 * p.r0)) {
    throw DomainError("fusion transmitter requires r_T + r_R < 0.9 r_0");
  }
}

std::vector<double> log_grid(double t_min, double t_max, int n) {
  if (!(t_min > 0.0) || !(t_max > t_min) || n < 2) {
    throw DomainError("log_grid needs 0 < t_min < t_max and n >= 2");
  }
  std::vector<double> t(static_cast<std::size_t>(n));
  const double a = std::log(t_min);
  const double b = std::log(t_max);
  for (int i = 0; i < n; ++i) t[i] = std::exp(a + (b - a) * i / (n - 1));
  t.front() = t_min;
  t.back() = t_max;
  return t;
}

std::vector<double> linear_grid(double t_min, double t_max, int n) {
  if (!(t_max > t_min) || n < 2) throw DomainError("linear_grid needs t_min < t_max and n >= 2");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[i] = t_min + (t_max - t_min) * i / (n - 1);
  return t;
}

}  // namespace hetrx
