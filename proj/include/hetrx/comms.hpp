#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hetrx {

/// ON/OFF keying frame.
struct ProtocolSpec {
  int q = 10;         // bits per frame, Q
  double t_b = 0.8;   // bit interval, s
  double p0 = 0.5;
  double p1 = 0.5;

  void validate() const;
};

/// Absorbed-fraction increments dH_k = H((k+1) T_b) - H(k T_b), k = 0..Q-1.
struct ChannelIncrements {
  std::vector<double> dh;
  double n_t = 0.0;  // molecules released per bit-1

  void validate() const;
  /// Samples H at multiples of t_b.
  static ChannelIncrements from_cumulative(const std::function<double(double)>& H, double t_b,
                                           int q, double n_t);
};

/// Bits b_1..b_q as 0/1 values; index 0 is b_1.
using Bits = std::span<const std::uint8_t>;

/// Expected count in bit interval q (1-based) for transmitted bits b_1..b_q.
double poisson_mean(int q, Bits history, const ChannelIncrements& inc);

struct ConditionalMeans {
  double chi0 = 0.0;  // b_q = 0
  double chi1 = 0.0;  // b_q = 1
};

/// chi_0 and chi_1 given the previous bits b_1..b_{q-1}.
ConditionalMeans conditional_means(int q, Bits previous, const ChannelIncrements& inc);

/// Pr(N < psi) and Pr(N >= psi) for N ~ Poisson(chi).
double poisson_below(long psi, double chi);
double poisson_at_least(long psi, double chi);

/// BER of bit q given b_1..b_{q-1} for threshold psi.
double ber_given_history(int q, Bits previous, long psi, const ChannelIncrements& inc,
                         const ProtocolSpec& spec);
double ber_given_means(const ConditionalMeans& m, long psi, const ProtocolSpec& spec);

/// ceil(chi + 10 sqrt(chi)).
long psi_max(double chi_max);

/// Closed-form likelihood-ratio threshold. Needs chi_0 > 0 and chi_1 > chi_0.
long optimal_threshold_formula(const ConditionalMeans& m, const ProtocolSpec& spec);
/// Exhaustive argmin of the conditional BER over [0, psi_max(chi_1)];
/// ties go to the smaller threshold.
long optimal_threshold_scan(const ConditionalMeans& m, const ProtocolSpec& spec);

struct ThresholdChoice {
  long psi = 0;
  bool from_formula = false;  // false when chi_0 = 0 forced the scan
};

/// Formula when defined, otherwise the exhaustive scan. Throws DomainError
/// when chi_1 <= chi_0.
ThresholdChoice optimal_threshold(int q, Bits previous, const ChannelIncrements& inc,
                                  const ProtocolSpec& spec);

/// Largest exact-enumeration frame length.
inline constexpr int kMaxExactFrame = 20;

/// Average BER over q = 1..Q with every history b_{1:q-1} weighted 2^{-(q-1)}.
double average_ber(const ChannelIncrements& inc, long psi, const ProtocolSpec& spec);

/// Precomputed chi_0 for all histories; evaluates the average BER for many
/// thresholds without re-enumerating.
class HistoryTable {
 public:
  HistoryTable(const ChannelIncrements& inc, const ProtocolSpec& spec);
  double average_ber(long psi) const;
  double chi_max() const { return chi_max_; }

 private:
  ProtocolSpec spec_;
  double signal_ = 0.0;                   // n_t dH_0
  std::vector<std::vector<double>> chi0_;  // per q, per history
  double chi_max_ = 0.0;
};

struct MonteCarloBer {
  double ber = 0.0;
  double se = 0.0;
  long frames = 0;
};

/// Frames of Q bits drawn with Pr(b = 1) = P_1 and Poisson counts per bit.
MonteCarloBer average_ber_monte_carlo(const ChannelIncrements& inc, long psi,
                                      const ProtocolSpec& spec, long frames, std::uint64_t seed);
/// Same frames scored at every threshold in [psi_lo, psi_hi]; entry k equals
/// average_ber_monte_carlo(..., psi_lo + k, ...).
std::vector<MonteCarloBer> average_ber_monte_carlo_sweep(const ChannelIncrements& inc, long psi_lo,
                                                         long psi_hi, const ProtocolSpec& spec,
                                                         long frames, std::uint64_t seed);

enum class ThresholdSearch { exhaustive, golden };

struct AverageOptimum {
  long psi = 0;
  double ber = 0.0;
  long evaluations = 0;
};

AverageOptimum average_optimal_threshold(const ChannelIncrements& inc, const ProtocolSpec& spec,
                                         ThresholdSearch search = ThresholdSearch::exhaustive);

}  // namespace hetrx
