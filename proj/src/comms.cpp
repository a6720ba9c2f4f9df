#include "hetrx/comms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "hetrx/errors.hpp"

namespace hetrx {

void ProtocolSpec::validate() const {
  if (q < 1) throw DomainError("Q must be at least 1");
  if (!(t_b > 0.0)) throw DomainError("T_b must be positive");
  if (!(p0 >= 0.0 && p1 >= 0.0) || std::fabs(p0 + p1 - 1.0) > 1e-12) {
    throw DomainError("P_0 and P_1 must be probabilities summing to 1");
  }
}

void ChannelIncrements::validate() const {
  if (dh.empty()) throw DomainError("channel increments are empty");
  if (!(n_t > 0.0)) throw DomainError("N_T must be positive");
  double sum = 0.0;
  for (double d : dh) {
    if (!(d >= 0.0)) throw DomainError("channel increments must be non-negative");
    sum += d;
  }
  if (sum > 1.0 + 1e-12) throw DomainError("channel increments sum above 1");
}

ChannelIncrements ChannelIncrements::from_cumulative(const std::function<double(double)>& H,
                                                     double t_b, int q, double n_t) {
  if (q < 1 || !(t_b > 0.0)) throw DomainError("from_cumulative: need Q >= 1 and T_b > 0");
  ChannelIncrements inc;
  inc.n_t = n_t;
  double prev = 0.0;
  for (int k = 0; k < q; ++k) {
    const double cur = H((k + 1) * t_b);
    inc.dh.push_back(std::max(0.0, cur - prev));
    prev = cur;
  }
  inc.validate();
  return inc;
}

namespace {

void check_q(int q, std::size_t history_len, const ChannelIncrements& inc) {
  if (q < 1) throw DomainError("bit index q must be at least 1");
  if (static_cast<std::size_t>(q) > inc.dh.size()) {
    throw DomainError("bit index beyond the available channel increments");
  }
  if (history_len != static_cast<std::size_t>(q)) throw DomainError("history length must equal q");
}

}  // namespace

double poisson_mean(int q, Bits history, const ChannelIncrements& inc) {
  check_q(q, history.size(), inc);
  double chi = 0.0;
  for (int g = 1; g <= q; ++g) {
    if (history[g - 1]) chi += inc.dh[q - g];
  }
  return inc.n_t * chi;
}

ConditionalMeans conditional_means(int q, Bits previous, const ChannelIncrements& inc) {
  check_q(q, previous.size() + 1, inc);
  double chi0 = 0.0;
  for (int g = 1; g < q; ++g) {
    if (previous[g - 1]) chi0 += inc.dh[q - g];
  }
  chi0 *= inc.n_t;
  return {chi0, chi0 + inc.n_t * inc.dh[0]};
}

double poisson_below(long psi, double chi) {
  if (psi <= 0) return 0.0;
  if (!(chi > 0.0)) return 1.0;
  return boost::math::gamma_q(static_cast<double>(psi), chi);
}

double poisson_at_least(long psi, double chi) {
  if (psi <= 0) return 1.0;
  if (!(chi > 0.0)) return 0.0;
  return boost::math::gamma_p(static_cast<double>(psi), chi);
}

double ber_given_means(const ConditionalMeans& m, long psi, const ProtocolSpec& spec) {
  return spec.p1 * poisson_below(psi, m.chi1) + spec.p0 * poisson_at_least(psi, m.chi0);
}

double ber_given_history(int q, Bits previous, long psi, const ChannelIncrements& inc,
                         const ProtocolSpec& spec) {
  return ber_given_means(conditional_means(q, previous, inc), psi, spec);
}

long psi_max(double chi_max) {
  return static_cast<long>(std::ceil(chi_max + 10.0 * std::sqrt(std::max(0.0, chi_max))));
}

long optimal_threshold_formula(const ConditionalMeans& m, const ProtocolSpec& spec) {
  if (!(m.chi0 > 0.0)) throw DomainError("threshold formula undefined for chi_0 = 0");
  if (!(m.chi1 > m.chi0)) throw DomainError("chi_1 <= chi_0: uninformative channel");
  // chi_1 - chi_0 = N_T H(T_b)
  const double x = (std::log(spec.p0 / spec.p1) + (m.chi1 - m.chi0)) / std::log(m.chi1 / m.chi0);
  return std::max(0L, static_cast<long>(std::ceil(x)));
}

long optimal_threshold_scan(const ConditionalMeans& m, const ProtocolSpec& spec) {
  const long hi = psi_max(m.chi1);
  long best = 0;
  double best_ber = ber_given_means(m, 0, spec);
  for (long psi = 1; psi <= hi; ++psi) {
    const double b = ber_given_means(m, psi, spec);
    if (b < best_ber) {
      best_ber = b;
      best = psi;
    }
  }
  return best;
}

ThresholdChoice optimal_threshold(int q, Bits previous, const ChannelIncrements& inc,
                                  const ProtocolSpec& spec) {
  spec.validate();
  const ConditionalMeans m = conditional_means(q, previous, inc);
  if (!(m.chi1 > m.chi0)) throw DomainError("chi_1 <= chi_0: uninformative channel");
  if (!(m.chi0 > 0.0)) return {optimal_threshold_scan(m, spec), false};
  return {optimal_threshold_formula(m, spec), true};
}

HistoryTable::HistoryTable(const ChannelIncrements& inc, const ProtocolSpec& spec) : spec_(spec) {
  spec.validate();
  inc.validate();
  if (spec.q > kMaxExactFrame) {
    throw DomainError("exact enumeration supports Q <= 20; use the Monte Carlo mode");
  }
  if (static_cast<std::size_t>(spec.q) > inc.dh.size()) {
    throw DomainError("fewer channel increments than bits per frame");
  }
  signal_ = inc.n_t * inc.dh[0];
  chi0_.resize(static_cast<std::size_t>(spec.q));
  for (int q = 1; q <= spec.q; ++q) {
    const std::uint32_t count = 1u << (q - 1);
    auto& row = chi0_[q - 1];
    row.resize(count);
    for (std::uint32_t h = 0; h < count; ++h) {
      double chi = 0.0;
      for (int g = 1; g < q; ++g) {
        if ((h >> (g - 1)) & 1u) chi += inc.dh[q - g];
      }
      row[h] = inc.n_t * chi;
      chi_max_ = std::max(chi_max_, row[h] + signal_);
    }
  }
}

double HistoryTable::average_ber(long psi) const {
  double total = 0.0;
  for (const auto& row : chi0_) {
    double s = 0.0;
    for (double chi0 : row) s += ber_given_means({chi0, chi0 + signal_}, psi, spec_);
    total += s / static_cast<double>(row.size());
  }
  return total / static_cast<double>(chi0_.size());
}

double average_ber(const ChannelIncrements& inc, long psi, const ProtocolSpec& spec) {
  return HistoryTable(inc, spec).average_ber(psi);
}

std::vector<MonteCarloBer> average_ber_monte_carlo_sweep(const ChannelIncrements& inc, long psi_lo,
                                                         long psi_hi, const ProtocolSpec& spec,
                                                         long frames, std::uint64_t seed) {
  spec.validate();
  inc.validate();
  if (frames < 2) throw DomainError("Monte Carlo BER needs at least two frames");
  if (psi_lo < 0 || psi_hi < psi_lo) throw DomainError("Monte Carlo BER needs 0 <= psi_lo <= psi_hi");
  if (static_cast<std::size_t>(spec.q) > inc.dh.size()) {
    throw DomainError("fewer channel increments than bits per frame");
  }
  const std::size_t width = static_cast<std::size_t>(psi_hi - psi_lo + 1);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(spec.p1);
  std::vector<std::uint8_t> b(static_cast<std::size_t>(spec.q));
  std::vector<long> n(static_cast<std::size_t>(spec.q));
  std::vector<double> s1(width, 0.0), s2(width, 0.0);
  std::vector<int> errors(width);
  for (long f = 0; f < frames; ++f) {
    // The draws do not depend on the threshold: every threshold sees the same frames.
    for (auto& x : b) x = bit(rng) ? 1 : 0;
    for (int q = 1; q <= spec.q; ++q) {
      double chi = 0.0;
      for (int g = 1; g <= q; ++g) {
        if (b[g - 1]) chi += inc.dh[q - g];
      }
      chi *= inc.n_t;
      n[q - 1] = chi > 0.0 ? std::poisson_distribution<long>(chi)(rng) : 0;
    }
    std::fill(errors.begin(), errors.end(), 0);
    for (int q = 0; q < spec.q; ++q) {
      // Decide 1 iff n >= psi: a 0 errs for psi <= n, a 1 errs for psi > n.
      const long cut = std::clamp(n[q] - psi_lo + 1, 0L, static_cast<long>(width));
      if (b[q]) {
        for (std::size_t k = static_cast<std::size_t>(cut); k < width; ++k) ++errors[k];
      } else {
        for (std::size_t k = 0; k < static_cast<std::size_t>(cut); ++k) ++errors[k];
      }
    }
    for (std::size_t k = 0; k < width; ++k) {
      const double e = static_cast<double>(errors[k]) / spec.q;
      s1[k] += e;
      s2[k] += e * e;
    }
  }
  std::vector<MonteCarloBer> out(width);
  for (std::size_t k = 0; k < width; ++k) {
    out[k].frames = frames;
    out[k].ber = s1[k] / frames;
    const double var = std::max(0.0, (s2[k] - frames * out[k].ber * out[k].ber) / (frames - 1));
    out[k].se = std::sqrt(var / frames);
  }
  return out;
}

MonteCarloBer average_ber_monte_carlo(const ChannelIncrements& inc, long psi,
                                      const ProtocolSpec& spec, long frames, std::uint64_t seed) {
  return average_ber_monte_carlo_sweep(inc, psi, psi, spec, frames, seed).front();
}

AverageOptimum average_optimal_threshold(const ChannelIncrements& inc, const ProtocolSpec& spec,
                                         ThresholdSearch search) {
  const HistoryTable table(inc, spec);
  const long hi_limit = psi_max(table.chi_max());
  std::map<long, double> cache;
  auto f = [&](long psi) {
    auto it = cache.find(psi);
    if (it != cache.end()) return it->second;
    const double v = table.average_ber(psi);
    cache.emplace(psi, v);
    return v;
  };
  long lo = 0;
  long hi = hi_limit;
  if (search == ThresholdSearch::golden) {
    const double r = 0.5 * (3.0 - std::sqrt(5.0));
    while (hi - lo > 3) {
      long m1 = lo + std::max(1L, std::lround(r * (hi - lo)));
      long m2 = hi - std::max(1L, std::lround(r * (hi - lo)));
      if (m1 >= m2) m2 = m1 + 1;
      if (f(m1) <= f(m2)) {
        hi = m2;
      } else {
        lo = m1;
      }
    }
  }
  AverageOptimum best{lo, f(lo), 0};
  for (long psi = lo + 1; psi <= hi; ++psi) {
    const double v = f(psi);
    if (v < best.ber) best = {psi, v, 0};
  }
  best.evaluations = static_cast<long>(cache.size());
  return best;
}

}  // namespace hetrx
