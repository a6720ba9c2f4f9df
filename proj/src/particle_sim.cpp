#include "hetrx/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <thread>

#include "hetrx/errors.hpp"

namespace hetrx {

namespace {

using Rng = std::mt19937_64;

// A merged step of k sub-steps is taken only while the walker is at least
// this many merged-step deviations away from the nearest boundary.
constexpr double kStrideClearance = 10.0;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kTxStream = ~0ULL;
constexpr std::uint64_t kVesicleStreamBase = 1ULL << 62;

struct Gauss3 {
  std::normal_distribution<double> n{0.0, 1.0};
  Vec3 operator()(Rng& rng) { return {n(rng), n(rng), n(rng)}; }
};

struct ChannelCtx {
  const ChannelParams* p;
  const ApLayout* layout;  // nullptr: fully absorbing
  double dt;
  double sigma;            // per-axis deviation of one step
  double horizon;
  bool stride;
};

// First point where the segment from outside point x to inside point y
// crosses the sphere |r| = radius, projected onto the sphere.
Vec3 entry_point(const Vec3& x, const Vec3& y, double radius) {
  const Vec3 d = y - x;
  const double a = d.norm2();
  const double b = 2.0 * x.dot(d);
  const double c = x.norm2() - radius * radius;
  const double disc = std::max(0.0, b * b - 4.0 * a * c);
  const double q = 0.5 * (-b + std::sqrt(disc));  // b < 0 for an entering segment
  const double s = q > 0.0 ? std::clamp(c / q, 0.0, 1.0) : 0.0;
  const Vec3 hit = x + d * s;
  return hit * (radius / hit.norm());
}

// Point where the segment from inside point x to outside point y leaves the
// sphere |r| = radius, projected onto the sphere.
Vec3 exit_point(const Vec3& x, const Vec3& y, double radius) {
  const Vec3 d = y - x;
  const double a = d.norm2();
  const double b = 2.0 * x.dot(d);
  const double c = x.norm2() - radius * radius;  // <= 0
  const double sq = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  double s = b >= 0.0 ? 2.0 * c / (-b - sq) : (-b + sq) / (2.0 * a);
  s = std::clamp(s, 0.0, 1.0);
  const Vec3 hit = x + d * s;
  const double n = hit.norm();
  return n > 0.0 ? hit * (radius / n) : hit;
}

std::optional<HitRecord> walk_molecule(Vec3 x, double t0, const ChannelCtx& c, Rng& rng) {
  const double rr = c.p->r_rx;
  double t_end = c.horizon;
  if (c.p->k_d > 0.0) {
    std::exponential_distribution<double> life(c.p->k_d);
    t_end = std::min(t_end, t0 + life(rng));
  }
  if (!(t_end > t0)) return std::nullopt;
  const long max_steps = static_cast<long>(std::floor((t_end - t0) / c.dt + 1e-9));
  Gauss3 gauss;
  const double var = c.sigma * c.sigma;
  long step = 0;
  while (step < max_steps) {
    long k = 1;
    if (c.stride) {
      const double gap = x.norm() - rr;
      const double kk = gap * gap / (kStrideClearance * kStrideClearance * var);
      if (kk >= 2.0) k = std::min<long>(static_cast<long>(std::min(kk, 1e12)), max_steps - step);
    }
    const Vec3 y = x + gauss(rng) * (c.sigma * std::sqrt(static_cast<double>(k)));
    step += k;
    if (y.norm2() <= rr * rr) {
      const Vec3 h = entry_point(x, y, rr);
      const int patch = c.layout ? c.layout->patch_at(h) : -1;
      if (!c.layout || patch >= 0) {
        HitRecord rec;
        rec.time = t0 + step * c.dt;
        rec.patch = patch;
        rec.x = h.x;
        rec.y = h.y;
        rec.z = h.z;
        return rec;
      }
      continue;  // reflected: stays at the start-of-step position
    }
    x = y;
  }
  return std::nullopt;
}

struct RealizationOut {
  std::vector<HitRecord> hits;
  std::vector<double> release_times;
};

Vec3 tx_center(const ChannelParams& p, const SimConfig& cfg, int r) {
  if (cfg.placement == TxPlacement::fixed) {
    return Vec3::from_spherical(p.r0, cfg.tx_theta, cfg.tx_phi);
  }
  return sample_tx_direction(cfg.seed, r) * p.r0;
}

template <class Work>
std::vector<RealizationOut> run_realizations(const SimConfig& cfg, Work&& work) {
  std::vector<RealizationOut> out(static_cast<std::size_t>(cfg.realizations));
  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.realizations));
  if (n_threads <= 1) {
    for (int r = 0; r < cfg.realizations; ++r) out[r] = work(r);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      for (int r = static_cast<int>(w); r < cfg.realizations; r += static_cast<int>(n_threads)) {
        out[r] = work(r);
      }
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

std::vector<double> make_edges(const SimConfig& cfg) {
  const int nb = cfg.bins();
  std::vector<double> edges(static_cast<std::size_t>(nb) + 1);
  for (int i = 0; i <= nb; ++i) edges[i] = i * cfg.bin_width;
  return edges;
}

SimResult assemble(std::vector<RealizationOut>&& parts, const SimConfig& cfg, long per_real,
                   const std::string& model) {
  SimResult res;
  res.edges = make_edges(cfg);
  res.realizations = cfg.realizations;
  res.molecules_per_realization = per_real;
  for (int r = 0; r < cfg.realizations; ++r) {
    for (HitRecord& h : parts[r].hits) {
      h.realization = r;
      res.hits.push_back(h);
    }
    res.release_times.insert(res.release_times.end(), parts[r].release_times.begin(),
                             parts[r].release_times.end());
  }

  const std::size_t nb = res.edges.size() - 1;
  std::vector<double> counts(nb, 0.0);
  for (const HitRecord& h : res.hits) {
    auto it = std::lower_bound(res.edges.begin() + 1, res.edges.end(), h.time);
    if (it == res.edges.end()) continue;
    counts[static_cast<std::size_t>(it - res.edges.begin() - 1)] += 1.0;
  }
  const double total = static_cast<double>(per_real) * cfg.realizations;
  CirSeries& s = res.cir;
  s.provenance = Provenance::simulated;
  s.model = model;
  s.seed = cfg.seed;
  double cum = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    cum += counts[b];
    s.time.push_back(res.edges[b + 1]);
    s.rate.push_back(counts[b] / (total * cfg.bin_width));
    s.cumulative.push_back(cum / total);
  }
  s.asymptote = s.cumulative.empty() ? 0.0 : s.cumulative.back();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", cfg.dt);
  s.metadata["dt_s"] = buf;
  s.metadata["realizations"] = std::to_string(cfg.realizations);
  s.metadata["molecules_per_realization"] = std::to_string(per_real);
  s.metadata["asymptote"] = "absorbed fraction at horizon";
  s.metadata["rate_definition"] = "hits in (t - bin_width, t] / (N bin_width)";
  return res;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !(dt_tx > 0.0)) throw DomainError("time steps must be positive");
  if (!(horizon >= dt)) throw DomainError("horizon must be at least one time step");
  if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
  if (realizations < 1) throw DomainError("need at least one realization");
  if (entities < 1) throw DomainError("need at least one molecule or vesicle");
}

int SimConfig::bins() const {
  return std::max(1, static_cast<int>(std::ceil(horizon / bin_width - 1e-9)));
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t realization, std::uint64_t entity) {
  return splitmix64(splitmix64(splitmix64(seed) ^ realization) ^ (entity * 0xd1b54a32d192ed03ULL));
}

Vec3 sample_tx_direction(std::uint64_t seed, int realization) {
  Rng rng(stream_seed(seed, static_cast<std::uint64_t>(realization), kTxStream));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cos_theta = 2.0 * u(rng) - 1.0;
  const double phi = 2.0 * std::numbers::pi * u(rng);
  return Vec3::from_spherical(1.0, std::acos(cos_theta), phi);
}

SimResult simulate_point_tx(const ChannelParams& p, const ApLayout* layout, const SimConfig& cfg) {
  p.validate();
  cfg.validate();
  if (layout && std::fabs(layout->rx_radius() - p.r_rx) > 1e-12 * p.r_rx) {
    throw DomainError("layout radius differs from the channel's r_R");
  }
  const ChannelCtx ctx{&p, layout, cfg.dt, std::sqrt(2.0 * p.d_sigma * cfg.dt), cfg.horizon,
                       cfg.far_field_stride};
  auto parts = run_realizations(cfg, [&](int r) {
    RealizationOut out;
    const Vec3 start = tx_center(p, cfg, r);
    for (long m = 0; m < cfg.entities; ++m) {
      Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(m)));
      if (auto hit = walk_molecule(start, 0.0, ctx, rng)) out.hits.push_back(*hit);
    }
    return out;
  });
  return assemble(std::move(parts), cfg, cfg.entities, layout ? "PTAR" : "PTFR");
}

SimResult simulate_mf_tx(const ChannelParams& p, const ApLayout* layout,
                         const MembraneFusionTx& tx, const SimConfig& cfg) {
  p.validate();
  cfg.validate();
  validate_tx(tx);
  check_mf_geometry(p, tx);
  if (layout && std::fabs(layout->rx_radius() - p.r_rx) > 1e-12 * p.r_rx) {
    throw DomainError("layout radius differs from the channel's r_R");
  }
  const ChannelCtx ctx{&p, layout, cfg.dt, std::sqrt(2.0 * p.d_sigma * cfg.dt), cfg.horizon,
                       cfg.far_field_stride};
  const double sigma_v = std::sqrt(2.0 * tx.d_v * cfg.dt_tx);
  const double var_v = sigma_v * sigma_v;
  const double p_fuse =
      cfg.instant_fusion ? 1.0
                         : std::min(1.0, tx.k_f * std::sqrt(std::numbers::pi * cfg.dt_tx / tx.d_v));
  const long max_steps = static_cast<long>(std::floor(cfg.horizon / cfg.dt_tx + 1e-9));

  auto parts = run_realizations(cfg, [&](int r) {
    RealizationOut out;
    const Vec3 center = tx_center(p, cfg, r);
    for (long v = 0; v < cfg.entities; ++v) {
      Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(r),
                          kVesicleStreamBase + static_cast<std::uint64_t>(v)));
      Gauss3 gauss;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Vec3 x{};  // relative to the transmitter centre
      long step = 0;
      std::optional<Vec3> fusion;
      while (step < max_steps) {
        long k = 1;
        if (cfg.far_field_stride) {
          const double gap = tx.r_tx - x.norm();
          const double kk = gap * gap / (kStrideClearance * kStrideClearance * var_v);
          if (kk >= 2.0) k = std::min<long>(static_cast<long>(kk), max_steps - step);
        }
        const Vec3 y = x + gauss(rng) * (sigma_v * std::sqrt(static_cast<double>(k)));
        step += k;
        if (y.norm2() >= tx.r_tx * tx.r_tx) {
          if (unit(rng) < p_fuse) {
            fusion = exit_point(x, y, tx.r_tx);
            break;
          }
          continue;  // reflected
        }
        x = y;
      }
      if (!fusion) continue;
      const double t_rel = step * cfg.dt_tx;
      out.release_times.push_back(t_rel);
      const Vec3 origin = center + *fusion;
      for (long j = 0; j < tx.eta; ++j) {
        Rng mrng(stream_seed(cfg.seed, static_cast<std::uint64_t>(r),
                             static_cast<std::uint64_t>(v * tx.eta + j)));
        if (auto hit = walk_molecule(origin, t_rel, ctx, mrng)) out.hits.push_back(*hit);
      }
    }
    return out;
  });
  return assemble(std::move(parts), cfg, cfg.entities * tx.eta, "MTAR");
}

namespace {

// counts[r][b] of hits per realization and bin
std::vector<std::vector<double>> per_realization_counts(const std::vector<HitRecord>& hits,
                                                        const std::vector<double>& edges,
                                                        int realizations) {
  std::vector<std::vector<double>> c(static_cast<std::size_t>(realizations),
                                     std::vector<double>(edges.size() - 1, 0.0));
  for (const HitRecord& h : hits) {
    if (h.realization < 0 || h.realization >= realizations) {
      throw DomainError("hit record with out-of-range realization index");
    }
    if (!(h.time > edges.front())) continue;
    auto it = std::lower_bound(edges.begin() + 1, edges.end(), h.time);
    if (it == edges.end()) continue;
    c[h.realization][static_cast<std::size_t>(it - edges.begin() - 1)] += 1.0;
  }
  return c;
}

void mean_se(const std::vector<std::vector<double>>& x, std::vector<double>& mean,
             std::vector<double>& se) {
  const std::size_t r = x.size();
  const std::size_t nb = x.front().size();
  mean.assign(nb, 0.0);
  se.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    double m = 0.0;
    for (std::size_t i = 0; i < r; ++i) m += x[i][b];
    m /= r;
    double ss = 0.0;
    for (std::size_t i = 0; i < r; ++i) ss += (x[i][b] - m) * (x[i][b] - m);
    mean[b] = m;
    se[b] = std::sqrt(ss / (r - 1) / r);
  }
}

void bootstrap_se(const std::vector<std::vector<double>>& x, int samples, std::uint64_t seed,
                  std::vector<double>& se) {
  const std::size_t r = x.size();
  const std::size_t nb = x.front().size();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, r - 1);
  std::vector<double> s1(nb, 0.0);
  std::vector<double> s2(nb, 0.0);
  std::vector<double> m(nb);
  for (int s = 0; s < samples; ++s) {
    std::fill(m.begin(), m.end(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
      const auto& row = x[pick(rng)];
      for (std::size_t b = 0; b < nb; ++b) m[b] += row[b];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      m[b] /= r;
      s1[b] += m[b];
      s2[b] += m[b] * m[b];
    }
  }
  se.assign(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const double mu = s1[b] / samples;
    se[b] = std::sqrt(std::max(0.0, s2[b] / samples - mu * mu) * samples / (samples - 1));
  }
}

}  // namespace

BinStats estimate_ci(const std::vector<HitRecord>& hits, const std::vector<double>& edges,
                     int realizations, long molecules_per_realization, CiMethod method,
                     int bootstrap_samples, std::uint64_t seed) {
  if (realizations < 2) throw DomainError("estimate_ci needs at least two realizations");
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
    throw DomainError("estimate_ci needs at least one bin with increasing edges");
  }
  if (molecules_per_realization < 1) throw DomainError("molecule count must be positive");
  if (method == CiMethod::bootstrap && bootstrap_samples < 2) {
    throw DomainError("bootstrap needs at least two resamples");
  }
  auto counts = per_realization_counts(hits, edges, realizations);
  const double n = static_cast<double>(molecules_per_realization);
  std::vector<std::vector<double>> rate = counts;
  std::vector<std::vector<double>> cum = counts;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double acc = 0.0;
    for (std::size_t b = 0; b < counts[i].size(); ++b) {
      rate[i][b] = counts[i][b] / (n * (edges[b + 1] - edges[b]));
      acc += counts[i][b];
      cum[i][b] = acc / n;
    }
  }
  BinStats out;
  out.edges = edges;
  mean_se(rate, out.rate_mean, out.rate_se);
  mean_se(cum, out.cumulative_mean, out.cumulative_se);
  if (method == CiMethod::bootstrap) {
    bootstrap_se(rate, bootstrap_samples, seed, out.rate_se);
    bootstrap_se(cum, bootstrap_samples, splitmix64(seed), out.cumulative_se);
  }
  return out;
}

CheckpointStats cumulative_at(const std::vector<HitRecord>& hits,
                              const std::vector<double>& checkpoints, int realizations,
                              long molecules_per_realization) {
  if (realizations < 2) throw DomainError("cumulative_at needs at least two realizations");
  if (checkpoints.empty() || !std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw DomainError("checkpoints must be non-empty and increasing");
  }
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), checkpoints.begin(), checkpoints.end());
  const BinStats s = estimate_ci(hits, edges, realizations, molecules_per_realization);
  return {checkpoints, s.cumulative_mean, s.cumulative_se};
}

}  // namespace hetrx
