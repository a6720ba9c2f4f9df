#pragma once

#include <cstdint>
#include <vector>

#include "hetrx/channel.hpp"
#include "hetrx/geometry.hpp"

namespace hetrx {

enum class TxPlacement { fixed, uniform_random };

struct SimConfig {
  double dt = 1e-4;          // channel time step, s
  double dt_tx = 1e-5;       // vesicle time step inside the transmitter, s
  double horizon = 2.0;      // s
  double bin_width = 0.02;   // histogram bin, s
  int realizations = 200;
  long entities = 1000;      // molecules (point TX) or vesicles (MF TX) per realization
  std::uint64_t seed = 1;
  TxPlacement placement = TxPlacement::uniform_random;
  double tx_theta = 0.0;     // used when placement == fixed
  double tx_phi = 0.0;
  /// Merge k steps into one Gaussian step while the walker is at least
  /// 10 sqrt(k) step deviations away from every boundary.
  bool far_field_stride = true;
  /// Force P_f = 1 at the transmitter membrane.
  bool instant_fusion = false;
  int threads = 0;           // 0 = hardware concurrency

  void validate() const;
  int bins() const;
};

struct HitRecord {
  double time = 0.0;      // s
  int patch = -1;         // -1 for a fully absorbing receiver
  int realization = 0;
  double x = 0.0;         // hit point, um
  double y = 0.0;
  double z = 0.0;
};

struct SimResult {
  CirSeries cir;
  std::vector<HitRecord> hits;        // ordered by realization, then entity
  std::vector<double> release_times;  // MF only: vesicle fusion times
  std::vector<double> edges;          // histogram bin edges
  int realizations = 0;
  long molecules_per_realization = 0;
};

/// Point transmitter at distance r_0 from the receiver centre. `layout` of
/// nullptr means a fully absorbing receiver.
SimResult simulate_point_tx(const ChannelParams& p, const ApLayout* layout, const SimConfig& cfg);
SimResult simulate_mf_tx(const ChannelParams& p, const ApLayout* layout,
                         const MembraneFusionTx& tx, const SimConfig& cfg);

/// Unit direction of the transmitter for a realization (uniform on the sphere).
Vec3 sample_tx_direction(std::uint64_t seed, int realization);

/// Counter-based seed for entity `entity` of realization `realization`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t realization, std::uint64_t entity);

enum class CiMethod { normal, bootstrap };

/// Per-bin mean and standard error across realizations.
struct BinStats {
  std::vector<double> edges;
  std::vector<double> rate_mean;        // 1/s, per molecule
  std::vector<double> rate_se;
  std::vector<double> cumulative_mean;  // fraction absorbed by each right edge
  std::vector<double> cumulative_se;
};

BinStats estimate_ci(const std::vector<HitRecord>& hits, const std::vector<double>& edges,
                     int realizations, long molecules_per_realization,
                     CiMethod method = CiMethod::normal, int bootstrap_samples = 1000,
                     std::uint64_t seed = 7);

/// Cumulative absorbed fraction at arbitrary checkpoints with its standard
/// error across realizations.
struct CheckpointStats {
  std::vector<double> time;
  std::vector<double> mean;
  std::vector<double> se;
};

CheckpointStats cumulative_at(const std::vector<HitRecord>& hits,
                              const std::vector<double>& checkpoints, int realizations,
                              long molecules_per_realization);

}  // namespace hetrx
