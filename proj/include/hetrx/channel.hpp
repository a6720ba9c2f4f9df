#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hetrx {

/// Geometry and medium. Lengths in um, times in s.
struct ChannelParams {
  double r_rx = 10.0;      // receiver radius r_R
  double r0 = 20.0;        // centre-to-centre distance to the transmitter
  double d_sigma = 79.4;   // molecule diffusion coefficient, um^2/s
  double k_d = 0.8;        // degradation rate, 1/s

  void validate() const;
  static ChannelParams table2() { return {}; }
};

struct PointTx {
  long n_sigma = 1000;
};

struct MembraneFusionTx {
  double r_tx = 5.0;   // um
  double d_v = 9.0;    // vesicle diffusion coefficient, um^2/s
  double k_f = 30.0;   // fusion rate, um/s
  long n_v = 200;
  long eta = 5;
};

using TxSpec = std::variant<PointTx, MembraneFusionTx>;

void validate_tx(const TxSpec& tx);
/// N_sigma for a point transmitter, N_v * eta for a fusion transmitter.
long total_molecules(const TxSpec& tx);
/// r_T + r_R < 0.9 r_0, required by the shell-release expressions.
void check_mf_geometry(const ChannelParams& p, const MembraneFusionTx& tx);

enum class Provenance { analytic, simulated };

/// Sampled CIR: hitting rate (1/s) and cumulative absorbed fraction.
struct CirSeries {
  std::vector<double> time;
  std::vector<double> rate;
  std::vector<double> cumulative;
  double asymptote = 0.0;
  Provenance provenance = Provenance::analytic;
  std::string model;                 // PTFR, PTAR, MTAR
  int truncation = 0;                // series terms used (0 when not applicable)
  std::optional<std::uint64_t> seed;
  bool accurate = true;              // false if a quadrature missed its tolerance
  std::map<std::string, std::string> metadata;
};

/// Logarithmic grid [t_min, t_max] with n points.
std::vector<double> log_grid(double t_min = 1e-3, double t_max = 10.0, int n = 400);
std::vector<double> linear_grid(double t_min, double t_max, int n);

}  // namespace hetrx
