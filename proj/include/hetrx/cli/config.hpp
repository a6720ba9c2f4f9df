#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hetrx/analytic_cir.hpp"
#include "hetrx/channel.hpp"
#include "hetrx/comms.hpp"
#include "hetrx/geometry.hpp"
#include "hetrx/particle_sim.hpp"

namespace hetrx::cli {

struct KeyInfo {
  std::string key;
  std::string default_value;
  std::string help;  // includes the unit
};

/// Every accepted key with its default and documentation.
const std::vector<KeyInfo>& known_keys();

/// Resolved experiment configuration: defaults, then the config file, then
/// command-line overrides. Unknown keys raise ConfigError.
class Config {
 public:
  Config();

  /// Reads "key = value" lines; '#' starts a comment.
  void load(std::istream& in, const std::string& origin = "config");
  void load_file(const std::string& path);
  /// "key=value".
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> num_list(const std::string& key) const;
  std::vector<long> int_list(const std::string& key) const;
  std::vector<std::string> str_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  void write(std::ostream& out) const;

  ChannelParams channel() const;
  PointTx point_tx() const;
  MembraneFusionTx mf_tx() const;
  SimConfig sim() const;
  ProtocolSpec protocol() const;
  MfOptions mf_options() const;
  std::vector<double> time_grid() const;
  AngularRegion region() const;
  /// Layout from the layout.* keys with the given patch count.
  ApLayout layout(int n_p) const;
  ApLayout layout() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Range-expanded integer list such as "5:49:2" or "1,3,11".
std::vector<long> parse_int_list(const std::string& text);

}  // namespace hetrx::cli
