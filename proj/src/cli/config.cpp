#include "hetrx/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hetrx/errors.hpp"

namespace hetrx::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  long v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
  }
  return v;
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"seed", "1", "seed for particle simulation and Monte Carlo BER"},
      {"channel.r_rx", "10", "receiver radius, um"},
      {"channel.r0", "20", "receiver-to-transmitter centre distance, um"},
      {"channel.d_sigma", "79.4", "molecule diffusion coefficient, um^2/s"},
      {"channel.k_d", "0.8", "molecule degradation rate, 1/s"},
      {"tx.n_sigma", "1000", "molecules released by a point transmitter"},
      {"tx.r_tx", "5", "fusion transmitter radius, um"},
      {"tx.d_v", "9", "vesicle diffusion coefficient, um^2/s"},
      {"tx.k_f", "30", "membrane fusion rate, um/s"},
      {"tx.n_v", "200", "vesicles per bit"},
      {"tx.eta", "5", "molecules per vesicle"},
      {"layout.kind", "fibonacci", "fibonacci | random | region | explicit | file"},
      {"layout.n_p", "11", "number of absorbing patches"},
      {"layout.coverage", "0.05", "total coverage ratio (sum a_i^2 / 4 r_R^2)"},
      {"layout.seed", "1", "seed for random placement"},
      {"layout.size_spread", "1", "unequal sizes: A_i proportional to integers in 1..spread (1 = equal)"},
      {"layout.size_seed", "1", "seed for unequal sizes"},
      {"layout.region_fraction", "0.4", "area fraction of the south polar cap used by 'region'"},
      {"layout.region_theta_min", "", "explicit region polar bounds, rad (overrides region_fraction)"},
      {"layout.region_theta_max", "", "explicit region polar bound, rad (clamped to pi)"},
      {"layout.region_phi_min", "0", "region azimuth lower bound, rad"},
      {"layout.region_phi_max", "6.283185307179586", "region azimuth upper bound, rad"},
      {"layout.thetas", "", "explicit layout: polar angles, rad, comma separated"},
      {"layout.phis", "", "explicit layout: azimuths, rad"},
      {"layout.coverages", "", "explicit layout: per-patch coverage A_i"},
      {"layout.file", "", "layout file written by the layout command"},
      {"grid.kind", "log", "log | linear time grid"},
      {"grid.t_min", "0.001", "first grid time, s"},
      {"grid.t_max", "10", "last grid time, s"},
      {"grid.points", "400", "grid size"},
      {"mf.n_max", "100", "eigen-series terms of the release profile"},
      {"cir.models", "PTFR,PTAR,MTAR", "models written by cir"},
      {"asymptotic.axis", "coverage", "coverage | n_p"},
      {"asymptotic.coverages", "0.01:0.3:0.01", "coverage sweep (start:stop:step or list)"},
      {"asymptotic.n_p_list", "11:201:10", "patch-count sweep"},
      {"compare.n_p_list", "5:49:2", "patch counts compared across distributions"},
      {"compare.random_trials", "1", "random layouts averaged per patch count"},
      {"compare.curve_n_p", "13", "patch count of the H(t) comparison curves"},
      {"protocol.q", "10", "bits per frame"},
      {"protocol.t_b", "0.8", "bit interval, s"},
      {"protocol.p1", "0.5", "probability of bit 1"},
      {"ber.models", "PTFR,PTAR,MTAR", "models in the BER sweeps"},
      {"ber.psi_min", "0", "threshold sweep start"},
      {"ber.psi_max", "-1", "threshold sweep end (-1: ceil(chi_max + 10 sqrt(chi_max)))"},
      {"ber.t_b_list", "0.2:2:0.2", "bit intervals for BER vs T_b, s"},
      {"ber.mode", "exact", "exact | monte_carlo"},
      {"ber.frames", "100000", "Monte Carlo frames"},
      {"sim.tx", "point", "point | mf"},
      {"sim.rx", "ap", "ap | full (fully absorbing)"},
      {"sim.dt", "1e-4", "channel time step, s"},
      {"sim.dt_tx", "1e-5", "vesicle time step, s"},
      {"sim.horizon", "2", "simulated time, s"},
      {"sim.bin_width", "0.02", "histogram bin width, s"},
      {"sim.realizations", "200", "independent realizations"},
      {"sim.entities", "1000", "molecules (point) or vesicles (mf) per realization"},
      {"sim.placement", "random", "random | fixed transmitter direction"},
      {"sim.tx_theta", "0", "fixed transmitter polar angle, rad"},
      {"sim.tx_phi", "0", "fixed transmitter azimuth, rad"},
      {"sim.stride", "true", "merge steps far from boundaries"},
      {"sim.instant_fusion", "false", "fusion probability 1 at the membrane"},
      {"sim.threads", "0", "worker threads (0 = all cores)"},
  };
  return keys;
}

std::vector<long> parse_int_list(const std::string& text) {
  std::vector<long> out;
  for (const std::string& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_long("list", parts[0]));
    } else if (parts.size() == 2 || parts.size() == 3) {
      const long a = parse_long("list", parts[0]);
      const long b = parse_long("list", parts[1]);
      const long step = parts.size() == 3 ? parse_long("list", parts[2]) : 1;
      if (step <= 0) throw ConfigError("list step must be positive: '" + item + "'");
      for (long v = a; v <= b; v += step) out.push_back(v);
    } else {
      throw ConfigError("bad range '" + item + "'");
    }
  }
  return out;
}

Config::Config() {
  for (const KeyInfo& k : known_keys()) values_[k.key] = k.default_value;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  it->second = value;
}

void Config::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::load(std::istream& in, const std::string& origin) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set_assignment(line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  load(f, path);
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double Config::num(const std::string& key) const { return parse_double(key, str(key)); }
long Config::integer(const std::string& key) const { return parse_long(key, str(key)); }

std::uint64_t Config::u64(const std::string& key) const {
  const std::string& s = str(key);
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an unsigned integer");
  }
  return v;
}

bool Config::flag(const std::string& key) const {
  const std::string& s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
}

std::vector<double> Config::num_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split(str(key), ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_double(key, parts[0]));
    } else if (parts.size() == 3) {
      const double a = parse_double(key, parts[0]);
      const double b = parse_double(key, parts[1]);
      const double step = parse_double(key, parts[2]);
      if (!(step > 0.0)) throw ConfigError("key '" + key + "': step must be positive");
      const long n = static_cast<long>(std::floor((b - a) / step + 1e-9));
      for (long i = 0; i <= n; ++i) out.push_back(a + i * step);
    } else {
      throw ConfigError("key '" + key + "': bad range '" + item + "'");
    }
  }
  return out;
}

std::vector<long> Config::int_list(const std::string& key) const {
  try {
    return parse_int_list(str(key));
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::vector<std::string> Config::str_list(const std::string& key) const {
  return split(str(key), ',');
}

void Config::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
}

ChannelParams Config::channel() const {
  ChannelParams p{num("channel.r_rx"), num("channel.r0"), num("channel.d_sigma"),
                  num("channel.k_d")};
  p.validate();
  return p;
}

PointTx Config::point_tx() const {
  PointTx tx{integer("tx.n_sigma")};
  validate_tx(tx);
  return tx;
}

MembraneFusionTx Config::mf_tx() const {
  MembraneFusionTx tx{num("tx.r_tx"), num("tx.d_v"), num("tx.k_f"), integer("tx.n_v"),
                      integer("tx.eta")};
  validate_tx(tx);
  return tx;
}

SimConfig Config::sim() const {
  SimConfig c;
  c.dt = num("sim.dt");
  c.dt_tx = num("sim.dt_tx");
  c.horizon = num("sim.horizon");
  c.bin_width = num("sim.bin_width");
  c.realizations = static_cast<int>(integer("sim.realizations"));
  c.entities = integer("sim.entities");
  c.seed = u64("seed");
  const std::string& placement = str("sim.placement");
  if (placement == "random") {
    c.placement = TxPlacement::uniform_random;
  } else if (placement == "fixed") {
    c.placement = TxPlacement::fixed;
  } else {
    throw ConfigError("sim.placement must be random or fixed");
  }
  c.tx_theta = num("sim.tx_theta");
  c.tx_phi = num("sim.tx_phi");
  c.far_field_stride = flag("sim.stride");
  c.instant_fusion = flag("sim.instant_fusion");
  c.threads = static_cast<int>(integer("sim.threads"));
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ProtocolSpec Config::protocol() const {
  ProtocolSpec s;
  s.q = static_cast<int>(integer("protocol.q"));
  s.t_b = num("protocol.t_b");
  s.p1 = num("protocol.p1");
  s.p0 = 1.0 - s.p1;
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

MfOptions Config::mf_options() const {
  MfOptions o;
  o.n_max = static_cast<int>(integer("mf.n_max"));
  if (o.n_max < 1) throw ConfigError("mf.n_max must be positive");
  return o;
}

std::vector<double> Config::time_grid() const {
  const double a = num("grid.t_min");
  const double b = num("grid.t_max");
  const long n = integer("grid.points");
  if (!(a > 0.0) || !(b > a) || n < 2) {
    throw ConfigError("grid needs 0 < t_min < t_max and at least two points");
  }
  const std::string& kind = str("grid.kind");
  if (kind == "log") return log_grid(a, b, static_cast<int>(n));
  if (kind == "linear") return linear_grid(a, b, static_cast<int>(n));
  throw ConfigError("grid.kind must be log or linear");
}

AngularRegion Config::region() const {
  if (str("layout.region_theta_min").empty() != str("layout.region_theta_max").empty()) {
    throw ConfigError("set both layout.region_theta_min and layout.region_theta_max");
  }
  if (str("layout.region_theta_min").empty()) {
    const double f = num("layout.region_fraction");
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("layout.region_fraction must lie in (0, 1]");
    return south_polar_cap(f);
  }
  return {num("layout.region_theta_min"), num("layout.region_theta_max"),
          num("layout.region_phi_min"), num("layout.region_phi_max")};
}

ApLayout Config::layout() const { return layout(static_cast<int>(integer("layout.n_p"))); }

ApLayout Config::layout(int n_p) const {
  const double r = num("channel.r_rx");
  const std::string& kind = str("layout.kind");
  if (kind == "file") {
    std::ifstream f(str("layout.file"));
    if (!f) throw ConfigError("cannot read layout file '" + str("layout.file") + "'");
    return read_layout(f);
  }
  if (kind == "explicit") {
    const auto th = num_list("layout.thetas");
    const auto ph = num_list("layout.phis");
    const auto cov = num_list("layout.coverages");
    if (th.empty() || th.size() != ph.size() || th.size() != cov.size()) {
      throw ConfigError("explicit layout needs equally long layout.thetas, phis and coverages");
    }
    const auto radii = radii_from_coverages(r, cov);
    std::vector<Patch> patches;
    for (std::size_t i = 0; i < th.size(); ++i) patches.push_back({th[i], ph[i], radii[i]});
    return layout_explicit(r, std::move(patches));
  }
  if (n_p < 1) throw ConfigError("layout.n_p must be positive");
  const double coverage = num("layout.coverage");
  const long spread = integer("layout.size_spread");
  if (spread < 1) throw ConfigError("layout.size_spread must be at least 1");
  std::vector<double> radii;
  if (spread > 1) {
    radii = radii_from_coverages(
        r, random_size_coverages(n_p, coverage, static_cast<int>(spread), u64("layout.size_seed")));
  } else {
    radii.assign(static_cast<std::size_t>(n_p), equal_patch_radius(r, n_p, coverage));
  }
  if (kind == "fibonacci") return layout_fibonacci(r, radii);
  if (kind == "random") return layout_random(r, radii, u64("layout.seed"));
  if (kind == "region") return layout_region(r, radii, region());
  throw ConfigError("layout.kind must be fibonacci, random, region, explicit or file");
}

}  // namespace hetrx::cli
