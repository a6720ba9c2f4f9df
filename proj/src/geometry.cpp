#include "hetrx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "hetrx/errors.hpp"

namespace hetrx {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGoldenRatio = 1.6180339887498948482;  // (1 + sqrt 5) / 2
constexpr double kMetresPerMicron = 1e-6;

double wrap_azimuth(double phi) {
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

bool overlaps(const Vec3& ci, double ai, const Vec3& cj, double aj) {
  // Touching discs are allowed; the tolerance absorbs roundoff in the chord.
  const double reach = ai + aj;
  return (ci - cj).norm() < reach * (1.0 - 1e-12);
}

void check_radii(std::span<const double> radii) {
  if (radii.empty()) throw LayoutError("layout needs at least one patch");
}

std::vector<double> equal_radii(double rx_radius, int n, double coverage) {
  return std::vector<double>(static_cast<std::size_t>(n),
                             equal_patch_radius(rx_radius, n, coverage));
}

// Lattice points with cos(theta) spread over the midpoints of [c_lo, c_hi] and
// azimuths following the golden-ratio sequence inside [phi_min, phi_max).
std::vector<Patch> lattice(std::span<const double> radii, double c_lo, double c_hi,
                           double phi_min, double phi_max) {
  const int n = static_cast<int>(radii.size());
  const double offset = 0.5 * (n - 1);  // B = (N_p - 1)/2
  std::vector<Patch> out;
  out.reserve(radii.size());
  for (int i = 1; i <= n; ++i) {
    const double cos_theta = c_lo + (c_hi - c_lo) * (2.0 * i - 1.0) / (2.0 * n);
    const double k = i - offset - 1.0;
    double frac = k / kGoldenRatio - std::floor(k / kGoldenRatio);
    double phi = phi_min + (phi_max - phi_min) * frac;
    if (phi_max - phi_min >= kTwoPi) phi = wrap_azimuth(phi);
    out.push_back({std::acos(std::clamp(cos_theta, -1.0, 1.0)), phi,
                   radii[static_cast<std::size_t>(i - 1)]});
  }
  return out;
}

}  // namespace

double Vec3::norm() const { return std::sqrt(norm2()); }

Vec3 Vec3::from_spherical(double r, double theta, double phi) {
  const double st = std::sin(theta);
  return {r * st * std::cos(phi), r * st * std::sin(phi), r * std::cos(theta)};
}

ApLayout::ApLayout(double rx_radius, std::vector<Patch> patches)
    : rx_radius_(rx_radius), patches_(std::move(patches)), coverage_(0.0) {
  if (!(rx_radius_ > 0.0) || !std::isfinite(rx_radius_)) {
    throw LayoutError("receiver radius must be positive");
  }
  if (patches_.empty()) throw LayoutError("layout needs at least one patch");
  centers_.reserve(patches_.size());
  for (std::size_t i = 0; i < patches_.size(); ++i) {
    const Patch& p = patches_[i];
    if (!(p.theta >= 0.0 && p.theta <= kPi)) {
      throw LayoutError("patch " + std::to_string(i) + ": polar angle outside [0, pi]");
    }
    if (!(p.phi >= 0.0 && p.phi < kTwoPi)) {
      throw LayoutError("patch " + std::to_string(i) + ": azimuth outside [0, 2pi)");
    }
    if (!(p.radius > 0.0 && p.radius < rx_radius_)) {
      throw LayoutError("patch " + std::to_string(i) + ": radius must lie in (0, r_R)");
    }
    centers_.push_back(Vec3::from_spherical(rx_radius_, p.theta, p.phi));
    coverage_ += p.radius * p.radius;
  }
  coverage_ /= 4.0 * rx_radius_ * rx_radius_;
  for (std::size_t i = 0; i < patches_.size(); ++i) {
    for (std::size_t j = i + 1; j < patches_.size(); ++j) {
      if (overlaps(centers_[i], patches_[i].radius, centers_[j], patches_[j].radius)) {
        throw LayoutError("patches " + std::to_string(i) + " and " + std::to_string(j) +
                          " overlap");
      }
    }
  }
}

bool ApLayout::identical_sizes() const {
  const double a0 = patches_.front().radius;
  return std::all_of(patches_.begin(), patches_.end(),
                     [a0](const Patch& p) { return p.radius == a0; });
}

int ApLayout::patch_at(const Vec3& p) const {
  for (std::size_t i = 0; i < patches_.size(); ++i) {
    const double a = patches_[i].radius;
    if ((p - centers_[i]).norm2() <= a * a) return static_cast<int>(i);
  }
  return -1;
}

double AngularRegion::area_fraction() const {
  const double t0 = std::clamp(theta_min, 0.0, kPi);
  const double t1 = std::clamp(theta_max, 0.0, kPi);
  const double dphi = std::clamp(phi_max - phi_min, 0.0, kTwoPi);
  return 0.5 * (std::cos(t0) - std::cos(t1)) * dphi / kTwoPi;
}

AngularRegion south_polar_cap(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw LayoutError("cap fraction must lie in (0, 1]");
  }
  return {std::acos(std::clamp(2.0 * fraction - 1.0, -1.0, 1.0)), kPi, 0.0, kTwoPi};
}

double equal_patch_radius(double rx_radius, int n, double coverage) {
  if (n < 1) throw LayoutError("need at least one patch");
  if (!(coverage > 0.0)) throw LayoutError("coverage must be positive");
  return 2.0 * rx_radius * std::sqrt(coverage / n);
}

std::vector<double> radii_from_coverages(double rx_radius, std::span<const double> coverages) {
  std::vector<double> radii;
  radii.reserve(coverages.size());
  for (double a : coverages) {
    if (!(a > 0.0)) throw LayoutError("patch coverage must be positive");
    radii.push_back(2.0 * rx_radius * std::sqrt(a));
  }
  return radii;
}

std::vector<double> random_size_coverages(int n, double coverage, int spread, std::uint64_t seed) {
  if (n < 1 || spread < 1 || !(coverage > 0.0)) {
    throw LayoutError("random sizes need N_p >= 1, spread >= 1 and positive coverage");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(1, spread);
  std::vector<double> g(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& x : g) {
    x = pick(rng);
    sum += x;
  }
  for (double& x : g) x = coverage * x / sum;
  return g;
}

ApLayout layout_fibonacci(double rx_radius, int n, double coverage) {
  return layout_fibonacci(rx_radius, equal_radii(rx_radius, n, coverage));
}

ApLayout layout_fibonacci(double rx_radius, std::span<const double> radii) {
  check_radii(radii);
  const int n = static_cast<int>(radii.size());
  const double offset = 0.5 * (n - 1);
  std::vector<Patch> patches;
  patches.reserve(radii.size());
  for (int i = 1; i <= n; ++i) {
    const double k = i - offset - 1.0;
    const double theta = kPi / 2.0 - std::asin(2.0 * k / n);
    const double phi = wrap_azimuth(4.0 * kPi * k / (1.0 + std::sqrt(5.0)));
    patches.push_back({theta, phi, radii[static_cast<std::size_t>(i - 1)]});
  }
  return ApLayout(rx_radius, std::move(patches));
}

ApLayout layout_random(double rx_radius, int n, double coverage, std::uint64_t seed,
                       int max_attempts) {
  return layout_random(rx_radius, equal_radii(rx_radius, n, coverage), seed, max_attempts);
}

ApLayout layout_random(double rx_radius, std::span<const double> radii, std::uint64_t seed,
                       int max_attempts) {
  check_radii(radii);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Largest patches first; each one is redrawn until it clears the others.
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return radii[a] > radii[b]; });

  std::vector<Patch> patches(radii.size());
  std::vector<Vec3> placed_centers;
  std::vector<double> placed_radii;
  int attempts = 0;
  for (std::size_t idx : order) {
    const double a = radii[idx];
    for (;;) {
      if (++attempts > max_attempts) {
        throw LayoutError("random placement budget exhausted; reduce the coverage or N_p");
      }
      const double cos_theta = 2.0 * unit(rng) - 1.0;
      const double phi = kTwoPi * unit(rng);
      const double theta = std::acos(cos_theta);
      const Vec3 c = Vec3::from_spherical(rx_radius, theta, phi);
      bool clear = true;
      for (std::size_t k = 0; k < placed_centers.size() && clear; ++k) {
        clear = !overlaps(c, a, placed_centers[k], placed_radii[k]);
      }
      if (!clear) continue;
      patches[idx] = {theta, wrap_azimuth(phi), a};
      placed_centers.push_back(c);
      placed_radii.push_back(a);
      break;
    }
  }
  return ApLayout(rx_radius, std::move(patches));
}

ApLayout layout_region(double rx_radius, int n, double coverage, const AngularRegion& region) {
  return layout_region(rx_radius, equal_radii(rx_radius, n, coverage), region);
}

ApLayout layout_region(double rx_radius, std::span<const double> radii,
                       const AngularRegion& region) {
  check_radii(radii);
  const double t0 = std::clamp(region.theta_min, 0.0, kPi);
  const double t1 = std::clamp(region.theta_max, 0.0, kPi);
  if (!(t1 > t0) || !(region.phi_max > region.phi_min)) {
    throw LayoutError("angular region is empty");
  }
  if (region.phi_min < 0.0 || region.phi_max > kTwoPi + 1e-12) {
    throw LayoutError("region azimuths must lie in [0, 2pi]");
  }
  const double phi_max = std::min(region.phi_max, kTwoPi);
  std::vector<Patch> patches =
      lattice(radii, std::cos(t1), std::cos(t0), region.phi_min, phi_max);
  try {
    return ApLayout(rx_radius, std::move(patches));
  } catch (const LayoutError& e) {
    throw LayoutError(std::string("region too small to host the patches: ") + e.what());
  }
}

ApLayout layout_explicit(double rx_radius, std::vector<Patch> patches) {
  return ApLayout(rx_radius, std::move(patches));
}

void write_layout(std::ostream& out, const ApLayout& layout) {
  char buf[128];
  out << "# schema=hetrx.layout.v1\n";
  std::snprintf(buf, sizeof buf, "# rx_radius_m=%.17g\n", layout.rx_radius() * kMetresPerMicron);
  out << buf;
  std::snprintf(buf, sizeof buf, "# coverage=%.17g\n", layout.coverage());
  out << buf;
  out << "theta_rad,phi_rad,radius_m\n";
  for (const Patch& p : layout.patches()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.theta, p.phi,
                  p.radius * kMetresPerMicron);
    out << buf;
  }
}

ApLayout read_layout(std::istream& in) {
  std::string line;
  double rx_radius_m = -1.0;
  bool header_seen = false;
  std::vector<Patch> patches;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# rx_radius_m=";
      if (line.rfind(key, 0) == 0) rx_radius_m = std::stod(line.substr(key.size()));
      continue;
    }
    if (!header_seen) {
      if (line != "theta_rad,phi_rad,radius_m") {
        throw LayoutError("layout file: unexpected column header");
      }
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    Patch p;
    char c1 = 0;
    char c2 = 0;
    double radius_m = 0.0;
    if (!(row >> p.theta >> c1 >> p.phi >> c2 >> radius_m) || c1 != ',' || c2 != ',') {
      throw LayoutError("layout file: malformed record on line " + std::to_string(line_no));
    }
    p.radius = radius_m / kMetresPerMicron;
    patches.push_back(p);
  }
  if (rx_radius_m <= 0.0) throw LayoutError("layout file: missing rx_radius_m");
  return ApLayout(rx_radius_m / kMetresPerMicron, std::move(patches));
}

}  // namespace hetrx
