#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace hetrx {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return dot(*this); }
  double norm() const;

  static Vec3 from_spherical(double r, double theta, double phi);
};

/// Absorbing patch: a disc of radius `radius` (um) centred at polar angle
/// `theta` and azimuth `phi` on the receiver sphere.
struct Patch {
  double theta = 0.0;
  double phi = 0.0;
  double radius = 0.0;
};

/// Immutable set of non-overlapping absorbing patches on a sphere of radius
/// r_R. Construction validates angle ranges, a_i < r_R and the pairwise
/// non-overlap rule |l_i - l_j| >= a_i + a_j (chord distance).
class ApLayout {
 public:
  ApLayout(double rx_radius, std::vector<Patch> patches);

  double rx_radius() const { return rx_radius_; }
  std::span<const Patch> patches() const { return patches_; }
  std::size_t size() const { return patches_.size(); }
  /// Sum a_i^2 / (4 r_R^2).
  double coverage() const { return coverage_; }
  /// True when the coverage exceeds the range where the homogenized CIR
  /// tracks particle simulations (0.2).
  bool beyond_validity() const { return coverage_ > kCoverageValidityLimit * (1.0 + 1e-12); }
  bool identical_sizes() const;

  /// Patch centre on the sphere (um), in Cartesian coordinates.
  const Vec3& center(std::size_t i) const { return centers_[i]; }
  /// Patch centre scaled to the unit sphere (l'_i = l_i / r_R).
  Vec3 unit_center(std::size_t i) const { return centers_[i] * (1.0 / rx_radius_); }

  /// Index of the patch containing surface point `p` (chord distance to the
  /// centre <= a_i), or -1.
  int patch_at(const Vec3& p) const;

  static constexpr double kCoverageValidityLimit = 0.2;

 private:
  double rx_radius_;
  std::vector<Patch> patches_;
  std::vector<Vec3> centers_;
  double coverage_;
};

/// Angular window on the sphere. theta_max may exceed pi (it is clamped).
struct AngularRegion {
  double theta_min = 0.0;
  double theta_max = 3.14159265358979323846;
  double phi_min = 0.0;
  double phi_max = 2.0 * 3.14159265358979323846;

  /// Fraction of the sphere surface inside the window after clamping.
  double area_fraction() const;
};

/// Cap around the south pole (theta = pi) covering `fraction` of the surface.
AngularRegion south_polar_cap(double fraction);

/// Common patch radius for `n` equal patches at coverage `coverage`.
double equal_patch_radius(double rx_radius, int n, double coverage);

ApLayout layout_fibonacci(double rx_radius, int n, double coverage);
ApLayout layout_fibonacci(double rx_radius, std::span<const double> radii);

ApLayout layout_random(double rx_radius, int n, double coverage, std::uint64_t seed,
                       int max_attempts = 200000);
ApLayout layout_random(double rx_radius, std::span<const double> radii,
                       std::uint64_t seed, int max_attempts = 200000);

ApLayout layout_region(double rx_radius, int n, double coverage,
                       const AngularRegion& region);
ApLayout layout_region(double rx_radius, std::span<const double> radii,
                       const AngularRegion& region);

ApLayout layout_explicit(double rx_radius, std::vector<Patch> patches);

/// Radii for patches with individual coverage fractions A_i.
std::vector<double> radii_from_coverages(double rx_radius, std::span<const double> coverages);

/// Unequal sizes: integers G_i drawn uniformly from 1..spread, then
/// A_i = A G_i / sum G. Deterministic under seed.
std::vector<double> random_size_coverages(int n, double coverage, int spread, std::uint64_t seed);

/// Structured-text layout file: header comments, then one record per patch
/// with theta (rad), phi (rad) and radius (m).
void write_layout(std::ostream& out, const ApLayout& layout);
ApLayout read_layout(std::istream& in);

}  // namespace hetrx
