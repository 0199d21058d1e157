// Coordinate systems and rigid transforms for forward-scan sonar imaging.
//
// Conventions (fixed throughout the project):
//   - Sonar frame: +Y is the acoustic boresight, +X starboard, +Z up.
//   - Azimuth theta is measured from +Y toward +X; elevation phi from the
//     XY plane toward +Z.
//   - Beam/bin indices b, B are 1-based in the API and in all file formats.
//   - A pose maps sonar-frame coordinates to the reference (world) frame:
//     p_world = R * p_sonar + t. The reference pose is the identity.
#pragma once

#include <Eigen/Dense>
#include <utility>

#include "fss3d/errors.hpp"

namespace fss {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Spherical {
  double range = 0.0;      // meters
  double azimuth = 0.0;    // radians, from +Y toward +X
  double elevation = 0.0;  // radians, from XY plane toward +Z
};

Spherical cart_to_sph(const Vec3& p);
Vec3 sph_to_cart(const Spherical& s);

// Small-elevation approximation (cos(phi) ~ 1): (R sin(theta), R cos(theta), R sin(phi)).
// Warns once per call site semantics are not tracked; callers stay within the
// vertical field of view where the relative error is bounded by 1 - cos(w_phi).
Vec3 approx_cart(const Spherical& s);

// 2-D polar image coordinates (x, y) = R (sin(theta), cos(theta)).
Vec2 polar_project(double range, double azimuth);

// Discretization of the range/azimuth window into beams and range bins.
struct SonarGeometry {
  int n_beams = 96;
  int n_bins = 512;
  double r_min = 0.75;   // meters
  double r_max = 2.25;   // meters
  double w_theta = 0.0;  // half horizontal field of view, radians
  double w_phi = 0.0;    // half vertical field of view, radians

  double delta_range() const { return (r_max - r_min) / (n_bins - 1); }
  double delta_theta() const { return 2.0 * w_theta / (n_beams - 1); }
  double theta_min() const { return -w_theta; }

  bool in_fov(const Spherical& s) const {
    return s.range >= r_min && s.range <= r_max &&
           std::abs(s.azimuth) <= w_theta && std::abs(s.elevation) <= w_phi;
  }

  // Throws InvalidConfig on impossible windows; warns (stderr) when the
  // fields of view fall outside the ranges typical of existing sonars.
  void validate() const;
};

// (b, B) -> (R, theta), 1-based indices. Throws IndexOutOfRange.
std::pair<double, double> beam_bin_to_range_azimuth(int b, int B, const SonarGeometry& g);

// Nearest-cell inversion used when projecting points; no bounds check.
int nearest_beam(double theta, const SonarGeometry& g);
int nearest_bin(double range, const SonarGeometry& g);

// 6-DOF pose relative to the reference pose plus air-water interface
// parameters: depth of the sonar below the interface along the surface
// normal, and pitch of the boresight relative to the surface plane.
struct SonarPose {
  Vec3 rotation = Vec3::Zero();     // axis-angle, radians
  Vec3 translation = Vec3::Zero();  // meters
  double depth = 0.0;               // meters, > 0 when multipath is modeled
  double pitch = 0.0;               // radians

  Mat3 rotation_matrix() const;

  Vec3 to_world(const Vec3& p_local) const {
    return rotation_matrix() * p_local + translation;
  }
  Vec3 to_local(const Vec3& p_world) const {
    return rotation_matrix().transpose() * (p_world - translation);
  }

  bool is_identity() const {
    return rotation.isZero(0.0) && translation.isZero(0.0);
  }
};

Vec3 axis_angle_to_matrix_times(const Vec3& axis_angle, const Vec3& v);

// Re-express a point given in `from` sonar coordinates in `to` sonar
// coordinates (both poses relative to the common reference frame).
Vec3 transform_pose(const Vec3& p, const SonarPose& from, const SonarPose& to);

}  // namespace fss
