#include "fss3d/geometry.hpp"

#include <cmath>
#include <iostream>

namespace fss {

Spherical cart_to_sph(const Vec3& p) {
  Spherical s;
  s.range = p.norm();
  double rxy = std::hypot(p.x(), p.y());
  if (s.range < 1e-300) return s;  // origin maps to (0, 0, 0) by convention
  s.azimuth = std::atan2(p.x(), p.y());
  s.elevation = std::atan2(p.z(), rxy);
  return s;
}

Vec3 sph_to_cart(const Spherical& s) {
  double cphi = std::cos(s.elevation);
  return {s.range * cphi * std::sin(s.azimuth),
          s.range * cphi * std::cos(s.azimuth),
          s.range * std::sin(s.elevation)};
}

Vec3 approx_cart(const Spherical& s) {
  return {s.range * std::sin(s.azimuth),
          s.range * std::cos(s.azimuth),
          s.range * std::sin(s.elevation)};
}

Vec2 polar_project(double range, double azimuth) {
  return {range * std::sin(azimuth), range * std::cos(azimuth)};
}

namespace {
constexpr double kDeg = 0.017453292519943295;
}

void SonarGeometry::validate() const {
  if (!(r_min < r_max) || n_beams < 2 || n_bins < 2 || w_theta <= 0 || w_phi <= 0)
    throw Error(ErrorCode::InvalidConfig, "SonarGeometry: invalid window or resolution");
  if (w_phi < 6.0 * kDeg || w_phi > 10.0 * kDeg)
    std::cerr << "warning: w_phi outside the typical 6-10 deg range\n";
  if (w_theta < 15.0 * kDeg || w_theta > 65.0 * kDeg)
    std::cerr << "warning: w_theta outside the typical 15-65 deg range\n";
}

std::pair<double, double> beam_bin_to_range_azimuth(int b, int B, const SonarGeometry& g) {
  if (b < 1 || b > g.n_beams || B < 1 || B > g.n_bins)
    throw Error(ErrorCode::IndexOutOfRange, "beam_bin_to_range_azimuth: index outside (b,B) bounds");
  return {g.r_min + (B - 1) * g.delta_range(), g.theta_min() + (b - 1) * g.delta_theta()};
}

int nearest_beam(double theta, const SonarGeometry& g) {
  return 1 + static_cast<int>(std::lround((theta - g.theta_min()) / g.delta_theta()));
}

int nearest_bin(double range, const SonarGeometry& g) {
  return 1 + static_cast<int>(std::lround((range - g.r_min) / g.delta_range()));
}

Mat3 SonarPose::rotation_matrix() const {
  double angle = rotation.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, rotation / angle).toRotationMatrix();
}

Vec3 axis_angle_to_matrix_times(const Vec3& axis_angle, const Vec3& v) {
  double angle = axis_angle.norm();
  if (angle < 1e-300) return v;
  return Eigen::AngleAxisd(angle, axis_angle / angle) * v;
}

Vec3 transform_pose(const Vec3& p, const SonarPose& from, const SonarPose& to) {
  return to.to_local(from.to_world(p));
}

}  // namespace fss
