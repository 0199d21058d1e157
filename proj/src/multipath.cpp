#include "fss3d/multipath.hpp"

#include <algorithm>
#include <cmath>

#include "fss3d/errors.hpp"
#include "fss3d/rng.hpp"

namespace fss {

namespace {
constexpr double kTMagCap = 1e3;  // meters; beyond this the geometry is degenerate

Vec3 reference_normal(double pitch) { return {0.0, std::sin(pitch), -std::cos(pitch)}; }
}  // namespace

InterfaceModel InterfaceModel::from_reference(double depth, double pitch, double sigma,
                                              std::uint64_t seed) {
  InterfaceModel m;
  m.enabled = true;
  m.sigma = sigma;
  m.seed = seed;
  m.normal = reference_normal(pitch);
  m.offset = depth;
  return m;
}

void InterfaceModel::local_plane(const SonarPose& pose, Vec3* n_local,
                                 double* offset_local) const {
  *n_local = pose.rotation_matrix().transpose() * normal;
  *offset_local = offset - normal.dot(pose.translation);
}

double InterfaceModel::depth_of(const SonarPose& pose) const {
  return offset - normal.dot(pose.translation);
}

double InterfaceModel::pitch_of(const SonarPose& pose) const {
  Vec3 bore = pose.rotation_matrix() * Vec3(0, 1, 0);
  return std::asin(std::clamp(bore.dot(normal), -1.0, 1.0));
}

InterfaceModel perturb_interface(const InterfaceModel& iface, std::uint64_t view_key) {
  InterfaceModel out = iface;
  if (!iface.enabled || iface.sigma <= 0.0) {
    out.sigma = 0.0;
    return out;
  }
  Rng rng(derive_seed(iface.seed, view_key, 0x5746u));
  out.offset = iface.offset + rng.gaussian(0.0, iface.sigma);
  out.sigma = 0.0;  // realized, flat per view
  return out;
}

MultipathSolution surface_point(const Vec3& ps_local, const SonarPose& pose,
                                const SonarGeometry& g) {
  (void)g;
  MultipathSolution sol;
  sol.r1 = ps_local;
  const Spherical s = cart_to_sph(ps_local);
  sol.beta_prime = pose.pitch - s.elevation;
  const double d = pose.depth;
  const double r1 = s.range;
  const double denom = 2.0 * d - r1 * std::sin(sol.beta_prime);

  const Vec3 n = reference_normal(pose.pitch);  // upward surface normal, sonar frame
  Vec3 horiz = ps_local - ps_local.dot(n) * n;  // in-plane direction toward the target
  const double hn = horiz.norm();

  if (d <= 0.0 || denom <= 1e-12 || hn < 1e-12) {
    sol.degenerate = true;
    return sol;
  }
  sol.t_mag = d * r1 * std::cos(sol.beta_prime) / denom;
  if (!(sol.t_mag > 0.0) || sol.t_mag > kTMagCap) {
    sol.degenerate = true;
    return sol;
  }
  horiz /= hn;
  const Vec3 foot = d * n;                      // surface point directly above the sonar
  sol.surface_point = foot + sol.t_mag * horiz; // P_W
  sol.t = foot - sol.surface_point;             // t = |t| t_hat points from P_W to the foot
  return sol;
}

MultipathSolution mirror_point(MultipathSolution sol, const SonarPose& pose,
                               const SonarGeometry& g) {
  (void)pose;
  if (sol.degenerate) return sol;
  sol.r3 = -sol.surface_point;          // t - d = (F - P_W) - F
  sol.r2 = -(sol.r1 + sol.r3);
  sol.mirror_range = 0.5 * (sol.r1.norm() + sol.r2.norm() + sol.r3.norm());
  const Vec3 dir = sol.surface_point.normalized();  // -R3 direction
  sol.mirror_point = sol.mirror_range * dir;
  sol.mirror_elevation = std::atan2(dir.z(), std::hypot(dir.x(), dir.y()));
  sol.valid = std::abs(sol.mirror_elevation) <= g.w_phi;
  return sol;
}

double ghost_range(const MultipathSolution& sol) { return sol.mirror_range; }

MultipathSolution mirror_for_plane(const Vec3& ps_local, const Vec3& n_local,
                                   double offset_local, const SonarGeometry& g) {
  MultipathSolution sol;
  sol.r1 = ps_local;
  const double rise = n_local.dot(ps_local);
  sol.beta_prime = std::asin(std::clamp(rise / std::max(ps_local.norm(), 1e-300), -1.0, 1.0));
  if (offset_local <= 0.0 || rise >= offset_local - 1e-12) {
    sol.degenerate = true;  // sonar or target at/above the surface
    return sol;
  }
  // reflect the sonar origin across the plane; P_W is where the segment from
  // the target to the virtual sonar pierces the plane
  const Vec3 virtual_sonar = 2.0 * offset_local * n_local;
  const Vec3 dir = virtual_sonar - ps_local;
  const double denom = n_local.dot(dir);  // = 2 offset - rise > 0 here
  const double s = (offset_local - rise) / denom;
  sol.surface_point = ps_local + s * dir;
  const Vec3 foot = offset_local * n_local;
  sol.t = foot - sol.surface_point;
  sol.t_mag = sol.t.norm();
  if (sol.t_mag > kTMagCap) {
    sol.degenerate = true;
    return sol;
  }
  sol.r3 = -sol.surface_point;
  sol.r2 = -(sol.r1 + sol.r3);
  sol.mirror_range = 0.5 * (sol.r1.norm() + sol.r2.norm() + sol.r3.norm());
  const Vec3 mdir = sol.surface_point.normalized();
  sol.mirror_point = sol.mirror_range * mdir;
  sol.mirror_elevation = std::atan2(mdir.z(), std::hypot(mdir.x(), mdir.y()));
  sol.valid = std::abs(sol.mirror_elevation) <= g.w_phi;
  return sol;
}

namespace {

BinaryMask support_of(const BeamBinImage& img) {
  BinaryMask m(img.geom);
  for (size_t i = 0; i < img.intensities.size(); ++i) m.bits[i] = img.intensities[i] > 0.0f;
  return m;
}

BinaryMask region_of(const BeamBinImage& img, int close_radius) {
  BinaryMask s = support_of(img);
  if (s.count() == 0) return s;
  if (close_radius > 0) s = erode(dilate(s, close_radius), close_radius);
  return fill_holes(s);
}

}  // namespace

ComponentRender render_components(const TriangleMesh& mesh, const SonarPose& pose,
                                  const SonarGeometry& g, const InterfaceModel& iface,
                                  const MultipathRenderConfig& cfg) {
  ComponentRender out{BeamBinImage(g, pose), BeamBinImage(g, pose), BeamBinImage(g, pose),
                      BeamBinImage(g, pose), ComponentMasks(g), {}};

  RenderStats stats;
  out.patches = visible_patches(mesh, pose, g, &stats);
  const auto& patches = out.patches;
  for (const auto& pc : patches) splat_footprint(out.object, pc.footprint, pc.value);

  Vec3 n_local;
  double offset_local = 0.0;
  bool multipath_on = iface.enabled;
  if (multipath_on) {
    iface.local_plane(pose, &n_local, &offset_local);
    multipath_on = offset_local > 0.0;
  }

  if (multipath_on) {
    const double rho = cfg.surface_reflectivity;
    for (const auto& pc : patches) {
      const Vec3 center = sph_to_cart(pc.sph);
      const MultipathSolution sol = mirror_for_plane(center, n_local, offset_local, g);
      if (sol.degenerate) continue;

      // ghost: the direct footprint displaced to the longer path range
      // along the same beams
      const double rg = ghost_range(sol);
      if (rg >= g.r_min && rg <= g.r_max)
        splat_footprint(out.ghost, pc.footprint, rho * pc.value, rg - pc.sph.range);

      // mirror: virtual patch on the far side of the interface; mirror each
      // vertex to preserve the footprint shape
      if (sol.valid) {
        const Spherical ms = cart_to_sph(sol.mirror_point);
        if (g.in_fov(ms)) {
          std::array<Vec2, 3> foot;
          bool ok = true;
          for (int k = 0; k < 3 && ok; ++k) {
            const Vec3 vert = sph_to_cart({pc.footprint[k].y(), pc.footprint[k].x(),
                                           pc.sph.elevation});
            const MultipathSolution vsol = mirror_for_plane(vert, n_local, offset_local, g);
            if (vsol.degenerate) {
              ok = false;
              break;
            }
            const Spherical vms = cart_to_sph(vsol.mirror_point);
            foot[k] = Vec2(vms.azimuth, vms.range);
          }
          const double scale = (pc.sph.range * pc.sph.range) / (ms.range * ms.range);
          if (ok)
            splat_footprint(out.mirror, foot, rho * pc.value * scale);
          else
            out.mirror.at(nearest_beam(ms.azimuth, g), nearest_bin(ms.range, g)) +=
                static_cast<float>(rho * pc.value * scale);
        }
      }
    }
  }

  apply_point_spread(out.object);
  apply_point_spread(out.mirror);
  apply_point_spread(out.ghost);

  // one shared normalization keeps the component ratios
  for (size_t i = 0; i < out.combined.intensities.size(); ++i)
    out.combined.intensities[i] =
        out.object.intensities[i] + out.mirror.intensities[i] + out.ghost.intensities[i];
  const float peak = out.combined.max_intensity();
  if (peak > 0.0f)
    for (auto* img : {&out.object, &out.mirror, &out.ghost, &out.combined})
      for (auto& v : img->intensities) v /= peak;

  // region labels
  const BinaryMask obj = region_of(out.object, cfg.region_close_radius);
  const BinaryMask mir = region_of(out.mirror, cfg.region_close_radius);
  const BinaryMask gho = region_of(out.ghost, cfg.region_close_radius);
  for (size_t i = 0; i < out.masks.labels.size(); ++i) {
    std::uint8_t l = 0;
    if (obj.bits[i] && (gho.bits[i] || mir.bits[i]))
      l = static_cast<std::uint8_t>(PixelLabel::Corrupted);
    else if (obj.bits[i])
      l = static_cast<std::uint8_t>(PixelLabel::Object);
    else if (mir.bits[i])
      l = static_cast<std::uint8_t>(PixelLabel::Mirror);
    else if (gho.bits[i])
      l = static_cast<std::uint8_t>(PixelLabel::Ghost);
    out.masks.labels[i] = l;
  }
  return out;
}

BinaryMask corrupted_region(const ComponentMasks& masks) {
  return mask_from_labels(masks, {PixelLabel::Corrupted});
}

}  // namespace fss
