#include "fss3d/forward.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <queue>

#include "fss3d/errors.hpp"

namespace fss {

std::vector<PatchContribution> visible_patches(const TriangleMesh& mesh, const SonarPose& pose,
                                               const SonarGeometry& g, RenderStats* stats) {
  RenderStats st;
  std::vector<PatchContribution> out;

  // move the mesh into the sonar frame once
  TriangleMesh local = mesh;
  const Mat3 Rt = pose.rotation_matrix().transpose();
  for (auto& v : local.vertices) v = Rt * (v - pose.translation);
  RayCaster caster(local);

  for (int t = 0; t < local.triangle_count(); ++t) {
    const Vec3 c = local.triangle_center(t);
    const Spherical s = cart_to_sph(c);
    if (!g.in_fov(s)) continue;
    ++st.patches_in_fov;

    Vec3 n = local.triangle_normal(t);
    const double area2 = n.norm();
    if (area2 < 1e-16) continue;
    n /= area2;
    const double cos_inc = -n.dot(c.normalized());
    if (cos_inc <= 0.0) continue;  // back-facing patch

    // occlusion along the line of sight: nearest intersection wins
    RayHit h = caster.nearest(Vec3::Zero(), c.normalized(), t);
    if (h.valid() && h.t < s.range - 1e-9) continue;

    PatchContribution pc;
    pc.triangle = t;
    pc.b = nearest_beam(s.azimuth, g);
    pc.B = nearest_bin(s.range, g);
    pc.sph = s;
    pc.cos_incidence = cos_inc;
    pc.value = 0.5 * area2 * cos_inc / (s.range * s.range);
    for (int k = 0; k < 3; ++k) {
      const Spherical vs = cart_to_sph(local.vertices[local.triangles[t][k]]);
      pc.footprint[k] = Vec2(vs.azimuth, vs.range);
    }
    out.push_back(pc);
    ++st.patches_contributing;
  }
  st.empty = out.empty();
  if (stats) *stats = st;
  return out;
}

namespace {

// Sutherland-Hodgman clip of a convex polygon against an axis-aligned
// half-plane; keeps points with sign * (coord - bound) <= 0.
void clip_axis(std::vector<Vec2>& poly, int axis, double bound, double sign,
               std::vector<Vec2>& tmp) {
  tmp.clear();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double da = sign * (a[axis] - bound);
    const double db = sign * (b[axis] - bound);
    if (da <= 0.0) tmp.push_back(a);
    if ((da < 0.0) != (db < 0.0) && da != db) {
      const double t = da / (da - db);
      tmp.push_back(a + t * (b - a));
    }
  }
  poly.swap(tmp);
}

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

}  // namespace

void splat_footprint(BeamBinImage& img, const std::array<Vec2, 3>& footprint, double value,
                     double range_shift) {
  const SonarGeometry& g = img.geom;
  // continuous cell coordinates: u along beams, v along bins (1-based cells)
  double u[3], v[3];
  for (int k = 0; k < 3; ++k) {
    u[k] = 1.0 + (footprint[k].x() - g.theta_min()) / g.delta_theta();
    v[k] = 1.0 + (footprint[k].y() + range_shift - g.r_min) / g.delta_range();
  }
  const int b_lo = std::max(1, static_cast<int>(std::floor(std::min({u[0], u[1], u[2]}) + 0.5)));
  const int b_hi = std::min(g.n_beams, static_cast<int>(std::floor(std::max({u[0], u[1], u[2]}) + 0.5)));
  const int B_lo = std::max(1, static_cast<int>(std::floor(std::min({v[0], v[1], v[2]}) + 0.5)));
  const int B_hi = std::min(g.n_bins, static_cast<int>(std::floor(std::max({v[0], v[1], v[2]}) + 0.5)));
  if (b_lo > b_hi || B_lo > B_hi) return;

  const double area2 = (u[1] - u[0]) * (v[2] - v[0]) - (u[2] - u[0]) * (v[1] - v[0]);
  const double total_area = 0.5 * std::abs(area2);
  if (total_area < 1e-12) {
    // sliver or sub-cell patch: stamp the nearest cell to the centroid
    const int b = static_cast<int>(std::lround((u[0] + u[1] + u[2]) / 3.0));
    const int B = static_cast<int>(std::lround((v[0] + v[1] + v[2]) / 3.0));
    if (b >= 1 && b <= g.n_beams && B >= 1 && B <= g.n_bins)
      img.at(b, B) += static_cast<float>(value);
    return;
  }

  // distribute by exact overlap area per cell so cell values vary smoothly
  // with sub-cell motion of the footprint
  std::vector<Vec2> poly, tmp;
  double covered = 0.0;
  std::vector<std::tuple<int, int, double>> shares;
  for (int b = b_lo; b <= b_hi; ++b)
    for (int B = B_lo; B <= B_hi; ++B) {
      poly.assign({Vec2(u[0], v[0]), Vec2(u[1], v[1]), Vec2(u[2], v[2])});
      clip_axis(poly, 0, b - 0.5, -1.0, tmp);  // u >= b - 0.5
      if (poly.empty()) continue;
      clip_axis(poly, 0, b + 0.5, 1.0, tmp);   // u <= b + 0.5
      if (poly.empty()) continue;
      clip_axis(poly, 1, B - 0.5, -1.0, tmp);
      if (poly.empty()) continue;
      clip_axis(poly, 1, B + 0.5, 1.0, tmp);
      if (poly.size() < 3) continue;
      const double a = polygon_area(poly);
      if (a <= 0.0) continue;
      shares.emplace_back(b, B, a);
      covered += a;
    }
  if (shares.empty() || covered <= 0.0) {
    const int b = static_cast<int>(std::lround((u[0] + u[1] + u[2]) / 3.0));
    const int B = static_cast<int>(std::lround((v[0] + v[1] + v[2]) / 3.0));
    if (b >= 1 && b <= g.n_beams && B >= 1 && B <= g.n_bins)
      img.at(b, B) += static_cast<float>(value);
    return;
  }
  // share of the value proportional to overlap; the part clipped away by
  // the window boundary is dropped
  for (const auto& [b, B, a] : shares)
    img.at(b, B) += static_cast<float>(value * (a / total_area));
}

void apply_point_spread(BeamBinImage& img) {
  // separable 1-2-1 blur: adjacent beams overlap and the pulse envelope
  // spans neighbouring range bins
  const int nb = img.geom.n_beams, nB = img.geom.n_bins;
  std::vector<float> tmp(img.intensities.size(), 0.0f);
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B) {
      float acc = 2.0f * img.at(b, B);
      acc += (b > 1) ? img.at(b - 1, B) : img.at(b, B);
      acc += (b < nb) ? img.at(b + 1, B) : img.at(b, B);
      tmp[img.index(b, B)] = acc * 0.25f;
    }
  img.intensities.swap(tmp);
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B) {
      float acc = 2.0f * img.at(b, B);
      acc += (B > 1) ? img.at(b, B - 1) : img.at(b, B);
      acc += (B < nB) ? img.at(b, B + 1) : img.at(b, B);
      tmp[img.index(b, B)] = acc * 0.25f;
    }
  img.intensities.swap(tmp);
}

BeamBinImage render_raw(const TriangleMesh& mesh, const SonarPose& pose, const SonarGeometry& g,
                        RenderStats* stats) {
  RenderStats st;
  BeamBinImage img(g, pose);
  for (const auto& pc : visible_patches(mesh, pose, g, &st))
    splat_footprint(img, pc.footprint, pc.value);
  apply_point_spread(img);
  if (st.empty) std::cerr << "warning: render produced an empty image (mesh outside FoV?)\n";
  if (stats) *stats = st;
  return img;
}

BeamBinImage render(const TriangleMesh& mesh, const SonarPose& pose, const SonarGeometry& g,
                    RenderStats* stats) {
  BeamBinImage img = render_raw(mesh, pose, g, stats);
  img.normalize_peak();
  return img;
}

PixelProjection project_point(const Vec3& p, const SonarPose& pose, const SonarGeometry& g) {
  PixelProjection out;
  out.sph = cart_to_sph(pose.to_local(p));
  out.in_fov = g.in_fov(out.sph);
  out.b = std::clamp(nearest_beam(out.sph.azimuth, g), 1, g.n_beams);
  out.B = std::clamp(nearest_bin(out.sph.range, g), 1, g.n_bins);
  return out;
}

namespace {

// 8-connected flood labelling; marks the component seeded at (b0, B0) in
// `comp` with `id` and returns its pixel count.
size_t flood(const BinaryMask& m, std::vector<int>& comp, int b0, int B0, int id) {
  const int nb = m.geom.n_beams, nB = m.geom.n_bins;
  std::queue<std::pair<int, int>> q;
  q.push({b0, B0});
  comp[m.index(b0, B0)] = id;
  size_t n = 0;
  while (!q.empty()) {
    auto [b, B] = q.front();
    q.pop();
    ++n;
    for (int db = -1; db <= 1; ++db)
      for (int dB = -1; dB <= 1; ++dB) {
        int b2 = b + db, B2 = B + dB;
        if (b2 < 1 || b2 > nb || B2 < 1 || B2 > nB) continue;
        size_t i = m.index(b2, B2);
        if (m.bits[i] && comp[i] < 0) {
          comp[i] = id;
          q.push({b2, B2});
        }
      }
  }
  return n;
}

}  // namespace

BinaryMask largest_component(const BinaryMask& m) {
  const int nb = m.geom.n_beams, nB = m.geom.n_bins;
  std::vector<int> comp(m.bits.size(), -1);
  int best_id = -1, id = 0;
  size_t best_n = 0;
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B) {
      size_t i = m.index(b, B);
      if (m.bits[i] && comp[i] < 0) {
        size_t n = flood(m, comp, b, B, id);
        if (n > best_n) {
          best_n = n;
          best_id = id;
        }
        ++id;
      }
    }
  BinaryMask out(m.geom);
  for (size_t i = 0; i < m.bits.size(); ++i) out.bits[i] = (comp[i] == best_id) ? 1 : 0;
  return out;
}

BinaryMask fill_holes(const BinaryMask& m) {
  const int nb = m.geom.n_beams, nB = m.geom.n_bins;
  BinaryMask inv(m.geom);
  for (size_t i = 0; i < m.bits.size(); ++i) inv.bits[i] = m.bits[i] ? 0 : 1;
  std::vector<int> reach(inv.bits.size(), -1);
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B)
      if ((b == 1 || b == nb || B == 1 || B == nB) && inv.bits[inv.index(b, B)] &&
          reach[inv.index(b, B)] < 0)
        flood(inv, reach, b, B, 0);
  BinaryMask out = m;
  for (size_t i = 0; i < m.bits.size(); ++i)
    if (!m.bits[i] && reach[i] < 0) out.bits[i] = 1;
  return out;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  const int nb = m.geom.n_beams, nB = m.geom.n_bins;
  BinaryMask out(m.geom);
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B) {
      if (!m.at(b, B)) continue;
      for (int db = -radius; db <= radius; ++db)
        for (int dB = -radius; dB <= radius; ++dB) {
          int b2 = b + db, B2 = B + dB;
          if (b2 >= 1 && b2 <= nb && B2 >= 1 && B2 <= nB) out.at(b2, B2) = 1;
        }
    }
  return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
  const int nb = m.geom.n_beams, nB = m.geom.n_bins;
  BinaryMask out(m.geom);
  for (int b = 1; b <= nb; ++b)
    for (int B = 1; B <= nB; ++B) {
      bool all = true;
      for (int db = -radius; db <= radius && all; ++db)
        for (int dB = -radius; dB <= radius && all; ++dB) {
          int b2 = b + db, B2 = B + dB;
          all = b2 >= 1 && b2 <= nb && B2 >= 1 && B2 <= nB && m.at(b2, B2);
        }
      out.at(b, B) = all ? 1 : 0;
    }
  return out;
}

BinaryMask segment(const BeamBinImage& img, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw Error(ErrorCode::InvalidConfig, "segment: threshold must be in (0,1)");
  const float peak = img.max_intensity();
  if (peak <= 0.0f) throw Error(ErrorCode::EmptyMask, "segment: all-zero image");
  BinaryMask mask(img.geom);
  const float cut = static_cast<float>(threshold) * peak;
  size_t above = 0;
  for (size_t i = 0; i < img.intensities.size(); ++i) {
    mask.bits[i] = img.intensities[i] >= cut ? 1 : 0;
    above += mask.bits[i];
  }
  if (above == 0) throw Error(ErrorCode::EmptyMask, "segment: nothing above threshold");
  return fill_holes(largest_component(mask));
}

Contour extract_contour(const BinaryMask& mask, const SonarGeometry& g, const ContourConfig& cfg) {
  const int nb = g.n_beams, nB = g.n_bins;
  auto inside = [&](int b, int B) {
    return b >= 1 && b <= nb && B >= 1 && B <= nB && mask.at(b, B) != 0;
  };

  // top-left-most object pixel in (b, B) scan order
  int sb = 0, sB = 0;
  bool found = false;
  for (int b = 1; b <= nb && !found; ++b)
    for (int B = 1; B <= nB && !found; ++B)
      if (inside(b, B)) {
        sb = b;
        sB = B;
        found = true;
      }
  if (!found) throw Error(ErrorCode::EmptyMask, "extract_contour: empty mask");

  // Moore-neighbour tracing (8-connected), clockwise in (b, B)
  static const int dirs[8][2] = {{0, 1},  {1, 1},   {1, 0},  {1, -1},
                                 {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
  Contour contour;
  auto push = [&](int b, int B) {
    ContourPoint p;
    p.b = b;
    p.B = B;
    auto [R, theta] = beam_bin_to_range_azimuth(b, B, g);
    p.range = R;
    p.polar = polar_project(R, theta);
    contour.points.push_back(p);
  };

  int cb = sb, cB = sB, dir = 0;
  push(cb, cB);
  const size_t hard_cap = static_cast<size_t>(nb) * nB * 4;
  for (size_t steps = 0; steps < hard_cap; ++steps) {
    bool moved = false;
    for (int k = 0; k < 8; ++k) {
      int d = (dir + 6 + k) % 8;  // resume from backtrack+1, clockwise
      int b2 = cb + dirs[d][0], B2 = cB + dirs[d][1];
      if (inside(b2, B2)) {
        cb = b2;
        cB = B2;
        dir = d;
        moved = true;
        break;
      }
    }
    if (!moved) break;  // isolated pixel
    if (cb == sb && cB == sB) break;
    push(cb, cB);
  }

  // frontal flag: near-range third of the object's own extent (or of the
  // full window when configured)
  double r_lo = g.r_min, r_hi = g.r_max;
  if (cfg.object_extent_rule) {
    r_lo = std::numeric_limits<double>::infinity();
    r_hi = -r_lo;
    for (int b = 1; b <= nb; ++b)
      for (int B = 1; B <= nB; ++B)
        if (mask.at(b, B)) {
          double R = g.r_min + (B - 1) * g.delta_range();
          r_lo = std::min(r_lo, R);
          r_hi = std::max(r_hi, R);
        }
  }
  const double cut = r_lo + (r_hi - r_lo) / 3.0;
  for (auto& p : contour.points) p.frontal = (p.range <= cut);
  return contour;
}

BinaryMask mask_from_labels(const ComponentMasks& masks, std::initializer_list<PixelLabel> keep) {
  BinaryMask out(masks.geom);
  for (size_t i = 0; i < masks.labels.size(); ++i)
    for (PixelLabel l : keep)
      if (masks.labels[i] == static_cast<std::uint8_t>(l)) {
        out.bits[i] = 1;
        break;
      }
  return out;
}

}  // namespace fss
