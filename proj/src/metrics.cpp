#include "fss3d/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fss3d/errors.hpp"

namespace fss {

double intensity_error(const BeamBinImage& synth, const BeamBinImage& data,
                       const BinaryMask& omega) {
  if (synth.intensities.size() != data.intensities.size() ||
      omega.bits.size() != synth.intensities.size())
    throw Error(ErrorCode::InvalidConfig, "intensity_error: geometry mismatch");
  const float ps = synth.max_intensity();
  const float pd = data.max_intensity();
  const double inv_s = ps > 0.0f ? 1.0 / ps : 1.0;
  const double inv_d = pd > 0.0f ? 1.0 / pd : 1.0;
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < omega.bits.size(); ++i) {
    if (!omega.bits[i]) continue;
    sum += std::abs(synth.intensities[i] * inv_s - data.intensities[i] * inv_d);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyRegion, "intensity_error: empty pixel set");
  return sum / static_cast<double>(n);
}

double contour_error(const ContourMatch& match) { return match.lambda; }

double average_error(const std::vector<double>& per_view) {
  if (per_view.empty()) return 0.0;
  double s = 0.0;
  for (double v : per_view) s += v;
  return s / static_cast<double>(per_view.size());
}

NormalizedErrors image_error(double aie_t, double ace_t, double aie_0, double ace_0) {
  NormalizedErrors out;
  if (aie_0 > 0.0) {
    out.naie = aie_t / aie_0;
  } else {
    out.naie = 1.0;
    out.zero_baseline = true;
  }
  if (ace_0 > 0.0) {
    out.nace = ace_t / ace_0;
  } else {
    out.nace = 1.0;
    out.zero_baseline = true;
  }
  out.e_i = 0.5 * (out.naie + out.nace);
  return out;
}

std::vector<std::uint8_t> voxelize(const TriangleMesh& mesh, const Vec3& lo, const Vec3& hi,
                                   int resolution) {
  const int n = resolution;
  std::vector<std::uint8_t> inside(static_cast<size_t>(n) * n * n, 0);
  const Vec3 cs = (hi - lo) / n;

  // bin triangles over (x, y) so each column only tests local candidates
  std::vector<std::vector<int>> bins(static_cast<size_t>(n) * n);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh.vertices[tr[k]];
      xmin = std::min(xmin, v.x());
      xmax = std::max(xmax, v.x());
      ymin = std::min(ymin, v.y());
      ymax = std::max(ymax, v.y());
    }
    int i0 = std::clamp(static_cast<int>((xmin - lo.x()) / cs.x()), 0, n - 1);
    int i1 = std::clamp(static_cast<int>((xmax - lo.x()) / cs.x()), 0, n - 1);
    int j0 = std::clamp(static_cast<int>((ymin - lo.y()) / cs.y()), 0, n - 1);
    int j1 = std::clamp(static_cast<int>((ymax - lo.y()) / cs.y()), 0, n - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) bins[static_cast<size_t>(i) * n + j].push_back(t);
  }

  // parity fill along each z column; tiny irrational offset dodges
  // edge-exact crossings
  const double ex = 1.23456789e-7 * cs.x(), ey = 2.3456789e-7 * cs.y();
  std::vector<double> zs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = lo.x() + (i + 0.5) * cs.x() + ex;
      const double y = lo.y() + (j + 0.5) * cs.y() + ey;
      zs.clear();
      for (int t : bins[static_cast<size_t>(i) * n + j]) {
        const auto& tr = mesh.triangles[t];
        const Vec3& a = mesh.vertices[tr[0]];
        const Vec3& b = mesh.vertices[tr[1]];
        const Vec3& c = mesh.vertices[tr[2]];
        const double d = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
        if (std::abs(d) < 1e-300) continue;
        const double u = ((x - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y - a.y())) / d;
        const double v = ((b.x() - a.x()) * (y - a.y()) - (x - a.x()) * (b.y() - a.y())) / d;
        if (u < 0.0 || v < 0.0 || u + v > 1.0) continue;
        zs.push_back(a.z() + u * (b.z() - a.z()) + v * (c.z() - a.z()));
      }
      if (zs.empty()) continue;
      std::sort(zs.begin(), zs.end());
      // walk cells between crossing pairs
      for (size_t p = 0; p + 1 < zs.size(); p += 2) {
        int k0 = std::clamp(static_cast<int>(std::ceil((zs[p] - lo.z()) / cs.z() - 0.5)), 0, n - 1);
        int k1 = std::clamp(static_cast<int>(std::floor((zs[p + 1] - lo.z()) / cs.z() - 0.5)), 0,
                            n - 1);
        for (int k = k0; k <= k1; ++k) {
          const double zc = lo.z() + (k + 0.5) * cs.z();
          if (zc >= zs[p] && zc <= zs[p + 1])
            inside[(static_cast<size_t>(i) * n + j) * n + k] = 1;
        }
      }
    }
  return inside;
}

double nve(const TriangleMesh& a, const TriangleMesh& b, const NveConfig& cfg) {
  std::string why;
  if (!a.is_closed(&why)) throw Error(ErrorCode::OpenMesh, "nve: first mesh open: " + why);
  if (!b.is_closed(&why)) throw Error(ErrorCode::OpenMesh, "nve: second mesh open: " + why);

  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const auto* m : {&a, &b})
    for (const auto& v : m->vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  const Vec3 pad = cfg.inflate * (hi - lo);
  lo -= pad;
  hi += pad;

  const auto ia = voxelize(a, lo, hi, cfg.resolution);
  const auto ib = voxelize(b, lo, hi, cfg.resolution);
  size_t va = 0, vb = 0, vi = 0;
  for (size_t i = 0; i < ia.size(); ++i) {
    va += ia[i];
    vb += ib[i];
    vi += (ia[i] && ib[i]);
  }
  const double uni = static_cast<double>(va + vb - vi);
  if (uni <= 0.0) return 0.0;  // both empty at this resolution
  return (static_cast<double>(va + vb) - 2.0 * static_cast<double>(vi)) / uni;
}

}  // namespace fss
