#include "fss3d/shapes.hpp"

#include <cmath>
#include <map>

namespace fss {

namespace {

TriangleMesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  return m;
}

TriangleMesh subdivide(const TriangleMesh& in) {
  TriangleMesh out;
  out.vertices = in.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec3 p = (out.vertices[a] + out.vertices[b]).normalized();
    out.vertices.push_back(p);
    int idx = static_cast<int>(out.vertices.size()) - 1;
    midpoint[key] = idx;
    return idx;
  };
  for (const auto& tri : in.triangles) {
    int ab = mid(tri[0], tri[1]);
    int bc = mid(tri[1], tri[2]);
    int ca = mid(tri[2], tri[0]);
    out.triangles.push_back({tri[0], ab, ca});
    out.triangles.push_back({tri[1], bc, ab});
    out.triangles.push_back({tri[2], ca, bc});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  TriangleMesh m = icosahedron();
  for (int i = 0; i < subdivisions; ++i) m = subdivide(m);
  for (auto& v : m.vertices) v = center + radius * v;
  return m;
}

TriangleMesh make_sphere_with_bump(double radius, int subdivisions, const Vec3& center,
                                   const Vec3& bump_dir, double bump_height, double bump_width) {
  TriangleMesh m = icosahedron();
  for (int i = 0; i < subdivisions; ++i) m = subdivide(m);
  const Vec3 dir = bump_dir.normalized();
  for (auto& v : m.vertices) {
    double arc = std::acos(std::clamp(v.dot(dir), -1.0, 1.0));
    double h = bump_height * std::exp(-0.5 * (arc / bump_width) * (arc / bump_width));
    v = center + (radius + h) * v;
  }
  return m;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  m.vertices = {
      {lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()},
      {hi.x(), hi.y(), lo.z()}, {lo.x(), hi.y(), lo.z()},
      {lo.x(), lo.y(), hi.z()}, {hi.x(), lo.y(), hi.z()},
      {hi.x(), hi.y(), hi.z()}, {lo.x(), hi.y(), hi.z()},
  };
  m.triangles = {
      {0, 2, 1}, {0, 3, 2},  // bottom (z = lo)
      {4, 5, 6}, {4, 6, 7},  // top
      {0, 1, 5}, {0, 5, 4},  // y = lo
      {2, 3, 7}, {2, 7, 6},  // y = hi
      {1, 2, 6}, {1, 6, 5},  // x = hi
      {3, 0, 4}, {3, 4, 7},  // x = lo
  };
  return m;
}

TriangleMesh make_ellipsoid(const Vec3& radii, int subdivisions, const Vec3& center) {
  TriangleMesh m = icosahedron();
  for (int i = 0; i < subdivisions; ++i) m = subdivide(m);
  for (auto& v : m.vertices) v = center + v.cwiseProduct(radii);
  return m;
}

void roughen_radial(TriangleMesh& mesh, const Vec3& center, double amplitude, double frequency) {
  const double f = frequency;
  for (auto& v : mesh.vertices) {
    const Vec3 d = (v - center).normalized();
    const double r = (v - center).norm();
    const double field = std::sin(f * d.x() + 1.0) * std::cos(0.83 * f * d.z()) +
                         0.8 * std::sin(1.17 * f * d.y() + 0.4) * std::sin(0.94 * f * d.z() + 2.0);
    v = center + r * (1.0 + amplitude * field / 1.8) * d;
  }
}

}  // namespace fss
