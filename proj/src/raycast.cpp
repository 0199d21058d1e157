#include "fss3d/raycast.hpp"

#include <algorithm>
#include <cmath>

namespace fss {

namespace {
constexpr int kLeafSize = 8;

// Moller-Trumbore; returns t >= 0 or a negative value on miss.
inline double intersect(const Vec3& o, const Vec3& d, const Vec3& v0, const Vec3& e1,
                        const Vec3& e2) {
  Vec3 pvec = d.cross(e2);
  double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return -1.0;
  double inv = 1.0 / det;
  Vec3 tvec = o - v0;
  double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return -1.0;
  Vec3 qvec = tvec.cross(e1);
  double v = d.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(qvec) * inv;
}

inline bool box_hit(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& inv_d,
                    double t_best) {
  double t0 = 0.0, t1 = t_best;
  for (int k = 0; k < 3; ++k) {
    double a = (lo[k] - o[k]) * inv_d[k];
    double b = (hi[k] - o[k]) * inv_d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}
}  // namespace

RayCaster::RayCaster(const TriangleMesh& mesh) {
  const int n = mesh.triangle_count();
  v0_.resize(n);
  e1_.resize(n);
  e2_.resize(n);
  centroid_.resize(n);
  order_.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& t = mesh.triangles[i];
    v0_[i] = mesh.vertices[t[0]];
    e1_[i] = mesh.vertices[t[1]] - v0_[i];
    e2_[i] = mesh.vertices[t[2]] - v0_[i];
    centroid_[i] = mesh.triangle_center(i);
    order_[i] = i;
  }
  nodes_.reserve(2 * std::max(1, n / kLeafSize));
  if (n > 0) build(0, n);
}

void RayCaster::grow(Node& n, int tri) {
  for (const Vec3& p : {v0_[tri], Vec3(v0_[tri] + e1_[tri]), Vec3(v0_[tri] + e2_[tri])}) {
    n.lo = n.lo.cwiseMin(p);
    n.hi = n.hi.cwiseMax(p);
  }
}

int RayCaster::build(int begin, int end) {
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) grow(node, order_[i]);
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 extent = node.hi - node.lo;
  int axis = 0;
  if (extent.y() > extent.x()) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return centroid_[a][axis] < centroid_[b][axis]; });
  int l = build(begin, mid);
  int r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  nodes_[id].begin = nodes_[id].end = 0;
  return id;
}

RayHit RayCaster::nearest(const Vec3& origin, const Vec3& dir, int skip_triangle) const {
  RayHit best;
  if (nodes_.empty()) return best;
  Vec3 inv_d;
  for (int k = 0; k < 3; ++k)
    inv_d[k] = (std::abs(dir[k]) > 1e-300) ? 1.0 / dir[k] : std::copysign(1e300, dir[k]);
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!box_hit(n.lo, n.hi, origin, inv_d, best.t)) continue;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        int tri = order_[i];
        if (tri == skip_triangle) continue;
        double t = intersect(origin, dir, v0_[tri], e1_[tri], e2_[tri]);
        if (t > 1e-12 && t < best.t) {
          best.t = t;
          best.triangle = tri;
        }
      }
    } else {
      stack[top++] = n.left;
      stack[top++] = n.right;
    }
  }
  return best;
}

bool RayCaster::occluded(const Vec3& origin, const Vec3& dir, double t_max, int skip_triangle,
                         double t_eps) const {
  RayHit h = nearest(origin, dir, skip_triangle);
  return h.valid() && h.t > t_eps && h.t < t_max;
}

}  // namespace fss
