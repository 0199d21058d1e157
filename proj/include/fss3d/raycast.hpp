// Median-split BVH over mesh triangles for nearest-hit ray queries.
#pragma once

#include <limits>
#include <vector>

#include "fss3d/mesh.hpp"

namespace fss {

struct RayHit {
  double t = std::numeric_limits<double>::infinity();  // distance along the unit ray
  int triangle = -1;
  bool valid() const { return triangle >= 0; }
};

class RayCaster {
public:
  // Keeps a copy of the vertex positions; `mesh` may go away afterwards.
  explicit RayCaster(const TriangleMesh& mesh);

  // Nearest intersection along origin + t * dir (dir need not be unit;
  // t is in units of |dir|). `skip_triangle` ignores one triangle id.
  RayHit nearest(const Vec3& origin, const Vec3& dir, int skip_triangle = -1) const;

  // True when some triangle other than `skip_triangle` intersects the
  // segment origin + t * dir with t in (t_eps, t_max).
  bool occluded(const Vec3& origin, const Vec3& dir, double t_max,
                int skip_triangle = -1, double t_eps = 1e-9) const;

private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;  // children, or
    int begin = 0, end = 0;     // leaf triangle range in order_
  };

  int build(int begin, int end);
  void grow(Node& n, int tri);

  std::vector<Vec3> v0_, e1_, e2_;  // per-triangle vertex + edges
  std::vector<Vec3> centroid_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace fss
