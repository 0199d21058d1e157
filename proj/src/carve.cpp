#include "fss3d/carve.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>

#include "fss3d/errors.hpp"

namespace fss {

FeasibleRegion feasible_region(const BeamBinImage& img, const ComponentMasks* masks,
                               double segment_threshold) {
  const SonarGeometry& g = img.geom;
  BinaryMask highlight(g);
  if (masks) {
    highlight = mask_from_labels(*masks, {PixelLabel::Object, PixelLabel::Corrupted});
  } else {
    try {
      highlight = segment(img, segment_threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyMask) throw;
      return FeasibleRegion(g);  // nothing above threshold: empty region
    }
  }
  FeasibleRegion fr(g);
  for (int b = 1; b <= g.n_beams; ++b) {
    int first = -1;
    for (int B = 1; B <= g.n_bins; ++B)
      if (highlight.at(b, B)) {
        first = B;
        break;
      }
    if (first < 0) continue;
    for (int B = first; B <= g.n_bins; ++B) fr.at(b, B) = 1;  // shadow corridor to R_max
  }
  return fr;
}

std::vector<std::uint8_t> carve_occupancy(const std::vector<CarveView>& views,
                                          const VoxelGrid& grid, int min_views_in_fov,
                                          size_t* occupied) {
  struct ViewFrame {
    Mat3 Rt;
    Vec3 t;
    const FeasibleRegion* fr;
    const SonarGeometry* g;
  };
  std::vector<ViewFrame> frames;
  frames.reserve(views.size());
  for (const auto& v : views)
    frames.push_back({v.pose.rotation_matrix().transpose(), v.pose.translation, &v.region,
                      &v.region.geom});

  std::vector<std::uint8_t> occ(grid.cell_count(), 0);
  size_t n_occ = 0;
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j)
      for (int k = 0; k < grid.nz; ++k) {
        const Vec3 p = grid.center(i, j, k);
        int seen = 0;
        bool feasible = true;
        for (const auto& f : frames) {
          const Vec3 q = f.Rt * (p - f.t);
          const Spherical s = cart_to_sph(q);
          if (!f.g->in_fov(s)) continue;
          ++seen;
          const int b = std::clamp(nearest_beam(s.azimuth, *f.g), 1, f.g->n_beams);
          const int B = std::clamp(nearest_bin(s.range, *f.g), 1, f.g->n_bins);
          if (!f.fr->at(b, B)) {
            feasible = false;
            break;
          }
        }
        if (feasible && seen >= min_views_in_fov) {
          occ[grid.index(i, j, k)] = 1;
          ++n_occ;
        }
      }
  if (occupied) *occupied = n_occ;
  return occ;
}

namespace {

// Fills one voxel of every diagonally-opposed 2x2 configuration around a
// lattice edge; such edges would otherwise carry four boundary faces.
size_t regularize_diagonals(std::vector<std::uint8_t>& occ, const VoxelGrid& grid) {
  auto at = [&](int i, int j, int k) -> std::uint8_t& { return occ[grid.index(i, j, k)]; };
  size_t fixed = 0;
  bool changed = true;
  int guard = 0;
  while (changed && guard++ < 64) {
    changed = false;
    auto fix_block = [&](std::uint8_t& a, std::uint8_t& b, std::uint8_t& c, std::uint8_t& d) {
      // a d on one diagonal, b c on the other
      if (a && d && !b && !c) {
        b = 1;
        ++fixed;
        changed = true;
      } else if (!a && !d && b && c) {
        a = 1;
        ++fixed;
        changed = true;
      }
    };
    for (int i = 0; i + 1 < grid.nx; ++i)
      for (int j = 0; j + 1 < grid.ny; ++j)
        for (int k = 0; k < grid.nz; ++k)
          fix_block(at(i, j, k), at(i + 1, j, k), at(i, j + 1, k), at(i + 1, j + 1, k));
    for (int i = 0; i + 1 < grid.nx; ++i)
      for (int k = 0; k + 1 < grid.nz; ++k)
        for (int j = 0; j < grid.ny; ++j)
          fix_block(at(i, j, k), at(i + 1, j, k), at(i, j, k + 1), at(i + 1, j, k + 1));
    for (int j = 0; j + 1 < grid.ny; ++j)
      for (int k = 0; k + 1 < grid.nz; ++k)
        for (int i = 0; i < grid.nx; ++i)
          fix_block(at(i, j, k), at(i, j + 1, k), at(i, j, k + 1), at(i, j + 1, k + 1));
  }
  return fixed;
}

}  // namespace

void taubin_smooth(TriangleMesh& mesh, int iterations, double lambda, double mu) {
  const auto nb = vertex_neighbors(mesh);
  std::vector<Vec3> next(mesh.vertex_count());
  auto pass = [&](double w) {
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (nb[v].empty()) {
        next[v] = mesh.vertices[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (int u : nb[v]) mean += mesh.vertices[u];
      mean /= static_cast<double>(nb[v].size());
      next[v] = mesh.vertices[v] + w * (mean - mesh.vertices[v]);
    }
    mesh.vertices.swap(next);
  };
  for (int it = 0; it < iterations; ++it) {
    pass(lambda);
    pass(mu);
  }
}

TriangleMesh extract_surface(const std::vector<std::uint8_t>& occupancy, const VoxelGrid& grid,
                             const CarveConfig& cfg) {
  std::vector<std::uint8_t> occ = occupancy;
  regularize_diagonals(occ, grid);

  auto occupied = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= grid.nx || j >= grid.ny || k >= grid.nz) return false;
    return occ[grid.index(i, j, k)] != 0;
  };

  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> corner_ids;
  const Vec3 cs = grid.cell_size();
  auto corner = [&](int i, int j, int k) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(i) << 42) | (static_cast<std::uint64_t>(j) << 21) |
        static_cast<std::uint64_t>(k);
    auto it = corner_ids.find(key);
    if (it != corner_ids.end()) return it->second;
    mesh.vertices.push_back(
        {grid.lo.x() + i * cs.x(), grid.lo.y() + j * cs.y(), grid.lo.z() + k * cs.z()});
    int id = mesh.vertex_count() - 1;
    corner_ids.emplace(key, id);
    return id;
  };
  auto quad = [&](int c0, int c1, int c2, int c3) {
    mesh.triangles.push_back({c0, c1, c2});
    mesh.triangles.push_back({c0, c2, c3});
  };

  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j)
      for (int k = 0; k < grid.nz; ++k) {
        if (!occupied(i, j, k)) continue;
        // emit faces toward empty neighbours, wound CCW from outside
        if (!occupied(i + 1, j, k))
          quad(corner(i + 1, j, k), corner(i + 1, j + 1, k), corner(i + 1, j + 1, k + 1),
               corner(i + 1, j, k + 1));
        if (!occupied(i - 1, j, k))
          quad(corner(i, j, k), corner(i, j, k + 1), corner(i, j + 1, k + 1), corner(i, j + 1, k));
        if (!occupied(i, j + 1, k))
          quad(corner(i, j + 1, k), corner(i, j + 1, k + 1), corner(i + 1, j + 1, k + 1),
               corner(i + 1, j + 1, k));
        if (!occupied(i, j - 1, k))
          quad(corner(i, j, k), corner(i + 1, j, k), corner(i + 1, j, k + 1), corner(i, j, k + 1));
        if (!occupied(i, j, k + 1))
          quad(corner(i, j, k + 1), corner(i + 1, j, k + 1), corner(i + 1, j + 1, k + 1),
               corner(i, j + 1, k + 1));
        if (!occupied(i, j, k - 1))
          quad(corner(i, j, k), corner(i, j + 1, k), corner(i + 1, j + 1, k), corner(i + 1, j, k));
      }

  if (mesh.triangles.empty()) throw Error(ErrorCode::EmptyCarve, "no occupied voxels to mesh");

  taubin_smooth(mesh, cfg.smooth_iterations);
  if (!cfg.keep_dense && mesh.triangle_count() > cfg.target_triangles)
    mesh = simplify_mesh(mesh, cfg.target_triangles);
  mesh.orient_outward();

  std::string why;
  if (!mesh.is_closed(&why))
    throw Error(ErrorCode::OpenMesh, "carved surface failed closure validation: " + why);
  return mesh;
}

CarveResult carve(const std::vector<CarveView>& views, const VoxelGrid& grid,
                  const CarveConfig& cfg) {
  CarveResult res;
  res.grid = grid;
  res.occupancy = carve_occupancy(views, grid, cfg.min_views_in_fov, &res.occupied);
  if (res.occupied == 0) throw Error(ErrorCode::EmptyCarve, "carve: no voxel survived");
  res.mesh = extract_surface(res.occupancy, grid, cfg);
  return res;
}

// ---------------------------------------------------------------------------
// Quadric edge-collapse simplification.

namespace {

using Quadric = Eigen::Matrix4d;

Quadric plane_quadric(const Vec3& p0, const Vec3& n_unit) {
  Eigen::Vector4d plane;
  plane << n_unit, -n_unit.dot(p0);
  return plane * plane.transpose();
}

struct Collapse {
  double cost;
  int a, b;          // collapse b into a
  int va, vb;        // version stamps at creation
  Vec3 position;
  bool operator<(const Collapse& o) const {
    if (cost != o.cost) return cost > o.cost;  // min-heap via priority_queue
    if (a != o.a) return a > o.a;
    return b > o.b;
  }
};

}  // namespace

TriangleMesh simplify_mesh(const TriangleMesh& input, int target_triangles) {
  std::vector<Vec3> verts = input.vertices;
  std::vector<std::array<int, 3>> tris = input.triangles;
  const int nv = static_cast<int>(verts.size());

  std::vector<Quadric> Q(nv, Quadric::Zero());
  std::vector<std::vector<int>> v2t(nv);
  std::vector<bool> tri_alive(tris.size(), true);
  std::vector<int> version(nv, 0);

  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tr = tris[t];
    Vec3 n = (verts[tr[1]] - verts[tr[0]]).cross(verts[tr[2]] - verts[tr[0]]);
    double a2 = n.norm();
    if (a2 > 1e-18) {
      Quadric K = plane_quadric(verts[tr[0]], n / a2);
      for (int k = 0; k < 3; ++k) Q[tr[k]] += K * a2;  // area-weighted
    }
    for (int k = 0; k < 3; ++k) v2t[tr[k]].push_back(t);
  }

  auto neighbors = [&](int v) {
    std::vector<int> out;
    for (int t : v2t[v])
      if (tri_alive[t])
        for (int k = 0; k < 3; ++k)
          if (tris[t][k] != v) out.push_back(tris[t][k]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  auto optimal_point = [&](int a, int b, double* cost) {
    Quadric Qe = Q[a] + Q[b];
    Eigen::Matrix3d A = Qe.topLeftCorner<3, 3>();
    Vec3 rhs = -Qe.topRightCorner<3, 1>();
    Vec3 p;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (lu.isInvertible()) {
      p = lu.solve(rhs);
    } else {
      p = 0.5 * (verts[a] + verts[b]);
    }
    Eigen::Vector4d ph;
    ph << p, 1.0;
    *cost = ph.dot(Qe * ph);
    return p;
  };

  std::priority_queue<Collapse> heap;
  auto push_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    Collapse c;
    c.a = a;
    c.b = b;
    c.va = version[a];
    c.vb = version[b];
    c.position = optimal_point(a, b, &c.cost);
    heap.push(c);
  };

  {
    std::set<std::pair<int, int>> seen;
    for (const auto& tr : tris)
      for (int k = 0; k < 3; ++k) {
        int a = tr[k], b = tr[(k + 1) % 3];
        if (a > b) std::swap(a, b);
        if (seen.insert({a, b}).second) push_edge(a, b);
      }
  }

  int alive_tris = static_cast<int>(tris.size());
  while (alive_tris > target_triangles && !heap.empty()) {
    Collapse c = heap.top();
    heap.pop();
    if (version[c.a] != c.va || version[c.b] != c.vb) continue;  // stale

    // link condition: shared neighbours of a and b must be exactly the two
    // vertices opposite the shared edge
    auto na = neighbors(c.a);
    auto nb = neighbors(c.b);
    std::vector<int> shared;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(shared));
    int shared_tris = 0;
    for (int t : v2t[c.a])
      if (tri_alive[t]) {
        const auto& tr = tris[t];
        if (std::count(tr.begin(), tr.end(), c.b)) ++shared_tris;
      }
    if (shared_tris != 2 || static_cast<int>(shared.size()) != 2) continue;

    // reject collapses that flip a surviving triangle
    bool flips = false;
    for (int who : {c.a, c.b}) {
      for (int t : v2t[who]) {
        if (!tri_alive[t]) continue;
        const auto& tr = tris[t];
        if (std::count(tr.begin(), tr.end(), c.a) && std::count(tr.begin(), tr.end(), c.b))
          continue;  // removed by the collapse
        Vec3 p[3], q[3];
        for (int k = 0; k < 3; ++k) {
          p[k] = verts[tr[k]];
          q[k] = (tr[k] == c.a || tr[k] == c.b) ? c.position : verts[tr[k]];
        }
        Vec3 n0 = (p[1] - p[0]).cross(p[2] - p[0]);
        Vec3 n1 = (q[1] - q[0]).cross(q[2] - q[0]);
        if (n0.dot(n1) <= 1e-14) {
          flips = true;
          break;
        }
      }
      if (flips) break;
    }
    if (flips) continue;

    // apply: b merges into a at the optimal position
    verts[c.a] = c.position;
    Q[c.a] += Q[c.b];
    ++version[c.a];
    ++version[c.b];
    for (int t : v2t[c.b]) {
      if (!tri_alive[t]) continue;
      auto& tr = tris[t];
      if (std::count(tr.begin(), tr.end(), c.a)) {
        tri_alive[t] = false;
        --alive_tris;
        continue;
      }
      for (int k = 0; k < 3; ++k)
        if (tr[k] == c.b) tr[k] = c.a;
      v2t[c.a].push_back(t);
    }
    v2t[c.b].clear();

    for (int u : neighbors(c.a)) push_edge(c.a, u);
  }

  // compact
  TriangleMesh out;
  std::vector<int> remap(nv, -1);
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    if (!tri_alive[t]) continue;
    std::array<int, 3> tr{};
    for (int k = 0; k < 3; ++k) {
      int v = tris[t][k];
      if (remap[v] < 0) {
        remap[v] = out.vertex_count();
        out.vertices.push_back(verts[v]);
      }
      tr[k] = remap[v];
    }
    out.triangles.push_back(tr);
  }
  return out;
}

}  // namespace fss
