// Closed triangle meshes, connectivity algebra and vertex-motion solves.
//
// The triangulation is fixed for the life of a model: refinement only moves
// vertices, it never changes the connectivity list.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <string>
#include <vector>

#include "fss3d/geometry.hpp"

namespace fss {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // 0-based internally; OBJ I/O is 1-based

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  Vec3 triangle_center(int t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
  }
  Vec3 triangle_normal(int t) const;  // unnormalized (area-weighted) normal
  double triangle_area(int t) const { return 0.5 * triangle_normal(t).norm(); }

  // Signed volume via the divergence theorem; positive for outward orientation.
  double signed_volume() const;

  // Closed + orientable: every edge shared by exactly two triangles with
  // opposite winding, indices valid and distinct per triangle.
  bool is_closed(std::string* why = nullptr) const;

  // Flips winding in place if signed volume is negative.
  void orient_outward();
};

// Row i marks the three vertices of triangle i. Sparse N_T x N_P, entries 1.
using ConnectivityMatrix = Eigen::SparseMatrix<double>;

// Per-vertex and per-patch-center motion fields, one row per entity.
using VertexMotionField = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct PatchMotionField {
  Eigen::Matrix<double, Eigen::Dynamic, 3> motions;  // N_T x 3
  std::vector<bool> valid;                           // patch had >= 2 relevant views
};

std::vector<Vec3> patch_centers(const TriangleMesh& m);

ConnectivityMatrix build_connectivity(const TriangleMesh& m);

struct VertexSolveResult {
  VertexMotionField motions;
  std::vector<bool> unconstrained;  // vertices with no valid incident patch: zero motion
  double residual = 0.0;            // sqrt of the summed squared row residuals
  bool rank_deficient = false;      // solved by minimum-norm SVD fallback
};

// V*_P = argmin sum_i |c_i V_P / 3 - V*_{c_i}|^2 over the valid patch rows:
// the center of triangle i moves with the mean of its three vertex motions,
// so a uniform patch-motion field w yields vertex motions exactly w.
// Vertices untouched by any valid row get zero motion and a flag. On closed
// meshes the normal equations are SPD; rank-deficient systems (e.g. open
// fans with more vertices than patches) fall back to a minimum-norm solve.
VertexSolveResult solve_vertex_motions(const ConnectivityMatrix& C, const PatchMotionField& Vc);

struct MadReplaceConfig {
  bool inverse_distance = false;  // default weighs neighbours by d_ij itself
};

struct MadReplaceResult {
  VertexMotionField motions;
  std::vector<int> replaced;        // vertex indices replaced by neighbor averages
  std::vector<int> zeroed;          // outliers whose whole 1-ring was outliers
  double threshold = 0.0;           // median + 3 MAD of |V| (or median when MAD = 0)
};

// Replaces motion magnitudes above median + 3 MAD by the distance-weighted
// average of non-outlier 1-ring neighbours. When MAD = 0 only magnitudes
// strictly above the median are treated as outliers. `consider` restricts
// the statistics, outlier candidacy and averaging to flagged vertices
// (structurally zero entries from unconstrained vertices are not motion
// samples); unflagged vertices pass through unchanged.
MadReplaceResult mad_outlier_replace(const VertexMotionField& V, const TriangleMesh& m,
                                     const MadReplaceConfig& cfg = {},
                                     const std::vector<bool>* consider = nullptr);

TriangleMesh apply_motions(const TriangleMesh& m, const VertexMotionField& V);

// Plain-text OBJ subset: `v x y z` and `f i j k` with 1-based indices.
// load_mesh validates closure and throws OpenMesh / IoError.
TriangleMesh load_mesh(const std::string& path);
void save_mesh(const TriangleMesh& m, const std::string& path);

// 1-ring neighbours per vertex, from the connectivity list.
std::vector<std::vector<int>> vertex_neighbors(const TriangleMesh& m);

}  // namespace fss
