// Space-carving initializer: feasible regions per view, voxel occupancy by
// all-view projection, and closed-mesh extraction from the carved volume.
#pragma once

#include <vector>

#include "fss3d/forward.hpp"
#include "fss3d/image.hpp"
#include "fss3d/mesh.hpp"

namespace fss {

// Per-view mask of possible object presence: highlight plus the occluded
// shadow corridor out to the far end of the range window.
using FeasibleRegion = BinaryMask;

// Highlight evidence comes from the object (and corrupted-object) labels
// when masks are available; ghost- and mirror-only pixels never count.
// Without masks the image is segmented at `segment_threshold`. Each beam
// column is extended from its first highlight bin to R_max. An empty
// highlight yields an empty region.
FeasibleRegion feasible_region(const BeamBinImage& img, const ComponentMasks* masks,
                               double segment_threshold = 0.2);

struct VoxelGrid {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  int nx = 96, ny = 96, nz = 96;

  Vec3 cell_size() const {
    return {(hi.x() - lo.x()) / nx, (hi.y() - lo.y()) / ny, (hi.z() - lo.z()) / nz};
  }
  Vec3 center(int i, int j, int k) const {
    const Vec3 cs = cell_size();
    return {lo.x() + (i + 0.5) * cs.x(), lo.y() + (j + 0.5) * cs.y(), lo.z() + (k + 0.5) * cs.z()};
  }
  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * ny + j) * nz + k;
  }
  size_t cell_count() const { return static_cast<size_t>(nx) * ny * nz; }
};

struct CarveView {
  FeasibleRegion region;
  SonarPose pose;
};

struct CarveConfig {
  int min_views_in_fov = 2;     // voxels seen from fewer views are discarded
  int target_triangles = 2000;  // simplification budget
  int smooth_iterations = 20;   // Taubin passes on the extracted surface
  bool keep_dense = false;      // skip simplification (debugging)
};

struct CarveResult {
  TriangleMesh mesh;                // closed, outward-oriented
  std::vector<std::uint8_t> occupancy;  // per-voxel, after carving
  VoxelGrid grid;
  size_t occupied = 0;
};

// Voxel occupied iff its center projects inside the feasible region of
// every view whose field of view contains it, and at least
// `min_views_in_fov` views see it. Throws EmptyCarve when nothing survives.
CarveResult carve(const std::vector<CarveView>& views, const VoxelGrid& grid,
                  const CarveConfig& cfg = {});

// Occupancy only (no meshing); used by tests and diagnostics.
std::vector<std::uint8_t> carve_occupancy(const std::vector<CarveView>& views,
                                          const VoxelGrid& grid, int min_views_in_fov,
                                          size_t* occupied = nullptr);

// Closed surface of a voxel set: boundary faces after diagonal-contact
// regularization, Taubin-smoothed, then quadric-simplified to the budget.
TriangleMesh extract_surface(const std::vector<std::uint8_t>& occupancy, const VoxelGrid& grid,
                             const CarveConfig& cfg);

// Quadric edge-collapse simplification preserving closure; public for the
// dataset tooling.
TriangleMesh simplify_mesh(const TriangleMesh& mesh, int target_triangles);

// Uniform Taubin lambda/mu smoothing, topology untouched.
void taubin_smooth(TriangleMesh& mesh, int iterations, double lambda = 0.5, double mu = -0.53);

}  // namespace fss
