// Error measures: per-view intensity and contour errors, their normalized
// aggregates, and the volumetric error between closed meshes.
#pragma once

#include <vector>

#include "fss3d/image.hpp"
#include "fss3d/mesh.hpp"
#include "fss3d/registration.hpp"

namespace fss {

// Mean absolute intensity difference over the pixel set `omega`, with both
// images peak-normalized first so synthetic/data gain differences cancel.
// Throws EmptyRegion when omega is empty.
double intensity_error(const BeamBinImage& synth, const BeamBinImage& data,
                       const BinaryMask& omega);

// CE is the ICP matching quality lambda; ACE/AIE are plain means over the
// relevant views.
double contour_error(const ContourMatch& match);
double average_error(const std::vector<double>& per_view);

struct NormalizedErrors {
  double naie = 1.0;
  double nace = 1.0;
  double e_i = 1.0;
  bool zero_baseline = false;  // a baseline term was 0; that ratio reports 1
};

// NAIE(t) = AIE(t)/AIE(0), NACE(t) = ACE(t)/ACE(0), E_I = (NAIE + NACE)/2.
NormalizedErrors image_error(double aie_t, double ace_t, double aie_0, double ace_0);

struct NveConfig {
  int resolution = 128;     // cells per axis on the common grid
  double inflate = 0.05;    // union bounding box inflation
};

// Normalized volumetric error: symmetric-difference volume over union
// volume on a shared voxelization. 0 for identical solids, 1 for disjoint.
// Throws OpenMesh when either mesh fails closure validation.
double nve(const TriangleMesh& a, const TriangleMesh& b, const NveConfig& cfg = {});

// Voxel-center insideness of one mesh on an explicit grid; exposed for the
// volumetric tests.
std::vector<std::uint8_t> voxelize(const TriangleMesh& mesh, const Vec3& lo, const Vec3& hi,
                                   int resolution);

}  // namespace fss
