// Closed test meshes used by the dataset generator and the test suites.
#pragma once

#include "fss3d/mesh.hpp"

namespace fss {

// Icosphere: `subdivisions` rounds of 4-way triangle splitting (0 -> 20 tris,
// 3 -> 1280, 4 -> 5120).
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

// Icosphere with a smooth radial bump: vertices within `bump_width` (radians
// of arc) of `bump_dir` are pushed outward by up to `bump_height`.
TriangleMesh make_sphere_with_bump(double radius, int subdivisions, const Vec3& center,
                                   const Vec3& bump_dir, double bump_height, double bump_width);

// Axis-aligned box (12 triangles).
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);

// Ellipsoid by scaling an icosphere.
TriangleMesh make_ellipsoid(const Vec3& radii, int subdivisions, const Vec3& center = Vec3::Zero());

// Radial surface relief: multiplies each vertex radius about `center` by
// 1 + amplitude * (fixed low-order harmonic field). Gives smooth closed
// shapes the fine-scale structure of natural targets (rock, coral) that
// block matching keys on. `frequency` sets the relief scale in radians of
// arc; closure is preserved for amplitude < 1.
void roughen_radial(TriangleMesh& mesh, const Vec3& center, double amplitude,
                    double frequency = 18.0);

}  // namespace fss
