// Synthetic beam-bin imaging of a triangle mesh: direct-echo rendering,
// object segmentation and boundary-contour extraction.
#pragma once

#include <array>
#include <vector>

#include "fss3d/image.hpp"
#include "fss3d/mesh.hpp"
#include "fss3d/raycast.hpp"

namespace fss {

// Diffuse backscatter with per-patch occlusion along the line of sight:
// each sonar-facing, unoccluded patch whose center lies inside the
// (theta, R) window adds area * cos(incidence) / R^2, spread uniformly over
// the cells its projected (theta, R) footprint covers. Several patches
// within the elevation arc of a beam sum into one pixel.
//
// The kernel lives in render_raw so alternate image-formation models can be
// swapped behind the same contract.
struct RenderStats {
  int patches_in_fov = 0;
  int patches_contributing = 0;
  bool empty = true;  // warning condition, not an error
};

// One sonar-facing, unoccluded patch inside the view window.
struct PatchContribution {
  int triangle = -1;
  int b = 0, B = 0;   // 1-based cell of the patch center
  Spherical sph;      // sonar-frame spherical coordinates of the center
  double cos_incidence = 0.0;
  double value = 0.0;              // area * cos(incidence) / R^2
  std::array<Vec2, 3> footprint;   // (theta, R) of the vertices in the sonar frame
};

// Adds `value` distributed over the cells covered by the (theta, R)
// footprint (cell-center-in-triangle test, bounding-box fallback for
// degenerate slivers). `range_shift` displaces the footprint in range.
void splat_footprint(BeamBinImage& img, const std::array<Vec2, 3>& footprint, double value,
                     double range_shift = 0.0);

// Separable 1-2-1 point spread across beams and bins (beam overlap and
// pulse envelope); render_raw applies it after splatting.
void apply_point_spread(BeamBinImage& img);

// Frontal, unoccluded, in-window patches of the mesh as seen from `pose`.
std::vector<PatchContribution> visible_patches(const TriangleMesh& mesh, const SonarPose& pose,
                                               const SonarGeometry& g,
                                               RenderStats* stats = nullptr);

// Unnormalized accumulation; mesh given in reference-frame coordinates.
BeamBinImage render_raw(const TriangleMesh& mesh, const SonarPose& pose,
                        const SonarGeometry& g, RenderStats* stats = nullptr);

// render_raw followed by peak normalization (max intensity 1 when nonempty).
BeamBinImage render(const TriangleMesh& mesh, const SonarPose& pose, const SonarGeometry& g,
                    RenderStats* stats = nullptr);

struct PixelProjection {
  int b = 0, B = 0;    // 1-based
  bool in_fov = false;
  Spherical sph;       // sonar-frame spherical coordinates
};

// Reference-frame point -> nearest (b, B) cell of the view.
PixelProjection project_point(const Vec3& p, const SonarPose& pose, const SonarGeometry& g);

// Threshold at `threshold` * peak, keep the largest 8-connected component,
// fill enclosed holes. Throws EmptyMask when nothing clears the threshold.
BinaryMask segment(const BeamBinImage& img, double threshold);

struct ContourPoint {
  int b = 0, B = 0;  // 1-based pixel
  Vec2 polar;        // meters
  double range = 0.0;
  bool frontal = false;
};

struct Contour {
  std::vector<ContourPoint> points;  // ordered boundary loop

  std::vector<ContourPoint> frontal_points() const {
    std::vector<ContourPoint> f;
    for (const auto& p : points)
      if (p.frontal) f.push_back(p);
    return f;
  }
};

struct ContourConfig {
  // "lower third" rule applied to the object's own range extent; set false
  // to use the full sonar range window as in the original definition.
  bool object_extent_rule = true;
};

// Ordered 8-connected boundary trace of the mask with frontal flags on the
// near-range third.
Contour extract_contour(const BinaryMask& mask, const SonarGeometry& g,
                        const ContourConfig& cfg = {});

// Pixels carrying any of the given labels.
BinaryMask mask_from_labels(const ComponentMasks& masks, std::initializer_list<PixelLabel> keep);

// Morphology over the beam-bin grid (square structuring element of the
// given radius) and hole filling by border flood.
BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);
BinaryMask fill_holes(const BinaryMask& m);
BinaryMask largest_component(const BinaryMask& m);

}  // namespace fss
