// Iterative 3-D model refinement: per-view 2-D registration of synthetic
// and data views, lifting of blended 2-D motions to parametrized 3-D
// patch-center motions, multi-view least squares, vertex solve with MAD
// outlier replacement, and the outer loop with relevance filtering.
#pragma once

#include <optional>
#include <vector>

#include "fss3d/dataset.hpp"
#include "fss3d/mesh.hpp"
#include "fss3d/metrics.hpp"
#include "fss3d/multipath.hpp"
#include "fss3d/registration.hpp"

namespace fss {

struct RefineConfig {
  int max_iter = 6;
  double stop_tol = 0.005;         // on consecutive E_I
  double lambda_gate = 0.01;       // meters; view relevance threshold
  double segment_threshold = 0.2;
  int min_frontal_points = 10;
  // per-iteration trust region: 2-D matching cannot measure displacements
  // beyond the search window, so larger vertex steps are extrapolation
  double max_step = 0.03;          // meters; 0 disables the clamp
  bool mask_corrupted = true;      // ablation switch: ghost-region removal
  bool use_mirror_contour = true;  // mirror lower contour as extra ICP points
  int min_mirror_pixels = 20;
  IcpConfig icp;
  CorrelationConfig correlation;
  BlendConfig blend;
  MultipathRenderConfig render;
  MadReplaceConfig mad;
  ContourConfig contour;

  // when set, iterate() fills one sparse field per view with the blended
  // per-pixel motions of the last call (debug dumps)
  std::vector<MotionField2D>* motion_out = nullptr;
};

// Data views at known poses; the interface is the flat nominal plane
// assumed during reconstruction.
struct ViewSet {
  SonarGeometry geometry;
  std::vector<BeamBinImage> images;
  std::vector<SonarPose> poses;
  InterfaceModel interface;

  static ViewSet from_dataset(const Dataset& ds);
  int size() const { return static_cast<int>(images.size()); }
};

struct IterationReport {
  int iteration = 0;
  double aie = 0.0, ace = 0.0;
  double naie = 1.0, nace = 1.0, e_i = 1.0;
  int relevant_views = 0;
  int total_views = 0;
  double mean_motion = 0.0, max_motion = 0.0;  // vertex displacement stats
  int patches_solved = 0;
  double nve_truth = -1.0;  // < 0 when no ground truth supplied
  std::vector<double> view_ie, view_ce;
  std::vector<std::uint8_t> view_relevant;
};

// Affine parametrization of a lifted patch-center motion in the reference
// frame: V(W) = offset + W * w_dir, with W the unknown sonar-frame vertical
// component under the small-elevation approximation.
struct LiftedMotion {
  Vec3 offset = Vec3::Zero();
  Vec3 w_dir = Vec3::Zero();
};

// v is the 2-D motion at the patch center's pixel (synthetic - data, polar
// meters); U = -v_x and V = -v_y in the view frame, W free.
LiftedMotion lift_patch_motion(const Vec3& center_reference, const Vec2& v,
                               const SonarPose& pose);

struct PatchCenterSolve {
  Vec3 motion = Vec3::Zero();
  std::vector<double> w;      // optimal W per contributing view
  bool ok = false;            // false: fewer than 2 views or rank deficient
  bool rank_deficient = false;
};

// Least squares over (V*, W_1..W_M) followed by the per-column median of
// the reconstructed per-view vectors. Fewer than two estimates yield zero
// motion.
PatchCenterSolve solve_patch_center(const std::vector<LiftedMotion>& estimates);

struct IterateResult {
  TriangleMesh mesh;
  IterationReport report;
};

// One refinement iteration (render, register, lift, solve, update).
// `iteration` drives the correlation regulator schedule. When
// `apply_update` is false the mesh is returned unchanged and only the
// report is produced (used for final evaluation). Throws NoRelevantViews
// when every view fails the quality gate.
IterateResult iterate(const TriangleMesh& mesh, const ViewSet& views, int iteration,
                      const RefineConfig& cfg, bool apply_update = true);

struct RunResult {
  TriangleMesh best_mesh;
  int best_iteration = 0;  // report index the best mesh was evaluated at
  std::vector<IterationReport> reports;
};

// Runs up to max_iter iterations with the |E_I(k) - E_I(k-1)| < stop_tol
// stopping rule and returns the mesh with the lowest evaluated E_I.
// `truth` adds an NVE column to every report.
RunResult run_refinement(const TriangleMesh& initial, const ViewSet& views,
                         const RefineConfig& cfg,
                         const TriangleMesh* truth = nullptr);

}  // namespace fss
