#include "fss3d/refine.hpp"

#include <algorithm>
#include <cmath>

#include "fss3d/errors.hpp"

namespace fss {

ViewSet ViewSet::from_dataset(const Dataset& ds) {
  ViewSet vs;
  vs.geometry = ds.geometry;
  vs.images = ds.images;
  vs.poses = ds.poses;
  vs.interface = ds.interface_nominal;
  vs.interface.sigma = 0.0;  // reconstruction assumes the flat nominal plane
  return vs;
}

LiftedMotion lift_patch_motion(const Vec3& center_reference, const Vec2& v,
                               const SonarPose& pose) {
  (void)center_reference;  // the lift depends only on the 2-D motion and pose
  LiftedMotion out;
  const Mat3 R = pose.rotation_matrix();
  out.offset = R * Vec3(-v.x(), -v.y(), 0.0);
  out.w_dir = R * Vec3(0.0, 0.0, 1.0);
  return out;
}

PatchCenterSolve solve_patch_center(const std::vector<LiftedMotion>& estimates) {
  PatchCenterSolve out;
  const int m = static_cast<int>(estimates.size());
  if (m < 2) return out;  // zero motion for under-observed patches

  // unknowns u = [W_1..W_m, Vx, Vy, Vz]; rows: W_k w_dir_k - V* = -offset_k
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * m, m + 3);
  Eigen::VectorXd rhs(3 * m);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < 3; ++i) {
      A(3 * k + i, k) = estimates[k].w_dir[i];
      A(3 * k + i, m + i) = -1.0;
      rhs(3 * k + i) = -estimates[k].offset[i];
    }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // near-parallel view geometries make W unobservable and amplify pixel
  // noise; treat them as rank deficient
  svd.setThreshold(1e-2);
  if (svd.rank() < m + 3) {
    out.rank_deficient = true;
    return out;  // zero motion, flagged
  }
  Eigen::VectorXd u = svd.solve(rhs);
  out.w.assign(u.data(), u.data() + m);
  for (int k = 0; k < m; ++k)
    if (std::abs(u(k)) > 0.05) {  // beyond any measurable per-step displacement
      out.rank_deficient = true;
      out.motion.setZero();
      return out;
    }

  // reconstruct the per-view vectors at the optimal W and take the
  // component-wise median
  std::vector<double> comp[3];
  for (int k = 0; k < m; ++k) {
    const Vec3 vk = estimates[k].offset + u(k) * estimates[k].w_dir;
    for (int i = 0; i < 3; ++i) comp[i].push_back(vk[i]);
  }
  for (int i = 0; i < 3; ++i) {
    auto& v = comp[i];
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) {
      out.motion[i] = hi;
    } else {
      double lo = *std::max_element(v.begin(), v.begin() + mid);
      out.motion[i] = 0.5 * (lo + hi);
    }
  }
  out.ok = true;
  return out;
}

namespace {

struct FrontalSet {
  std::vector<Vec2> points;   // original synthetic positions
  std::vector<Vec2> motions;  // v^C = synthetic - matched data
};

std::vector<Vec2> frontal_polar_points(const Contour& c, const BinaryMask* corrupted) {
  std::vector<Vec2> pts;
  for (const auto& p : c.points) {
    if (!p.frontal) continue;
    if (corrupted && corrupted->at(p.b, p.B)) continue;  // inside the corrupted region
    pts.push_back(p.polar);
  }
  return pts;
}

BinaryMask threshold_only(const BeamBinImage& img, double threshold) {
  BinaryMask m(img.geom);
  const float peak = img.max_intensity();
  if (peak <= 0.0f) return m;
  const float cut = static_cast<float>(threshold) * peak;
  for (size_t i = 0; i < img.intensities.size(); ++i) m.bits[i] = img.intensities[i] >= cut;
  return m;
}

}  // namespace

IterateResult iterate(const TriangleMesh& mesh, const ViewSet& views, int iteration,
                      const RefineConfig& cfg, bool apply_update) {
  const SonarGeometry& g = views.geometry;
  const int n_views = views.size();
  const int n_tri = mesh.triangle_count();

  IterationReport report;
  report.iteration = iteration;
  report.total_views = n_views;
  report.view_ie.assign(n_views, 0.0);
  report.view_ce.assign(n_views, 0.0);
  report.view_relevant.assign(n_views, 0);

  if (cfg.motion_out) {
    cfg.motion_out->assign(n_views, MotionField2D{});
    for (auto& f : *cfg.motion_out) f.geom = g;
  }

  std::vector<std::vector<LiftedMotion>> estimates(n_tri);

  for (int m = 0; m < n_views; ++m) {
    const SonarPose& pose = views.poses[m];
    const BeamBinImage& data = views.images[m];

    // The synthetic view carries the direct echo only: the multipath
    // solution localizes the ghost and mirror regions (masks, mirror
    // contour) but their intensities are not reliably synthesizable, so
    // they never enter the matching.
    ComponentRender comp = render_components(mesh, pose, g, views.interface, cfg.render);
    if (comp.object.max_intensity() <= 0.0f) continue;  // model invisible in this view
    const BeamBinImage& synth = comp.object;

    const BinaryMask obj_region =
        mask_from_labels(comp.masks, {PixelLabel::Object, PixelLabel::Corrupted});
    BinaryMask corrupted(g);
    if (cfg.mask_corrupted) corrupted = corrupted_region(comp.masks);
    const BinaryMask* corr_ptr = cfg.mask_corrupted ? &corrupted : nullptr;
    const BinaryMask omega = cfg.mask_corrupted
                                 ? mask_from_labels(comp.masks, {PixelLabel::Object})
                                 : obj_region;

    // the synthetic image runs through the same segmentation as the data so
    // the two contours are directly comparable (and identical at a fixed
    // point); model labels only gate which points and pixels participate
    BinaryMask data_mask(g), synth_mask(g);
    try {
      data_mask = segment(data, cfg.segment_threshold);
      synth_mask = segment(synth, cfg.segment_threshold);
    } catch (const Error&) {
      continue;  // nothing segmentable: view unusable this iteration
    }

    std::vector<Vec2> moving = frontal_polar_points(extract_contour(synth_mask, g, cfg.contour),
                                                    corr_ptr);
    std::vector<Vec2> fixed = frontal_polar_points(extract_contour(data_mask, g, cfg.contour),
                                                   corr_ptr);

    // mirror lower contour as an extra correspondence set, only when the
    // mirror support is clear of the object region
    if (cfg.use_mirror_contour) {
      const BinaryMask mirror_region = mask_from_labels(comp.masks, {PixelLabel::Mirror});
      bool overlaps = false;
      for (size_t i = 0; i < mirror_region.bits.size() && !overlaps; ++i)
        overlaps = comp.mirror.intensities[i] > 0.0f && obj_region.bits[i];
      if (!overlaps && mirror_region.count() >= static_cast<size_t>(cfg.min_mirror_pixels)) {
        // synthetic side: the lower contour of the predicted mirror region;
        // data side: thresholded pixels near that prediction
        const BinaryMask near_mirror = dilate(mirror_region, 2);
        const BinaryMask data_thresh = threshold_only(data, cfg.segment_threshold);
        BinaryMask evid(g);
        size_t count = 0;
        for (size_t i = 0; i < evid.bits.size(); ++i) {
          evid.bits[i] = data_thresh.bits[i] && near_mirror.bits[i];
          count += evid.bits[i];
        }
        if (count >= static_cast<size_t>(cfg.min_mirror_pixels)) {
          auto synth_mirror = frontal_polar_points(
              extract_contour(largest_component(mirror_region), g, cfg.contour), nullptr);
          auto data_mirror = frontal_polar_points(
              extract_contour(largest_component(evid), g, cfg.contour), nullptr);
          if (!synth_mirror.empty() && !data_mirror.empty()) {
            moving.insert(moving.end(), synth_mirror.begin(), synth_mirror.end());
            fixed.insert(fixed.end(), data_mirror.begin(), data_mirror.end());
          }
        }
      }
    }

    if (static_cast<int>(moving.size()) < cfg.min_frontal_points ||
        static_cast<int>(fixed.size()) < cfg.min_frontal_points)
      continue;

    const ContourMatch match = icp_align(moving, fixed, cfg.icp);
    report.view_ce[m] = match.lambda;
    try {
      report.view_ie[m] = intensity_error(synth, data, omega);
    } catch (const Error&) {
      continue;  // empty uncorrupted region
    }
    if (match.lambda > cfg.lambda_gate) continue;  // not a relevant view
    report.view_relevant[m] = 1;
    ++report.relevant_views;

    FrontalSet frontal;
    frontal.points.reserve(match.pairs.size());
    for (const auto& [i, j] : match.pairs) {
      frontal.points.push_back(moving[i]);
      frontal.motions.push_back(moving[i] - fixed[j]);
    }

    for (const auto& pc : comp.patches) {
      if (!obj_region.at(pc.b, pc.B)) continue;
      if (cfg.mask_corrupted && corrupted.at(pc.b, pc.B)) continue;
      const CorrelationResult corr =
          correlation_search(synth, data, pc.b, pc.B, iteration, cfg.correlation);
      MotionVector mv;
      if (!blend_motion(polar_project(pc.sph.range, pc.sph.azimuth), frontal.points,
                        frontal.motions, corr, cfg.blend, &mv))
        continue;
      if (cfg.motion_out) (*cfg.motion_out)[m].set(pc.b, pc.B, mv);
      estimates[pc.triangle].push_back(lift_patch_motion(mesh.triangle_center(pc.triangle),
                                                         mv.v, pose));
    }
  }

  if (report.relevant_views == 0)
    throw Error(ErrorCode::NoRelevantViews, "iterate: every view failed the quality gate");

  PatchMotionField Vc;
  Vc.motions = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(n_tri, 3);
  Vc.valid.assign(n_tri, false);
  for (int t = 0; t < n_tri; ++t) {
    const PatchCenterSolve sol = solve_patch_center(estimates[t]);
    if (sol.ok) {
      Vc.motions.row(t) = sol.motion.transpose();
      Vc.valid[t] = true;
      ++report.patches_solved;
    }
  }

  const ConnectivityMatrix C = build_connectivity(mesh);
  const VertexSolveResult vs = solve_vertex_motions(C, Vc);
  // unconstrained vertices hold structural zeros, not motion samples
  std::vector<bool> constrained(vs.unconstrained.size());
  for (size_t i = 0; i < constrained.size(); ++i) constrained[i] = !vs.unconstrained[i];
  MadReplaceResult mad = mad_outlier_replace(vs.motions, mesh, cfg.mad, &constrained);

  if (cfg.max_step > 0.0)
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      const double mag = mad.motions.row(i).norm();
      if (mag > cfg.max_step) mad.motions.row(i) *= cfg.max_step / mag;
    }

  double sum = 0.0, worst = 0.0;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double mag = mad.motions.row(i).norm();
    sum += mag;
    worst = std::max(worst, mag);
  }
  report.mean_motion = sum / std::max(1, mesh.vertex_count());
  report.max_motion = worst;

  std::vector<double> rel_ie, rel_ce;
  for (int m = 0; m < n_views; ++m)
    if (report.view_relevant[m]) {
      rel_ie.push_back(report.view_ie[m]);
      rel_ce.push_back(report.view_ce[m]);
    }
  report.aie = average_error(rel_ie);
  report.ace = average_error(rel_ce);

  IterateResult out;
  out.mesh = apply_update ? apply_motions(mesh, mad.motions) : mesh;
  out.report = report;
  return out;
}

RunResult run_refinement(const TriangleMesh& initial, const ViewSet& views,
                         const RefineConfig& cfg, const TriangleMesh* truth) {
  RunResult res;
  TriangleMesh current = initial;

  double aie0 = -1.0, ace0 = -1.0;
  double best_ei = std::numeric_limits<double>::infinity();
  double prev_ei = std::numeric_limits<double>::infinity();

  auto finalize_report = [&](IterationReport& rep, const TriangleMesh& mesh_evaluated) {
    if (aie0 < 0.0) {
      aie0 = rep.aie;
      ace0 = rep.ace;
    }
    const NormalizedErrors ne = image_error(rep.aie, rep.ace, aie0, ace0);
    rep.naie = ne.naie;
    rep.nace = ne.nace;
    rep.e_i = ne.e_i;
    if (truth) rep.nve_truth = nve(mesh_evaluated, *truth);
    if (rep.e_i < best_ei) {
      best_ei = rep.e_i;
      res.best_mesh = mesh_evaluated;
      res.best_iteration = rep.iteration;
    }
  };

  int k = 0;
  for (; k < cfg.max_iter; ++k) {
    IterateResult step = iterate(current, views, k, cfg, true);
    finalize_report(step.report, current);  // report describes mesh_k
    res.reports.push_back(step.report);
    current = std::move(step.mesh);
    const double ei = res.reports.back().e_i;
    if (k > 0 && std::abs(ei - prev_ei) < cfg.stop_tol) {
      ++k;
      break;
    }
    prev_ei = ei;
  }

  // evaluate the final mesh without updating it
  IterateResult eval = iterate(current, views, k, cfg, false);
  finalize_report(eval.report, current);
  res.reports.push_back(eval.report);
  return res;
}

}  // namespace fss
