// Air-water interface multipath: reflection point on the surface, virtual
// mirror object, delayed ghost component and per-view corrupted-region masks.
//
// The interface is a plane in the reference (world) frame, n . x = offset
// with n the upward unit normal; the sonar sits below it (n . origin <
// offset). For the reference pose at depth d and pitch beta the sonar-frame
// normal is (0, sin(beta), -cos(beta)) and the offset is d.
#pragma once

#include <cstdint>
#include <vector>

#include "fss3d/forward.hpp"
#include "fss3d/image.hpp"
#include "fss3d/mesh.hpp"

namespace fss {

struct InterfaceModel {
  bool enabled = false;
  double sigma = 0.0;         // std dev of per-view surface height fluctuation, meters
  std::uint64_t seed = 0;
  Vec3 normal = Vec3(0, 0, -1);  // upward normal, world frame
  double offset = 0.0;           // plane offset along the normal, meters

  bool flat() const { return sigma == 0.0; }

  // Plane for the reference pose placed at `depth` below the surface with
  // the boresight pitched `pitch` radians toward it.
  static InterfaceModel from_reference(double depth, double pitch, double sigma = 0.0,
                                       std::uint64_t seed = 0);

  // Plane expressed in a view's sonar frame: normal and offset such that
  // n_local . x = offset_local.
  void local_plane(const SonarPose& pose, Vec3* n_local, double* offset_local) const;

  // Sonar depth below the plane and boresight pitch for a given pose.
  double depth_of(const SonarPose& pose) const;
  double pitch_of(const SonarPose& pose) const;
};

// Flat realization of a perturbed interface for one view: the plane offset
// is shifted by h ~ N(0, sigma^2), deterministically per (seed, view_key).
InterfaceModel perturb_interface(const InterfaceModel& iface, std::uint64_t view_key);

// Closed-form multipath solution for one scattering point, all vectors in
// the sonar frame of the pose.
struct MultipathSolution {
  Vec3 r1 = Vec3::Zero();       // sonar -> object point
  Vec3 r2 = Vec3::Zero();       // object point -> surface point
  Vec3 r3 = Vec3::Zero();       // surface point -> sonar
  Vec3 t = Vec3::Zero();        // t = |t| t_hat, from P_W to the foot point F
  Vec3 surface_point = Vec3::Zero();  // P_W
  Vec3 mirror_point = Vec3::Zero();   // P_m
  double beta_prime = 0.0;      // beta - phi(P_s)
  double t_mag = 0.0;           // |t|
  double mirror_range = 0.0;    // |R_m| = (|R1|+|R2|+|R3|)/2
  double mirror_elevation = 0.0;  // sonar-frame elevation of -R3
  bool degenerate = false;      // 2|d| <= |R1| sin(beta') or |t| beyond the cap
  bool valid = false;           // non-degenerate and |mirror_elevation| <= w_phi
};

// Closed-form surface reflection point: beta' = beta - phi,
// |t| = |d||R1|cos(beta') / (2|d| - |R1|sin(beta')). Exact when the
// surface normal lies in the azimuthal plane of the beam (theta = 0 or
// pitch-only poses); the rendering pipeline uses the general plane
// construction below instead.
MultipathSolution surface_point(const Vec3& ps_local, const SonarPose& pose,
                                const SonarGeometry& g);

// Completes R2/R3/P_m and the field-of-view gate on an existing solution.
// Kept separate so the reflection point and the mirror point test apart.
MultipathSolution mirror_point(MultipathSolution sol, const SonarPose& pose,
                               const SonarGeometry& g);

// Ghost apparent range: the delayed echo travels the mirror path in reverse
// along the same beam, so |R_g| = |R_m|.
double ghost_range(const MultipathSolution& sol);

// Exact specular construction against an arbitrary local plane; used by the
// renderer (handles rolled poses where the closed form is approximate).
MultipathSolution mirror_for_plane(const Vec3& ps_local, const Vec3& n_local,
                                   double offset_local, const SonarGeometry& g);

struct MultipathRenderConfig {
  double surface_reflectivity = 0.9;  // rho_s, intensity scale of mirror/ghost
  double segment_threshold = 0.2;     // object-region segmentation threshold
  int region_close_radius = 1;        // morphological closing of component supports
};

struct ComponentRender {
  BeamBinImage object;    // direct echo only
  BeamBinImage mirror;    // virtual mirror-object component
  BeamBinImage ghost;     // delayed-echo component
  BeamBinImage combined;  // object + mirror + ghost, peak-normalized together
  ComponentMasks masks;   // region labels incl. corrupted = object overlap
  std::vector<PatchContribution> patches;  // visible direct-echo patches
};

// Renders the three components of a view and labels their regions. All
// three share one normalization so relative intensities stay meaningful.
ComponentRender render_components(const TriangleMesh& mesh, const SonarPose& pose,
                                  const SonarGeometry& g, const InterfaceModel& iface,
                                  const MultipathRenderConfig& cfg = {});

// Object pixels overlapped by ghost (or mirror): label == Corrupted.
BinaryMask corrupted_region(const ComponentMasks& masks);

}  // namespace fss
