// Synthetic dataset generation and on-disk layout.
//
// A dataset directory holds view_###.img/.meta/.mask, poses.csv and
// manifest.json. Every run is reproducible from (config, seeds); the
// manifest records both plus a checksum per file.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fss3d/image.hpp"
#include "fss3d/mesh.hpp"
#include "fss3d/multipath.hpp"

namespace fss {

struct DatasetConfig {
  SonarGeometry geometry;
  int n_positions = 2;  // M_p sonar positions around the object
  int n_rolls = 8;      // M_r roll angles per position, increments pi / M_r
  double object_range = 1.5;  // boresight distance of the object center, meters
  double depth = 0.35;        // reference sonar depth below the interface
  double pitch = 0.1745329251994330;  // reference pitch toward the interface, 10 deg
  double sigma = 0.0;                 // interface fluctuation std dev
  std::uint64_t interface_seed = 1;
  double noise_sigma = 0.05;          // additive intensity noise on unit peak
  std::uint64_t noise_seed = 2;
  double surface_reflectivity = 0.9;
  bool multipath = true;

  int view_count() const { return n_positions * n_rolls; }
};

// Object center in the reference frame: on the boresight at object_range.
Vec3 dataset_object_center(const DatasetConfig& cfg);

// M_p positions spaced 2 pi / M_p around the interface normal through the
// object center, each rolled into M_r angles -pi, -pi + pi/M_r, ...
// The first pose is the reference (identity). Poses carry per-view depth
// and pitch derived from the interface.
std::vector<SonarPose> make_pose_schedule(const DatasetConfig& cfg);

InterfaceModel dataset_interface(const DatasetConfig& cfg);

struct Dataset {
  SonarGeometry geometry;
  std::vector<BeamBinImage> images;     // data views (peak-normalized + noise)
  std::vector<ComponentMasks> masks;    // generator ground-truth labels
  std::vector<SonarPose> poses;
  InterfaceModel interface_nominal;     // unperturbed plane (sigma recorded)
  DatasetConfig config;
};

// Renders the truth mesh at every pose (multipath components + noise) and
// writes the directory. Deterministic per config/seeds.
Dataset gen_dataset(const TriangleMesh& truth, const DatasetConfig& cfg,
                    const std::string& out_dir);

// In-memory variant used by tests and the experiment drivers.
Dataset gen_dataset_in_memory(const TriangleMesh& truth, const DatasetConfig& cfg);

Dataset load_dataset(const std::string& dir);

// FNV-1a, hex string; manifest checksums.
std::string fnv1a_hex(const std::string& path);

}  // namespace fss
