// Beam-bin intensity images and per-pixel component label masks.
//
// Storage is beam-major: element (b, B) lives at (b-1) * n_bins + (B-1).
// Accessors take the 1-based (b, B) indices used by the file formats.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fss3d/geometry.hpp"

namespace fss {

struct BeamBinImage {
  SonarGeometry geom;
  SonarPose pose;
  std::vector<float> intensities;  // n_beams * n_bins, >= 0

  BeamBinImage() = default;
  BeamBinImage(const SonarGeometry& g, const SonarPose& p)
      : geom(g), pose(p), intensities(static_cast<size_t>(g.n_beams) * g.n_bins, 0.0f) {}

  float& at(int b, int B) { return intensities[index(b, B)]; }
  float at(int b, int B) const { return intensities[index(b, B)]; }

  size_t index(int b, int B) const {
    return static_cast<size_t>(b - 1) * geom.n_bins + (B - 1);
  }

  float max_intensity() const;
  void normalize_peak();  // scales so the maximum is 1 (no-op on all-zero images)
};

// Component labels per pixel. `corrupted` marks object pixels overlapped by
// ghost (or mirror) energy; those are excluded from registration and metrics.
enum class PixelLabel : std::uint8_t {
  Background = 0,
  Object = 1,
  Mirror = 2,
  Ghost = 3,
  Corrupted = 4,
};

struct ComponentMasks {
  SonarGeometry geom;
  std::vector<std::uint8_t> labels;

  ComponentMasks() = default;
  explicit ComponentMasks(const SonarGeometry& g)
      : geom(g), labels(static_cast<size_t>(g.n_beams) * g.n_bins, 0) {}

  std::uint8_t& at(int b, int B) { return labels[index(b, B)]; }
  std::uint8_t at(int b, int B) const { return labels[index(b, B)]; }
  size_t index(int b, int B) const {
    return static_cast<size_t>(b - 1) * geom.n_bins + (B - 1);
  }
  bool is(int b, int B, PixelLabel l) const { return at(b, B) == static_cast<std::uint8_t>(l); }
};

// Binary mask over the beam-bin grid (same layout).
struct BinaryMask {
  SonarGeometry geom;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  explicit BinaryMask(const SonarGeometry& g)
      : geom(g), bits(static_cast<size_t>(g.n_beams) * g.n_bins, 0) {}

  std::uint8_t& at(int b, int B) { return bits[index(b, B)]; }
  std::uint8_t at(int b, int B) const { return bits[index(b, B)]; }
  size_t index(int b, int B) const {
    return static_cast<size_t>(b - 1) * geom.n_bins + (B - 1);
  }
  size_t count() const;
};

// Raw little-endian float32 array with a human-readable key/value sidecar
// holding the geometry, pose and interface parameters.
void save_image(const BeamBinImage& img, const std::string& path_img,
                const std::string& path_meta);
BeamBinImage load_image(const std::string& path_img, const std::string& path_meta);

void save_masks(const ComponentMasks& m, const std::string& path);
ComponentMasks load_masks(const SonarGeometry& g, const std::string& path);

}  // namespace fss
