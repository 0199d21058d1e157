// Per-view 2-D alignment of synthetic and data views: robust ICP on frontal
// contours, regularized Pearson-correlation block matching in the object
// interior, and blending of the two motion estimates.
//
// All 2-D motion vectors in this project point from the data location to
// the synthetic location: v = p_synthetic - p_matched_data, in meters of
// polar image coordinates. The 3-D lift inverts this consistently.
#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "fss3d/forward.hpp"
#include "fss3d/image.hpp"

namespace fss {

struct IcpConfig {
  int max_iter = 50;
  double tol = 1e-9;              // transform-change stopping threshold
  double huber_factor = 1.5;      // Huber scale = factor * median residual
  double inlier_mad_factor = 3.0; // pair kept when r <= median + factor * MAD
};

struct ContourMatch {
  double rotation = 0.0;          // radians, about the polar-image origin
  Vec2 translation = Vec2::Zero();
  std::vector<std::pair<int, int>> pairs;  // (moving index, fixed index), inliers
  double lambda = 0.0;            // mean matched distance over inliers, meters
  int iterations = 0;
  bool converged = false;

  Vec2 apply(const Vec2& p) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    return Vec2(c * p.x() - s * p.y(), s * p.x() + c * p.y()) + translation;
  }
};

// IRLS ICP (Huber weights) aligning `moving` onto `fixed`; the sets may
// have different sizes and no prior correspondence. Returns best-so-far
// with converged=false when the iteration cap is hit.
ContourMatch icp_align(const std::vector<Vec2>& moving, const std::vector<Vec2>& fixed,
                       const IcpConfig& cfg = {});

// Matching quality: mean Euclidean distance over the matched pairs.
double contour_quality(const ContourMatch& match);

// Pearson correlation of two equal-length intensity blocks; 0 when either
// block has zero variance.
double pcc(const std::vector<float>& a, const std::vector<float>& b);

// Regulator r grows linearly with the iteration index and caps at 0.8.
double regulator(int iteration);

// C_pc / (1 + r)^(1 + sqrt(d)) with the motion size d in centimeters.
double regularized_score(double c_pc, double d_cm, double r);

struct CorrelationConfig {
  int block_beams = 5;    // W_b
  int block_bins = 7;     // W_B
  int search_beams = 11;  // W_W
  int search_bins = 15;   // W_H
  double min_pcc = 0.1;   // below this the region is too flat to match
  bool subpixel = true;   // parabolic peak refinement of the winning cell
};

struct CorrelationResult {
  bool ok = false;        // false: flat region or window out of bounds
  Vec2 motion = Vec2::Zero();  // v^I = polar(synthetic) - polar(match)
  double score = 0.0;     // regularized score of the winner
  double raw_pcc = 0.0;
  int b = 0, B = 0;       // matched data pixel
};

// Scores every candidate in the search window around (b, B) of the
// synthetic image against the data image and returns the argmax of the
// regularized PCC. Ties prefer smaller motion, then smaller B, then b.
CorrelationResult correlation_search(const BeamBinImage& synth, const BeamBinImage& data,
                                     int b, int B, int iteration,
                                     const CorrelationConfig& cfg = {});

enum class MotionSource : std::uint8_t { Contour = 0, Correlation = 1, Blended = 2 };

struct MotionVector {
  Vec2 v = Vec2::Zero();
  double alpha = 0.0;  // contour weight actually used
  double score = 0.0;
  MotionSource source = MotionSource::Blended;
};

// Sparse per-pixel field keyed by (b, B).
struct MotionField2D {
  SonarGeometry geom;
  std::unordered_map<std::uint32_t, MotionVector> vectors;

  std::uint32_t key(int b, int B) const {
    return static_cast<std::uint32_t>(b) << 16 | static_cast<std::uint32_t>(B);
  }
  void set(int b, int B, const MotionVector& mv) { vectors[key(b, B)] = mv; }
  const MotionVector* get(int b, int B) const {
    auto it = vectors.find(key(b, B));
    return it == vectors.end() ? nullptr : &it->second;
  }
};

struct BlendConfig {
  double d1_cm = 0.5;  // full contour weight inside this distance
  double d2_cm = 2.0;  // alpha decays to 0.01 here
};

// alpha(d): 1 for d <= d1, exp(-k (d - d1)) beyond, k = ln(100)/(d2 - d1).
double blend_alpha(double d_cm, const BlendConfig& cfg = {});

// One blended vector: v = alpha v_contour + (1 - alpha) v_correlation,
// where v_contour comes from the nearest frontal contour point. Returns
// false when no estimate applies (no correlation vector and alpha < 1).
bool blend_motion(const Vec2& pixel_polar, const std::vector<Vec2>& frontal_polar,
                  const std::vector<Vec2>& frontal_motion, const CorrelationResult& corr,
                  const BlendConfig& cfg, MotionVector* out);

}  // namespace fss
