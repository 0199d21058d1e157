#include "fss3d/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fss3d/errors.hpp"

namespace fss {

namespace {

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

int nearest_index(const Vec2& p, const std::vector<Vec2>& set) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(set.size()); ++i) {
    double d = (set[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

ContourMatch icp_align(const std::vector<Vec2>& moving, const std::vector<Vec2>& fixed,
                       const IcpConfig& cfg) {
  if (moving.size() < 2 || fixed.size() < 2)
    throw Error(ErrorCode::InvalidConfig, "icp_align: need at least 2 points per set");

  ContourMatch match;
  const int n = static_cast<int>(moving.size());
  std::vector<int> corr(n, -1);
  std::vector<double> resid(n, 0.0), weight(n, 1.0);

  for (int it = 0; it < cfg.max_iter; ++it) {
    // correspondences under the current transform
    for (int i = 0; i < n; ++i) {
      Vec2 p = match.apply(moving[i]);
      corr[i] = nearest_index(p, fixed);
      resid[i] = (fixed[corr[i]] - p).norm();
    }
    // Huber weights, scale tied to the median residual
    std::vector<double> tmp = resid;
    double scale = cfg.huber_factor * median_inplace(tmp);
    for (int i = 0; i < n; ++i)
      weight[i] = (resid[i] <= scale || resid[i] <= 1e-12) ? 1.0 : scale / resid[i];

    // weighted rigid fit moving -> fixed (fresh fit from the originals)
    double wsum = 0.0;
    Vec2 mp = Vec2::Zero(), mq = Vec2::Zero();
    for (int i = 0; i < n; ++i) {
      wsum += weight[i];
      mp += weight[i] * moving[i];
      mq += weight[i] * fixed[corr[i]];
    }
    mp /= wsum;
    mq /= wsum;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec2 a = moving[i] - mp;
      Vec2 b = fixed[corr[i]] - mq;
      sxx += weight[i] * (a.x() * b.x() + a.y() * b.y());
      sxy += weight[i] * (a.x() * b.y() - a.y() * b.x());
    }
    double angle = std::atan2(sxy, sxx);
    Vec2 rp(std::cos(angle) * mp.x() - std::sin(angle) * mp.y(),
            std::sin(angle) * mp.x() + std::cos(angle) * mp.y());
    Vec2 trans = mq - rp;

    double delta = std::abs(angle - match.rotation) + (trans - match.translation).norm();
    match.rotation = angle;
    match.translation = trans;
    match.iterations = it + 1;
    if (delta < cfg.tol) {
      match.converged = true;
      break;
    }
  }

  // final correspondences, inlier selection and quality
  std::vector<double> final_r(n);
  for (int i = 0; i < n; ++i) {
    Vec2 p = match.apply(moving[i]);
    corr[i] = nearest_index(p, fixed);
    final_r[i] = (fixed[corr[i]] - p).norm();
  }
  std::vector<double> tmp = final_r;
  double med = median_inplace(tmp);
  for (double& d : tmp) d = 0.0;
  std::vector<double> dev(n);
  for (int i = 0; i < n; ++i) dev[i] = std::abs(final_r[i] - med);
  double mad = median_inplace(dev);
  double cut = med + cfg.inlier_mad_factor * mad + 1e-12;

  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (final_r[i] <= cut) {
      match.pairs.emplace_back(i, corr[i]);
      sum += final_r[i];
    }
  }
  match.lambda = match.pairs.empty() ? 0.0 : sum / match.pairs.size();
  return match;
}

double contour_quality(const ContourMatch& match) { return match.lambda; }

double pcc(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorCode::InvalidConfig, "pcc: block size mismatch");
  const int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;  // flat block: undefined quotient
  return sab / std::sqrt(saa * sbb);
}

double regulator(int iteration) { return std::min(0.8, 0.2 + 0.15 * iteration); }

double regularized_score(double c_pc, double d_cm, double r) {
  return c_pc / std::pow(1.0 + r, 1.0 + std::sqrt(std::max(0.0, d_cm)));
}

CorrelationResult correlation_search(const BeamBinImage& synth, const BeamBinImage& data,
                                     int b, int B, int iteration, const CorrelationConfig& cfg) {
  CorrelationResult out;
  const SonarGeometry& g = synth.geom;
  const int hb = cfg.block_beams / 2, hB = cfg.block_bins / 2;
  if (b - hb < 1 || b + hb > g.n_beams || B - hB < 1 || B + hB > g.n_bins)
    return out;  // reference window must fit

  auto block = [&](const BeamBinImage& img, int cb, int cB) {
    std::vector<float> v;
    v.reserve(cfg.block_beams * cfg.block_bins);
    for (int db = -hb; db <= hb; ++db)
      for (int dB = -hB; dB <= hB; ++dB) v.push_back(img.at(cb + db, cB + dB));
    return v;
  };
  const std::vector<float> ref = block(synth, b, B);
  const Vec2 p_ref = polar_project(g.r_min + (B - 1) * g.delta_range(),
                                   g.theta_min() + (b - 1) * g.delta_theta());
  const double r = regulator(iteration);

  const int sb = cfg.search_beams / 2, sB = cfg.search_bins / 2;
  // raw-PCC table kept for the sub-pixel fit around the winner; the fit
  // interpolates the correlation surface, not the motion-penalized score
  std::vector<double> table(static_cast<size_t>(cfg.search_beams) * cfg.search_bins,
                            -std::numeric_limits<double>::infinity());
  auto tab = [&](int db, int dB) -> double& {
    return table[static_cast<size_t>(db + sb) * cfg.search_bins + (dB + sB)];
  };
  bool have = false;
  double best_score = 0.0, best_d = 0.0, best_pcc = 0.0;
  int best_b = 0, best_B = 0;
  for (int db = -sb; db <= sb; ++db)
    for (int dB = -sB; dB <= sB; ++dB) {
      const int cb = b + db, cB = B + dB;
      if (cb - hb < 1 || cb + hb > g.n_beams || cB - hB < 1 || cB + hB > g.n_bins) continue;
      const double c = pcc(ref, block(data, cb, cB));
      const Vec2 p = polar_project(g.r_min + (cB - 1) * g.delta_range(),
                                   g.theta_min() + (cb - 1) * g.delta_theta());
      const double d_cm = (p_ref - p).norm() * 100.0;
      const double s = regularized_score(c, d_cm, r);
      tab(db, dB) = c;
      bool better = !have || s > best_score ||
                    (s == best_score &&
                     (d_cm < best_d || (d_cm == best_d && (cB < best_B || (cB == best_B && cb < best_b)))));
      if (better) {
        have = true;
        best_score = s;
        best_d = d_cm;
        best_pcc = c;
        best_b = cb;
        best_B = cB;
      }
    }
  if (!have || best_pcc < cfg.min_pcc) return out;  // flat region: no motion

  out.ok = true;
  out.b = best_b;
  out.B = best_B;
  out.raw_pcc = best_pcc;
  out.score = best_score;

  // parabolic refinement along each axis, half a cell at most; a perfect
  // center match is already exact and must stay at zero motion
  double fb = 0.0, fB = 0.0;
  if (cfg.subpixel && best_pcc < 1.0 - 1e-9) {
    auto parabola = [](double sm, double s0, double sp) {
      const double denom = sm - 2.0 * s0 + sp;
      // a flat correlation ridge carries no sub-cell information
      if (!(std::isfinite(sm) && std::isfinite(sp)) || denom > -0.05 * std::abs(s0))
        return 0.0;
      return std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
    };
    const int db0 = best_b - b, dB0 = best_B - B;
    if (db0 > -sb && db0 < sb)
      fb = parabola(tab(db0 - 1, dB0), tab(db0, dB0), tab(db0 + 1, dB0));
    if (dB0 > -sB && dB0 < sB)
      fB = parabola(tab(db0, dB0 - 1), tab(db0, dB0), tab(db0, dB0 + 1));
  }
  const Vec2 p_best = polar_project(g.r_min + (best_B + fB - 1) * g.delta_range(),
                                    g.theta_min() + (best_b + fb - 1) * g.delta_theta());
  out.motion = p_ref - p_best;  // v^I = (x_synth - x_match, y_synth - y_match)
  return out;
}

double blend_alpha(double d_cm, const BlendConfig& cfg) {
  if (d_cm <= cfg.d1_cm) return 1.0;
  const double k = std::log(100.0) / (cfg.d2_cm - cfg.d1_cm);
  return std::exp(-k * (d_cm - cfg.d1_cm));
}

bool blend_motion(const Vec2& pixel_polar, const std::vector<Vec2>& frontal_polar,
                  const std::vector<Vec2>& frontal_motion, const CorrelationResult& corr,
                  const BlendConfig& cfg, MotionVector* out) {
  const bool have_contour = !frontal_polar.empty();
  double alpha = 0.0;
  Vec2 vc = Vec2::Zero();
  if (have_contour) {
    int idx = nearest_index(pixel_polar, frontal_polar);
    alpha = blend_alpha((pixel_polar - frontal_polar[idx]).norm() * 100.0, cfg);
    vc = frontal_motion[idx];
  }
  if (!corr.ok && alpha < 1.0) return false;  // nothing reliable to blend
  out->alpha = alpha;
  if (!corr.ok) {  // alpha == 1: pure contour motion
    out->v = vc;
    out->score = 0.0;
    out->source = MotionSource::Contour;
    return true;
  }
  out->v = alpha * vc + (1.0 - alpha) * corr.motion;
  out->score = corr.score;
  out->source = alpha >= 1.0 ? MotionSource::Contour
               : alpha <= 0.0 ? MotionSource::Correlation
                              : MotionSource::Blended;
  return true;
}

}  // namespace fss
