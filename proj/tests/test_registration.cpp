#include <doctest.h>

#include <cmath>

#include "fss3d/registration.hpp"
#include "fss3d/rng.hpp"

using namespace fss;

namespace {
constexpr double kPi = 3.14159265358979323846;

// open arc with shape detail, like the frontal contour of a bumpy object;
// the harmonics block tangential sliding during alignment
std::vector<Vec2> arc_points(int n = 200) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    double t = -0.6 + 1.2 * i / (n - 1);
    double r = 0.16 + 0.02 * std::sin(7.0 * t) + 0.012 * std::cos(13.0 * t + 0.4);
    pts.emplace_back(r * std::sin(t), 1.5 - r * std::cos(t));
  }
  return pts;
}

std::vector<Vec2> transform_all(const std::vector<Vec2>& pts, double angle, const Vec2& t) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts)
    out.emplace_back(std::cos(angle) * p.x() - std::sin(angle) * p.y() + t.x(),
                     std::sin(angle) * p.x() + std::cos(angle) * p.y() + t.y());
  return out;
}

SonarGeometry small_geom() {
  SonarGeometry g;
  g.n_beams = 48;
  g.n_bins = 64;
  g.r_min = 1.0;
  g.r_max = 1.63;
  g.w_theta = 20.0 * kPi / 180.0;
  g.w_phi = 8.0 * kPi / 180.0;
  return g;
}

BeamBinImage textured_image(const SonarGeometry& g, std::uint64_t seed) {
  BeamBinImage img(g, SonarPose{});
  Rng rng(seed);
  for (auto& v : img.intensities) v = static_cast<float>(rng.uniform());
  return img;
}
}  // namespace

TEST_CASE("icp_align: identical contours converge immediately to identity") {
  auto pts = arc_points();
  ContourMatch m = icp_align(pts, pts);
  CHECK(m.converged);
  CHECK(m.iterations <= 2);
  CHECK(std::abs(m.rotation) < 1e-12);
  CHECK(m.translation.norm() < 1e-12);
  CHECK(m.lambda == doctest::Approx(0.0));
  CHECK(m.pairs.size() == pts.size());
}

TEST_CASE("icp_align: recovers a small rigid perturbation") {
  auto fixed = arc_points();
  auto moving = transform_all(fixed, 0.0, Vec2(-0.01, -0.02));  // data shifted +1,+2 cm
  ContourMatch m = icp_align(moving, fixed);
  CHECK(std::abs(m.translation.x() - 0.01) < 1e-4);
  CHECK(std::abs(m.translation.y() - 0.02) < 1e-4);
  CHECK(m.lambda < 1e-4);
}

TEST_CASE("icp_align: 20% gross outliers are suppressed (100 seeds)") {
  auto fixed = arc_points();
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    double angle = rng.uniform(-0.02, 0.02);
    Vec2 t(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
    // build moving so that T_true(moving) == fixed: apply the inverse
    auto moving = fixed;
    for (auto& p : moving) {
      Vec2 q = p - t;
      p = Vec2(std::cos(angle) * q.x() + std::sin(angle) * q.y(),
               -std::sin(angle) * q.x() + std::cos(angle) * q.y());
    }
    // contaminate 20% of the moving set with points 0.1 m away
    auto contaminated = moving;
    for (size_t i = 0; i < contaminated.size(); i += 5) {
      double dir = rng.uniform(0.0, 2.0 * kPi);
      contaminated[i] += 0.1 * Vec2(std::cos(dir), std::sin(dir));
    }
    ContourMatch m = icp_align(contaminated, fixed);
    // transform error on the clean points
    double worst = 0.0;
    for (size_t i = 0; i < moving.size(); ++i) {
      if (i % 5 == 0) continue;
      Vec2 q = m.apply(moving[i]);
      Vec2 expect(std::cos(angle) * moving[i].x() - std::sin(angle) * moving[i].y() + t.x(),
                  std::sin(angle) * moving[i].x() + std::cos(angle) * moving[i].y() + t.y());
      worst = std::max(worst, (q - expect).norm());
    }
    CHECK(worst < 2e-3);
  }
}

TEST_CASE("contour_quality: constant offset pairs") {
  // straight sparse segment: each point's true partner stays nearest under
  // the perpendicular offset, so every pair is offset by exactly 5 mm
  std::vector<Vec2> fixed;
  for (int i = 0; i < 30; ++i) fixed.emplace_back(-0.15 + 0.01 * i, 1.5);
  auto moving = fixed;
  for (auto& p : moving) p.y() -= 0.005;
  IcpConfig cfg;
  cfg.max_iter = 0;  // no alignment: measure the raw offset
  ContourMatch m = icp_align(moving, fixed, cfg);
  CHECK(m.lambda == doctest::Approx(0.005).epsilon(1e-6));
  // view relevance gate: 1 cm
  CHECK(m.lambda < 0.01);
}

TEST_CASE("pcc: identity, inversion, affine invariance, flat blocks") {
  std::vector<float> a = {0.1f, 0.7f, 0.3f, 0.9f, 0.2f, 0.5f, 0.8f};
  std::vector<float> b;

  CHECK(pcc(a, a) == doctest::Approx(1.0));

  b.clear();
  for (float v : a) b.push_back(-v + 2.0f);
  CHECK(pcc(a, b) == doctest::Approx(-1.0));

  b.clear();
  for (float v : a) b.push_back(3.5f * v + 0.25f);
  CHECK(pcc(a, b) == doctest::Approx(1.0));

  std::vector<float> flat(a.size(), 0.4f);
  CHECK(pcc(a, flat) == 0.0);
  CHECK(pcc(flat, flat) == 0.0);
}

TEST_CASE("regulator schedule and regularized score arithmetic") {
  CHECK(regulator(0) == doctest::Approx(0.2));
  CHECK(regulator(1) == doctest::Approx(0.35));
  CHECK(regulator(4) == doctest::Approx(0.8));
  CHECK(regulator(10) == doctest::Approx(0.8));

  // d = 0: exponent is 1
  CHECK(regularized_score(0.7, 0.0, 0.2) == doctest::Approx(0.7 / 1.2));
  // direct evaluation: C=1, d=1 cm, r=0.2 -> 1 / 1.2^2
  CHECK(regularized_score(1.0, 1.0, 0.2) == doctest::Approx(1.0 / 1.44));
  // late-iteration reversal: (1, d=2.5) loses to (0.65, d=0) at r=0.8
  double big_motion = regularized_score(1.0, 2.5, 0.8);
  double small_motion = regularized_score(0.65, 0.0, 0.8);
  CHECK(big_motion == doctest::Approx(0.219).epsilon(0.005));
  CHECK(small_motion == doctest::Approx(0.361).epsilon(0.005));
  CHECK(big_motion < small_motion);

  // strictly decreasing in d for fixed C_pc > 0 and r
  double prev = regularized_score(1.0, 0.0, 0.5);
  for (double d = 0.25; d <= 4.0; d += 0.25) {
    double s = regularized_score(1.0, d, 0.5);
    CHECK(s < prev);
    prev = s;
  }
  // strictly decreasing in r for fixed d, C_pc > 0
  prev = regularized_score(0.9, 1.5, 0.2);
  for (double r = 0.3; r <= 0.8; r += 0.1) {
    double s = regularized_score(0.9, 1.5, r);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("correlation_search: self-match gives zero motion discounted by r only") {
  SonarGeometry g = small_geom();
  BeamBinImage img = textured_image(g, 11);
  CorrelationResult res = correlation_search(img, img, 24, 32, 0);
  REQUIRE(res.ok);
  CHECK(res.motion.norm() == doctest::Approx(0.0));
  CHECK(res.raw_pcc == doctest::Approx(1.0));
  CHECK(res.score == doctest::Approx(1.0 / 1.2));
  CHECK(res.b == 24);
  CHECK(res.B == 32);
}

TEST_CASE("correlation_search: pure range shift is recovered exactly") {
  SonarGeometry g = small_geom();
  BeamBinImage synth = textured_image(g, 12);
  BeamBinImage data(g, SonarPose{});
  // data content displaced two bins outward: data(b, B+2) = synth(b, B)
  for (int b = 1; b <= g.n_beams; ++b)
    for (int B = 1; B + 2 <= g.n_bins; ++B) data.at(b, B + 2) = synth.at(b, B);
  CorrelationResult res = correlation_search(synth, data, 24, 30, 0);
  REQUIRE(res.ok);
  CHECK(res.b == 24);
  CHECK(res.B == 32);
  CHECK(res.motion.norm() == doctest::Approx(2.0 * g.delta_range()).epsilon(1e-9));
}

TEST_CASE("correlation_search: flat data region is rejected") {
  SonarGeometry g = small_geom();
  BeamBinImage synth = textured_image(g, 13);
  BeamBinImage flat(g, SonarPose{});  // all zeros
  CorrelationResult res = correlation_search(synth, flat, 24, 32, 0);
  CHECK_FALSE(res.ok);
}

TEST_CASE("correlation_search: equals independent exhaustive enumeration") {
  SonarGeometry g = small_geom();
  Rng rng(99);
  CorrelationConfig cfg;
  for (int trial = 0; trial < 25; ++trial) {
    BeamBinImage synth = textured_image(g, 1000 + trial);
    BeamBinImage data = textured_image(g, 2000 + trial);
    // overlap a shifted copy so there is real signal
    int shift = rng.uniform_int(-3, 3);
    for (int b = 1; b <= g.n_beams; ++b)
      for (int B = 1; B <= g.n_bins; ++B) {
        int Bs = B + shift;
        if (Bs >= 1 && Bs <= g.n_bins) data.at(b, Bs) = synth.at(b, B);
      }
    int b0 = rng.uniform_int(6, g.n_beams - 6), B0 = rng.uniform_int(8, g.n_bins - 8);
    int iter = rng.uniform_int(0, 6);
    CorrelationResult got = correlation_search(synth, data, b0, B0, iter, cfg);

    // independent brute force over the same window
    const int hb = cfg.block_beams / 2, hB = cfg.block_bins / 2;
    auto block = [&](const BeamBinImage& img, int cb, int cB) {
      std::vector<float> v;
      for (int db = -hb; db <= hb; ++db)
        for (int dB = -hB; dB <= hB; ++dB) v.push_back(img.at(cb + db, cB + dB));
      return v;
    };
    auto ref = block(synth, b0, B0);
    auto polar_of = [&](int cb, int cB) {
      return polar_project(g.r_min + (cB - 1) * g.delta_range(),
                           g.theta_min() + (cb - 1) * g.delta_theta());
    };
    double best = -1e300;
    int bb = 0, bB = 0;
    double bd = 0;
    for (int db = -cfg.search_beams / 2; db <= cfg.search_beams / 2; ++db)
      for (int dB = -cfg.search_bins / 2; dB <= cfg.search_bins / 2; ++dB) {
        int cb = b0 + db, cB = B0 + dB;
        if (cb - hb < 1 || cb + hb > g.n_beams || cB - hB < 1 || cB + hB > g.n_bins) continue;
        double c = pcc(ref, block(data, cb, cB));
        double d = (polar_of(b0, B0) - polar_of(cb, cB)).norm() * 100.0;
        double s = regularized_score(c, d, regulator(iter));
        if (s > best || (s == best && (d < bd || (d == bd && (cB < bB || (cB == bB && cb < bb)))))) {
          best = s;
          bb = cb;
          bB = cB;
          bd = d;
        }
      }
    if (got.ok) {
      CHECK(got.b == bb);
      CHECK(got.B == bB);
      CHECK(got.score == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("blend_motion: boundary weights and the decay midpoint") {
  BlendConfig cfg;
  CHECK(blend_alpha(0.0, cfg) == 1.0);
  CHECK(blend_alpha(0.5, cfg) == 1.0);
  CHECK(blend_alpha(2.0, cfg) == doctest::Approx(0.01));
  CHECK(blend_alpha(3.0, cfg) <= 0.01);
  // alpha(1.25 cm) = exp(-ln(100) * 0.75 / 1.5) = 0.1
  CHECK(blend_alpha(1.25, cfg) == doctest::Approx(0.1).epsilon(1e-9));

  std::vector<Vec2> frontal = {{0.0, 1.0}};
  std::vector<Vec2> vc = {{0.004, -0.003}};
  CorrelationResult corr;
  corr.ok = true;
  corr.motion = Vec2(-0.002, 0.001);
  corr.score = 0.5;

  // on the contour: pure contour vector
  MotionVector mv;
  REQUIRE(blend_motion(Vec2(0.0, 1.0), frontal, vc, corr, cfg, &mv));
  CHECK(mv.alpha == 1.0);
  CHECK((mv.v - vc[0]).norm() < 1e-15);

  // 3 cm away: within 1% of the correlation vector
  REQUIRE(blend_motion(Vec2(0.0, 1.03), frontal, vc, corr, cfg, &mv));
  CHECK(mv.alpha <= 0.01);
  CHECK((mv.v - corr.motion).norm() <= 0.01 * (vc[0] - corr.motion).norm() + 1e-12);

  // far from contour without a correlation estimate: no motion
  CorrelationResult none;
  CHECK_FALSE(blend_motion(Vec2(0.0, 1.05), frontal, vc, none, cfg, &mv));
  // on the contour without correlation: contour motion still applies
  REQUIRE(blend_motion(Vec2(0.0, 1.0), frontal, vc, none, cfg, &mv));
  CHECK(mv.source == MotionSource::Contour);
}
