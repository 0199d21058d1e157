#include <doctest.h>

#include <cmath>

#include "fss3d/errors.hpp"
#include "fss3d/metrics.hpp"
#include "fss3d/rng.hpp"
#include "fss3d/shapes.hpp"

using namespace fss;

namespace {
SonarGeometry tiny_geom() {
  SonarGeometry g;
  g.n_beams = 24;
  g.n_bins = 32;
  g.r_min = 1.0;
  g.r_max = 2.0;
  g.w_theta = 0.35;
  g.w_phi = 0.14;
  return g;
}
}  // namespace

TEST_CASE("intensity_error: identity, constant offset, aggregation") {
  SonarGeometry g = tiny_geom();
  BeamBinImage a(g, SonarPose{});
  Rng rng(6);
  for (auto& v : a.intensities) v = static_cast<float>(rng.uniform(0.0, 1.0));
  // force peaks equal so the constant-offset arithmetic is exact
  a.intensities[0] = 1.0f;
  BinaryMask omega(g);
  for (int b = 5; b <= 20; ++b)
    for (int B = 5; B <= 28; ++B) omega.at(b, B) = 1;

  CHECK(intensity_error(a, a, omega) == doctest::Approx(0.0));

  BeamBinImage c = a;
  for (size_t i = 0; i < c.intensities.size(); ++i)
    if (omega.bits[i]) c.intensities[i] = std::min(1.0f, a.intensities[i] * 0.5f + 0.1f);
  // IE between a and a-with-offset over omega only uses omega pixels
  double ie = intensity_error(a, c, omega);
  CHECK(ie > 0.0);

  // a + 0.1 on omega pixels with both peaks anchored at 1 -> IE = 0.1
  BeamBinImage base = a;
  for (size_t i = 0; i < base.intensities.size(); ++i)
    base.intensities[i] = a.intensities[i] * 0.5f;  // omega values in [0, 0.5]
  base.intensities[0] = 1.0f;                       // anchor pixel outside omega
  BeamBinImage d = base;
  for (size_t i = 0; i < d.intensities.size(); ++i)
    if (omega.bits[i]) d.intensities[i] += 0.1f;
  double ie2 = intensity_error(base, d, omega);
  CHECK(ie2 == doctest::Approx(0.1).epsilon(1e-5));

  // empty region throws
  BinaryMask empty(g);
  CHECK_THROWS_AS(intensity_error(a, a, empty), Error);

  // AIE over {0.1, 0.3} -> 0.2
  CHECK(average_error({0.1, 0.3}) == doctest::Approx(0.2));
  // ACE over two lambda values at the typical contour-error scale
  CHECK(average_error({0.004, 0.006}) == doctest::Approx(0.005));
}

TEST_CASE("image_error: baseline normalization and zero guards") {
  NormalizedErrors t0 = image_error(0.25, 0.004, 0.25, 0.004);
  CHECK(t0.naie == doctest::Approx(1.0));
  CHECK(t0.nace == doctest::Approx(1.0));
  CHECK(t0.e_i == doctest::Approx(1.0));

  // AIE halves, ACE unchanged -> E_I = 0.75
  NormalizedErrors t1 = image_error(0.125, 0.004, 0.25, 0.004);
  CHECK(t1.e_i == doctest::Approx(0.75));

  NormalizedErrors z = image_error(0.1, 0.004, 0.0, 0.004);
  CHECK(z.zero_baseline);
  CHECK(z.naie == doctest::Approx(1.0));
}

TEST_CASE("nve: identity is exactly zero, disjoint exactly one, symmetric") {
  TriangleMesh a = make_icosphere(0.3, 2, Vec3(0, 0, 0));
  CHECK(nve(a, a) == 0.0);

  TriangleMesh b = make_icosphere(0.3, 2, Vec3(2.0, 0, 0));
  CHECK(nve(a, b) == 1.0);

  TriangleMesh c = make_icosphere(0.25, 2, Vec3(0.1, 0.05, -0.02));
  CHECK(nve(a, c) == nve(c, a));
  CHECK(nve(a, c) > 0.0);
  CHECK(nve(a, c) < 1.0);
}

TEST_CASE("nve: shifted unit cube analytic value 2/3") {
  TriangleMesh a = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
  TriangleMesh b = make_box(Vec3(0.5, 0, 0), Vec3(1.5, 1, 1));
  double e = nve(a, b, {128, 0.05});
  CHECK(std::abs(e - 2.0 / 3.0) <= 0.02);
}

TEST_CASE("nve: monotone in shift distance for a convex solid") {
  TriangleMesh a = make_icosphere(0.3, 2);
  double prev = 0.0;
  for (double shift : {0.05, 0.1, 0.2, 0.3, 0.45}) {
    TriangleMesh b = make_icosphere(0.3, 2, Vec3(shift, 0, 0));
    double e = nve(a, b, {96, 0.05});
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("nve: open mesh is rejected") {
  TriangleMesh a = make_icosphere(0.3, 2);
  TriangleMesh open = a;
  open.triangles.pop_back();
  CHECK_THROWS_AS(nve(a, open), Error);
}

TEST_CASE("intensity_error satisfies the triangle-like bound on one region") {
  SonarGeometry g = tiny_geom();
  Rng rng(8);
  BeamBinImage x(g, SonarPose{}), y(g, SonarPose{}), z(g, SonarPose{});
  for (size_t i = 0; i < x.intensities.size(); ++i) {
    x.intensities[i] = static_cast<float>(rng.uniform());
    y.intensities[i] = static_cast<float>(rng.uniform());
    z.intensities[i] = static_cast<float>(rng.uniform());
  }
  // common normalization anchor so the bound applies to raw differences
  x.intensities[0] = y.intensities[0] = z.intensities[0] = 1.0f;
  BinaryMask omega(g);
  for (int b = 2; b <= 23; ++b)
    for (int B = 2; B <= 31; ++B) omega.at(b, B) = 1;
  double xy = intensity_error(x, y, omega);
  double xz = intensity_error(x, z, omega);
  double zy = intensity_error(z, y, omega);
  CHECK(xy <= xz + zy + 1e-12);
}
