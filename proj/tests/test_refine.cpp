#include <doctest.h>

#include <cmath>

#include "dreamseg/eval.hpp"
#include "dreamseg/refine.hpp"
#include "helpers.hpp"

using namespace dreamseg;

namespace {

// 32x32 guide, black left half and white right half.
RasterImage step_guide(int n = 32) {
  RasterImage g(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = n / 2; j < n; ++j)
      for (int c = 0; c < 3; ++c) g.set(i, j, c, 1.0);
  return g;
}

double side_variance(const Plane& p, bool right) {
  std::vector<double> v;
  for (int i = 0; i < p.height; ++i)
    for (int j = right ? p.width / 2 : 0; j < (right ? p.width : p.width / 2); ++j) v.push_back(p.at(i, j));
  return pixel_variance(v);
}

}  // namespace

TEST_CASE("bilateral config validation") {
  BilateralConfig c;
  CHECK_NOTHROW(c.validate());
  c.kernel_size = 4;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.sigma_range = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero iterations leave the mask unchanged") {
  const RasterImage guide = testing::random_image(8, 9, 1);
  Plane m(8, 9);
  Rng rng(1);
  for (double& v : m.values) v = uniform(rng);
  BilateralConfig c;
  c.iterations = 0;
  CHECK(cross_bilateral(m, guide, c).values == m.values);
}

TEST_CASE("constant guide reduces to spatial smoothing") {
  const RasterImage guide = testing::flat_image(10, 10, 0.3, 0.3, 0.3);
  BilateralConfig c;
  c.iterations = 3;
  const Plane flat = cross_bilateral(Plane(10, 10, 0.42), guide, c);
  for (double v : flat.values) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));

  // impulse response is a symmetric Gaussian-like bump
  Plane impulse(10, 10, 0.0);
  impulse.at(5, 5) = 1.0;
  c.iterations = 1;
  const Plane out = cross_bilateral(impulse, guide, c);
  const double side = std::exp(-1.0 / (2.0 * c.sigma_spatial * c.sigma_spatial));
  CHECK(out.at(5, 6) / out.at(5, 5) == doctest::Approx(side));
  CHECK(out.at(4, 5) == doctest::Approx(out.at(6, 5)));
  CHECK(out.at(4, 4) / out.at(5, 5) == doctest::Approx(side * side));
}

TEST_CASE("adjoint is the transpose") {
  const RasterImage guide = testing::random_image(7, 6, 3);
  BilateralConfig c;
  c.iterations = 4;
  c.kernel_size = 5;
  const BilateralOperator op(guide, c);
  Rng rng(2);
  Plane a(7, 6), b(7, 6);
  for (double& v : a.values) v = uniform(rng, -1, 1);
  for (double& v : b.values) v = uniform(rng, -1, 1);
  const Plane fa = op.apply(a);
  const Plane tb = op.apply_adjoint(b);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    lhs += fa.values[i] * b.values[i];
    rhs += a.values[i] * tb.values[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("step edge: filtering sharpens the boundary and does not mix across it") {
  const int n = 32;
  const RasterImage guide = step_guide(n);
  BinaryMask gt(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = n / 2; j < n; ++j) gt.at(i, j) = 1;

  Rng rng(17);
  Plane noisy(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      noisy.at(i, j) = std::clamp((j >= n / 2 ? 0.8 : 0.2) + 0.35 * standard_normal(rng), 0.0, 1.0);
    }
  }
  BilateralConfig c;
  c.sigma_range = 0.05;
  const Plane filtered = cross_bilateral(noisy, guide, c);

  const double before = boundary_iou(binarize(noisy, 0.5), gt);
  const double after = boundary_iou(binarize(filtered, 0.5), gt);
  CHECK(after > before);
  CHECK(side_variance(filtered, false) < pixel_variance(filtered.values));
  CHECK(side_variance(filtered, true) < pixel_variance(filtered.values));

  Plane left(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n / 2; ++j) left.at(i, j) = 1.0;
  const Plane spread = cross_bilateral(left, guide, c);
  double leak = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = n / 2; j < n; ++j) leak = std::max(leak, spread.at(i, j));
  CHECK(leak < 0.01);
}

TEST_CASE("pixel params take the filtered raster exactly") {
  const RasterImage guide = step_guide(16);
  Rng rng(4);
  AlphaMaskStack m(1, 16, 16);
  for (double& v : m.alphas) v = uniform(rng, 0.05, 0.95);
  const MaskParams params = PixelMaskParams::from_alphas(m);
  BilateralConfig c;
  c.iterations = 5;
  const MaskParams out = init_mask_with_bilateral(params, guide, c);
  const Plane expect = cross_bilateral(m.plane_copy(0), guide, c);
  CHECK(testing::max_abs_diff(rasterize(out, 16, 16).alphas, expect.values) < 1e-9);
}

TEST_CASE("fourier fit reaches the tolerance on 64x64") {
  const RasterImage image = testing::random_image(64, 64, 5);
  for (std::uint64_t seed : {0u, 1u}) {
    FieldConfig f;
    f.fourier_scale = 4.0;
    const MaskParams params = init_fourier_params(1, 64, 64, f, seed);
    FitReport report;
    const MaskParams out = init_mask_with_bilateral(params, image, BilateralConfig{}, FitConfig{}, &report);
    CHECK(report.rmse < 0.05);
    CHECK(report.converged);
    const Plane target = cross_bilateral(rasterize(params, 64, 64).plane_copy(0), image, BilateralConfig{});
    const AlphaMaskStack got = rasterize(out, 64, 64);
    double se = 0.0;
    for (std::size_t i = 0; i < target.values.size(); ++i) se += std::pow(got.alphas[i] - target.values[i], 2);
    CHECK(std::sqrt(se / target.values.size()) == doctest::Approx(report.rmse).epsilon(1e-9));
  }
}

TEST_CASE("zero filter iterations keep the fourier raster up to the fit") {
  const RasterImage image = testing::random_image(32, 32, 6);
  const MaskParams params = init_fourier_params(2, 32, 32, FieldConfig{}, 3);
  BilateralConfig c;
  c.iterations = 0;
  FitReport report;
  const MaskParams out = init_mask_with_bilateral(params, image, c, FitConfig{}, &report);
  CHECK(report.rmse < 0.05);
  CHECK(testing::max_abs_diff(rasterize(out, 32, 32).alphas, rasterize(params, 32, 32).alphas) < 0.25);
}
