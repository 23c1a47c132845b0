#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dreamseg/implicit_mask.hpp"
#include "helpers.hpp"

using namespace dreamseg;

namespace {

FieldConfig small_field() {
  FieldConfig c;
  c.n_freq = 8;
  c.hidden = {12, 10, 8};
  c.fourier_scale = 3.0;
  return c;
}

double weighted_sum(const AlphaMaskStack& m, const AlphaMaskStack& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.alphas.size(); ++i) s += m.alphas[i] * w.alphas[i];
  return s;
}

}  // namespace

TEST_CASE("init is deterministic in (seed, config)") {
  const auto a = init_fourier_params(1, 64, 64, FieldConfig{}, 7);
  const auto b = init_fourier_params(1, 64, 64, FieldConfig{}, 7);
  const auto c = init_fourier_params(1, 64, 64, FieldConfig{}, 8);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end()));
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin(), c.data().end()));
}

TEST_CASE("k heads share one network") {
  const auto p = init_fourier_params(3, 16, 16, FieldConfig{}, 1);
  CHECK(p.widths()[kFieldLayers] == 3);
  CHECK(p.widths()[0] == 2 * 256);
  CHECK(rasterize(p, 16, 16).k == 3);
}

TEST_CASE("init rejects bad arguments") {
  CHECK_THROWS_AS(init_fourier_params(1, 0, 8, FieldConfig{}, 0), std::invalid_argument);
  CHECK_THROWS_AS(init_fourier_params(1, 8, -1, FieldConfig{}, 0), std::invalid_argument);
  CHECK_THROWS_AS(init_fourier_params(0, 8, 8, FieldConfig{}, 0), std::invalid_argument);
  FieldConfig bad;
  bad.fourier_scale = 0.0;
  CHECK_THROWS_AS(init_fourier_params(1, 8, 8, bad, 0), std::invalid_argument);
}

TEST_CASE("zero frequencies give a constant mask") {
  FieldConfig c = small_field();
  c.n_freq = 0;
  const auto p = init_fourier_params(1, 12, 9, c, 3);
  const auto m = rasterize(p, 12, 9);
  for (double v : m.alphas) CHECK(v == doctest::Approx(m.alphas[0]).epsilon(1e-15));
}

TEST_CASE("rasterize stays in [0,1] and is pure") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FieldConfig c;
    c.fourier_scale = 50.0;
    const auto p = init_fourier_params(2, 20, 24, c, seed);
    const auto a = rasterize(p, 20, 24);
    const auto b = rasterize(p, 20, 24);
    CHECK(a.alphas == b.alphas);
    for (double v : a.alphas) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("reusing a cache across calls gives the same raster") {
  const auto p = init_fourier_params(1, 10, 10, small_field(), 4);
  RasterCache cache;
  const auto a = rasterize(p, 10, 10, &cache);
  const auto b = rasterize(p, 10, 10, &cache);
  const auto c = rasterize(p, 10, 10);
  CHECK(a.alphas == b.alphas);
  CHECK(a.alphas == c.alphas);
}

TEST_CASE("pixel params: zero logits rasterize to 0.5") {
  const PixelMaskParams p(2, 5, 7, 0.0);
  const auto m = rasterize(p, 5, 7);
  for (double v : m.alphas) CHECK(v == 0.5);
  CHECK_THROWS_AS(rasterize(p, 5, 8), std::invalid_argument);
}

TEST_CASE("pixel params round-trip through from_alphas") {
  AlphaMaskStack m(1, 3, 3, 0.0);
  for (std::size_t i = 0; i < m.alphas.size(); ++i) m.alphas[i] = 0.05 + 0.1 * static_cast<double>(i);
  const auto back = rasterize(PixelMaskParams::from_alphas(m), 3, 3);
  CHECK(testing::max_abs_diff(back.alphas, m.alphas) < 1e-12);
}

TEST_CASE("pixel_variance examples") {
  const std::vector<double> constant(10, 0.3);
  CHECK(pixel_variance(constant) == doctest::Approx(0.0));
  const std::vector<double> half{0, 1, 0, 1, 1, 0};
  CHECK(pixel_variance(half) == doctest::Approx(0.25));
  AlphaMaskStack grid(1, 2, 2);
  grid.alphas = {0, 0, 1, 1};
  CHECK(pixel_variance(grid) == doctest::Approx(0.25));
  CHECK_THROWS_AS(pixel_variance(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("raster_vjp matches central differences") {
  for (bool train_freq : {false, true}) {
    CAPTURE(train_freq);
    FieldConfig c = small_field();
    c.train_frequencies = train_freq;
    auto p = init_fourier_params(2, 6, 5, c, 11);
    Rng rng(5);
    AlphaMaskStack w(2, 6, 5);
    for (double& v : w.alphas) v = uniform(rng, -1.0, 1.0);

    RasterCache cache;
    (void)rasterize(p, 6, 5, &cache);
    const Eigen::VectorXd g = raster_vjp(p, cache, w);
    REQUIRE(static_cast<std::size_t>(g.size()) == p.parameter_count());

    const double h = 1e-6;
    auto data = p.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double up = weighted_sum(rasterize(p, 6, 5), w);
      data[i] = keep - h;
      const double down = weighted_sum(rasterize(p, 6, 5), w);
      data[i] = keep;
      const double fd = (up - down) / (2 * h);
      if (!train_freq && i < p.frequency_count()) {
        CHECK(g[static_cast<Eigen::Index>(i)] == 0.0);
        continue;
      }
      CHECK(std::abs(fd - g[static_cast<Eigen::Index>(i)]) <= 1e-6 + 1e-5 * std::abs(fd));
    }
  }
}

TEST_CASE("from_data rebuilds the same function") {
  const auto p = init_fourier_params(2, 8, 8, small_field(), 9);
  const auto q = FourierMaskParams::from_data(2, small_field(), 9, std::vector<double>(p.data().begin(), p.data().end()));
  CHECK(rasterize(p, 8, 8).alphas == rasterize(q, 8, 8).alphas);
  CHECK_THROWS_AS(FourierMaskParams::from_data(2, small_field(), 9, std::vector<double>(3, 0.0)), std::invalid_argument);
}
