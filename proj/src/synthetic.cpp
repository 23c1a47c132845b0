#include "dreamseg/synthetic.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "dreamseg/image_io.hpp"
#include "dreamseg/optimizer.hpp"
#include "dreamseg/rng.hpp"

namespace dreamseg {

namespace {

using Color = std::array<double, 3>;

/// A corner of the RGB cube other than black/white-ish grays, pulled in by
/// `inset` so that every channel sits far from 0.5.
Color saturated_color(Rng& rng, double inset) {
  for (;;) {
    Color c{};
    int highs = 0;
    for (double& v : c) {
      const bool high = uniform(rng) < 0.5;
      highs += high ? 1 : 0;
      v = high ? 1.0 - inset : inset;
    }
    if (highs != 0 && highs != 3) return c;
  }
}

struct Ellipse {
  double ci, cj, ri, rj, angle;

  [[nodiscard]] bool contains(double i, double j) const {
    const double di = i - ci;
    const double dj = j - cj;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    const double u = (ca * di + sa * dj) / ri;
    const double v = (-sa * di + ca * dj) / rj;
    return u * u + v * v <= 1.0;
  }
};

Ellipse random_ellipse(Rng& rng, int height, int width, double rmin, double rmax) {
  Ellipse e{};
  e.ci = uniform(rng, 0.38, 0.62) * height;
  e.cj = uniform(rng, 0.38, 0.62) * width;
  e.ri = uniform(rng, rmin, rmax) * height;
  e.rj = uniform(rng, rmin, rmax) * width;
  e.angle = uniform(rng, 0.0, std::numbers::pi);
  return e;
}

RasterImage clutter(Rng& rng, int height, int width) {
  RasterImage img(height, width);
  const Color base = saturated_color(rng, 0.08);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      for (int c = 0; c < 3; ++c) img.set(i, j, c, base[c]);
    }
  }
  const int blobs = 14;
  for (int b = 0; b < blobs; ++b) {
    const Color col = saturated_color(rng, 0.08);
    const double ci = uniform(rng) * height;
    const double cj = uniform(rng) * width;
    const double hi = uniform(rng, 0.05, 0.2) * height;
    const double hj = uniform(rng, 0.05, 0.2) * width;
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        if (std::abs(i + 0.5 - ci) <= hi && std::abs(j + 0.5 - cj) <= hj) {
          for (int c = 0; c < 3; ++c) img.set(i, j, c, col[c]);
        }
      }
    }
  }
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      for (int c = 0; c < 3; ++c) img.set(i, j, c, img.at(i, j, c) + uniform(rng, -0.03, 0.03));
    }
  }
  return img;
}

}  // namespace

OracleScene make_oracle_scene(int height, int width, std::uint64_t seed, const std::string& caption) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("scene size must be positive");
  Rng rng(seed);
  const Ellipse shape = random_ellipse(rng, height, width, 0.16, 0.28);
  const Color fg = saturated_color(rng, 0.03);
  RasterImage image = clutter(rng, height, width);
  RasterImage target(height, width, 0.5);
  BinaryMask gt(height, width);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      if (!shape.contains(i + 0.5, j + 0.5)) continue;
      gt.at(i, j) = 1;
      const double shade = 0.02 * std::sin(0.3 * i) * std::cos(0.3 * j);
      for (int c = 0; c < 3; ++c) {
        image.set(i, j, c, fg[c] + shade);
        target.set(i, j, c, fg[c] + shade);
      }
    }
  }
  return {std::move(image), std::move(target), std::move(gt), caption};
}

OracleScene make_identity_scene(int height, int width, std::uint64_t seed, const std::string& caption) {
  Rng rng(seed);
  RasterImage image(height, width, 0.5);
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double v = 0.5 + uniform(rng, -0.02, 0.02);
      for (int c = 0; c < 3; ++c) image.set(i, j, c, v);
    }
  }
  RasterImage target = image;
  return {std::move(image), std::move(target), BinaryMask(height, width, 1), caption};
}

GridOracle make_grid_oracle(int n_fg, int n_bg, int height, int width, std::uint64_t seed,
                            const std::string& caption_template) {
  if (n_fg < 1 || n_bg < 1) throw std::invalid_argument("grid needs N, M >= 1");
  Rng rng(seed);
  GridOracle g;
  for (int n = 0; n < n_fg; ++n) {
    g.fg_prompts.push_back("object" + std::to_string(n));
    const Ellipse shape = random_ellipse(rng, height, width, 0.18, 0.3);
    const Color col = saturated_color(rng, 0.1);
    RasterImage fg(height, width);
    Plane alpha(height, width);
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        alpha.at(i, j) = shape.contains(i + 0.5, j + 0.5) ? 1.0 : 0.0;
        for (int c = 0; c < 3; ++c) fg.set(i, j, c, col[c]);
      }
    }
    g.foregrounds.push_back(std::move(fg));
    g.alphas.push_back(std::move(alpha));
  }
  for (int m = 0; m < n_bg; ++m) {
    g.bg_prompts.push_back("place" + std::to_string(m));
    const Color top{uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
    const Color bottom{uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8)};
    RasterImage bg(height, width);
    for (int i = 0; i < height; ++i) {
      const double s = (i + 0.5) / height;
      for (int j = 0; j < width; ++j) {
        for (int c = 0; c < 3; ++c) bg.set(i, j, c, (1.0 - s) * top[c] + s * bottom[c]);
      }
    }
    g.backgrounds.push_back(std::move(bg));
  }
  for (int n = 0; n < n_fg; ++n) {
    for (int m = 0; m < n_bg; ++m) {
      RasterImage cell(height, width);
      for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
          const double a = g.alphas[n].at(i, j);
          for (int c = 0; c < 3; ++c) {
            cell.set(i, j, c, a * g.foregrounds[n].at(i, j, c) + (1.0 - a) * g.backgrounds[m].at(i, j, c));
          }
        }
      }
      g.targets.emplace(grid_caption(caption_template, g.fg_prompts[n], g.bg_prompts[m]), std::move(cell));
    }
  }
  return g;
}

std::string write_oracle_dataset(const std::string& dir, int count, int height, int width, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("dataset needs at least one sample");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "masks");
  fs::create_directories(fs::path(dir) / "targets");
  const fs::path manifest = fs::path(dir) / "manifest.jsonl";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write manifest " + manifest.string());
  for (int i = 0; i < count; ++i) {
    const std::string id = "scene" + std::to_string(i);
    const OracleScene scene = make_oracle_scene(height, width, derive_seed(seed, static_cast<std::uint64_t>(i)),
                                                "object " + std::to_string(i));
    write_rgb_png((fs::path(dir) / "images" / (id + ".png")).string(), scene.image);
    write_mask_png((fs::path(dir) / "masks" / (id + ".png")).string(), scene.ground_truth);
    write_rgb_png((fs::path(dir) / "targets" / (id + ".png")).string(), scene.target);
    const nlohmann::json entry = {{"image", "images/" + id + ".png"},
                                  {"caption", scene.caption},
                                  {"mask", "masks/" + id + ".png"},
                                  {"oracle_target", "targets/" + id + ".png"},
                                  {"class", i % 2 == 0 ? "round" : "oval"}};
    out << entry.dump() << "\n";
  }
  return manifest.string();
}

}  // namespace dreamseg
