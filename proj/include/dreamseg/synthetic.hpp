#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// A generated segmentation problem with a known answer.
///
/// The image shows a saturated foreground shape over a cluttered, saturated
/// background; the oracle target for the caption is the same foreground
/// composited over flat gray. Only the foreground region of the image agrees
/// with the target, so the oracle score model rewards revealing exactly it.
struct OracleScene {
  RasterImage image;
  RasterImage target;
  BinaryMask ground_truth;
  std::string caption;
};

OracleScene make_oracle_scene(int height, int width, std::uint64_t seed,
                              const std::string& caption = "a bright object");

/// Flat-gray image whose oracle target is the image itself.
OracleScene make_identity_scene(int height, int width, std::uint64_t seed,
                                const std::string& caption = "the whole picture");

/// Ground truth for the composite-grid experiment: per-cell oracle targets
/// built from N foregrounds (color + alpha shape) and M backgrounds.
struct GridOracle {
  std::vector<std::string> fg_prompts;
  std::vector<std::string> bg_prompts;
  std::vector<RasterImage> foregrounds;
  std::vector<Plane> alphas;
  std::vector<RasterImage> backgrounds;
  std::map<std::string, RasterImage> targets;  // caption -> cell target
};

GridOracle make_grid_oracle(int n_fg, int n_bg, int height, int width, std::uint64_t seed,
                            const std::string& caption_template = "a {fg} by a {bg}");

/// Writes a manifest-formatted oracle dataset of `count` scenes under `dir`
/// (images, masks, oracle targets, manifest.jsonl). Returns the manifest path.
std::string write_oracle_dataset(const std::string& dir, int count, int height, int width,
                                 std::uint64_t seed);

}  // namespace dreamseg
