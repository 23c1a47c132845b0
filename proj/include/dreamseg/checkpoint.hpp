#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dreamseg/implicit_mask.hpp"

namespace dreamseg {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mask parameters of one task: one or more parameter sets (one shared
/// network, one network per caption, or a pixel grid) at a raster size.
struct Checkpoint {
  int height = 0;
  int width = 0;
  std::vector<MaskParams> parts;
};

/// Writes `<stem>.json` (layout header) next to `<stem>.bin` (all parameter
/// values as little-endian float64, parts back to back in data() order).
void save_checkpoint(const std::filesystem::path& header_path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& header_path);

}  // namespace dreamseg
