#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "dreamseg/rng.hpp"
#include "dreamseg/tensor.hpp"

namespace dreamseg::testing {

inline RasterImage random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  RasterImage img(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int c = 0; c < 3; ++c) img.set(i, j, c, uniform(rng));
  return img;
}

inline RasterImage flat_image(int h, int w, double r, double g, double b) {
  RasterImage img(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      img.set(i, j, 0, r);
      img.set(i, j, 1, g);
      img.set(i, j, 2, b);
    }
  }
  return img;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dreamseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dreamseg::testing

#include <fstream>
#include <iterator>
#include <sys/wait.h>
#include <vector>

namespace dreamseg::testing {

/// Runs a shell command and returns its exit status (-1 if it did not exit).
inline int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative paths of files that differ (or exist on one side only), skipping
/// wall-clock outputs.
inline std::vector<std::string> tree_diff(const std::filesystem::path& a, const std::filesystem::path& b) {
  namespace fs = std::filesystem;
  auto timed = [](const fs::path& p) {
    const std::string n = p.filename().string();
    return n.find("timing") != std::string::npos || n == "runtime.json";
  };
  std::vector<std::string> out;
  auto walk = [&](const fs::path& root, const fs::path& other, bool compare) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file() || timed(e.path())) continue;
      const fs::path rel = fs::relative(e.path(), root);
      if (!fs::exists(other / rel)) {
        out.push_back(rel.string());
      } else if (compare && read_file(e.path()) != read_file(other / rel)) {
        out.push_back(rel.string());
      }
    }
  };
  walk(a, b, true);
  walk(b, a, false);
  return out;
}

}  // namespace dreamseg::testing
