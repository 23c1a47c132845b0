#include "dreamseg/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace dreamseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "dreamseg-params";
constexpr int kVersion = 1;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace

void save_checkpoint(const fs::path& header_path, const Checkpoint& ck) {
  fs::path blob_path = header_path;
  blob_path.replace_extension(".bin");
  json header = {{"format", kFormat}, {"version", kVersion}, {"dtype", "float64"},
                 {"byte_order", "little"}, {"blob", blob_path.filename().string()},
                 {"height", ck.height}, {"width", ck.width}};
  json parts = json::array();
  std::size_t offset = 0;
  for (const auto& part : ck.parts) {
    json p;
    if (const auto* f = std::get_if<FourierMaskParams>(&part)) {
      const auto& c = f->config();
      p = {{"kind", "fourier"}, {"k", f->k()}, {"n_freq", c.n_freq}, {"fourier_scale", c.fourier_scale},
           {"hidden", c.hidden}, {"train_frequencies", c.train_frequencies}, {"seed", f->seed()}};
    } else {
      const auto& px = std::get<PixelMaskParams>(part);
      p = {{"kind", "pixel"}, {"k", px.k()}, {"height", px.height()}, {"width", px.width()}};
    }
    const std::size_t count = param_data(part).size();
    p["offset"] = offset;
    p["count"] = count;
    offset += count;
    parts.push_back(std::move(p));
  }
  header["parts"] = std::move(parts);
  header["total"] = offset;

  if (header_path.has_parent_path()) fs::create_directories(header_path.parent_path());
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw CheckpointError("cannot write " + blob_path.string());
  for (const auto& part : ck.parts) {
    for (double v : param_data(part)) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
      blob.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  if (!blob) throw CheckpointError("failed writing " + blob_path.string());
  std::ofstream out(header_path);
  if (!out) throw CheckpointError("cannot write " + header_path.string());
  out << header.dump(2) << "\n";
}

Checkpoint load_checkpoint(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw CheckpointError("cannot open " + header_path.string());
  Checkpoint ck;
  try {
    const json header = json::parse(in);
    if (header.at("format") != kFormat) throw CheckpointError("not a parameter checkpoint: " + header_path.string());
    if (header.at("version").get<int>() != kVersion) throw CheckpointError("unsupported checkpoint version");
    if (header.at("dtype") != "float64" || header.at("byte_order") != "little") {
      throw CheckpointError("unsupported blob encoding");
    }
    ck.height = header.at("height").get<int>();
    ck.width = header.at("width").get<int>();
    const fs::path blob_path = header_path.parent_path() / header.at("blob").get<std::string>();
    const std::size_t total = header.at("total").get<std::size_t>();
    if (fs::file_size(blob_path) != total * sizeof(double)) {
      throw CheckpointError("blob " + blob_path.string() + " has the wrong size");
    }
    std::ifstream blob(blob_path, std::ios::binary);
    std::vector<double> values(total);
    for (double& v : values) {
      std::uint64_t bits = 0;
      blob.read(reinterpret_cast<char*>(&bits), sizeof bits);
      v = std::bit_cast<double>(to_little(bits));
    }
    if (!blob) throw CheckpointError("failed reading " + blob_path.string());

    for (const auto& p : header.at("parts")) {
      const std::size_t offset = p.at("offset").get<std::size_t>();
      const std::size_t count = p.at("count").get<std::size_t>();
      if (offset + count > total) throw CheckpointError("part extends past the blob");
      std::vector<double> slice(values.begin() + static_cast<std::ptrdiff_t>(offset),
                                values.begin() + static_cast<std::ptrdiff_t>(offset + count));
      const int k = p.at("k").get<int>();
      if (p.at("kind") == "fourier") {
        FieldConfig c;
        c.n_freq = p.at("n_freq").get<int>();
        c.fourier_scale = p.at("fourier_scale").get<double>();
        c.hidden = p.at("hidden").get<std::array<int, 3>>();
        c.train_frequencies = p.at("train_frequencies").get<bool>();
        ck.parts.emplace_back(FourierMaskParams::from_data(k, c, p.at("seed").get<std::uint64_t>(), std::move(slice)));
      } else if (p.at("kind") == "pixel") {
        PixelMaskParams px(k, p.at("height").get<int>(), p.at("width").get<int>());
        if (px.parameter_count() != count) throw CheckpointError("pixel part size mismatch");
        std::copy(slice.begin(), slice.end(), px.data().begin());
        ck.parts.emplace_back(std::move(px));
      } else {
        throw CheckpointError("unknown part kind " + p.at("kind").dump());
      }
    }
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint header " + header_path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  return ck;
}

}  // namespace dreamseg
