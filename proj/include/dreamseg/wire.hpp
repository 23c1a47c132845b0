#pragma once

// JSON encodings shared by the external-model adapter and bridge servers.
//
//   image:     {"height": H, "width": W, "pixels": [H*W*3 floats, row-major RGB in [0,1]]}
//   latent:    {"height": h, "width": w, "channels": C, "values": [h*w*C floats, row-major]}
//   embedding: {"caption": str, "tokens": n, "dim": d, "values": [n*d floats]}

#include <json.hpp>

#include "dreamseg/score_model.hpp"

namespace dreamseg::wire {

nlohmann::json encode(const RasterImage& image);
nlohmann::json encode(const Latent& latent);
nlohmann::json encode(const TextEmbedding& embedding);

RasterImage decode_image(const nlohmann::json& j);
Latent decode_latent(const nlohmann::json& j, int downsample);
Tensor3 decode_pixel_grad(const nlohmann::json& j, int height, int width);
TextEmbedding decode_embedding(const nlohmann::json& j);

}  // namespace dreamseg::wire
