#include "dreamseg/wire.hpp"

#include <stdexcept>

namespace dreamseg::wire {

using nlohmann::json;

json encode(const RasterImage& image) {
  return {{"height", image.height()}, {"width", image.width()}, {"pixels", image.pixels().values}};
}

json encode(const Latent& latent) {
  return {{"height", latent.values.height},
          {"width", latent.values.width},
          {"channels", latent.values.channels},
          {"values", latent.values.values}};
}

json encode(const TextEmbedding& embedding) {
  return {{"caption", embedding.caption},
          {"tokens", embedding.tokens},
          {"dim", embedding.dim},
          {"values", embedding.values}};
}

RasterImage decode_image(const json& j) {
  Tensor3 t(j.at("height").get<int>(), j.at("width").get<int>(), 3);
  t.values = j.at("pixels").get<std::vector<double>>();
  return RasterImage(std::move(t));
}

Latent decode_latent(const json& j, int downsample) {
  Latent out{Tensor3(j.at("height").get<int>(), j.at("width").get<int>(), j.at("channels").get<int>()),
             downsample};
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != out.values.size()) throw std::runtime_error("latent payload has wrong length");
  out.values.values = std::move(values);
  return out;
}

Tensor3 decode_pixel_grad(const json& j, int height, int width) {
  Tensor3 out(height, width, 3);
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != out.size()) throw std::runtime_error("pixel gradient payload has wrong length");
  out.values = std::move(values);
  return out;
}

TextEmbedding decode_embedding(const json& j) {
  TextEmbedding e;
  e.caption = j.at("caption").get<std::string>();
  e.tokens = j.at("tokens").get<int>();
  e.dim = j.at("dim").get<int>();
  e.values = j.at("values").get<std::vector<double>>();
  if (e.tokens < 1 || e.values.size() != static_cast<std::size_t>(e.tokens) * e.dim) {
    throw std::runtime_error("embedding payload is malformed");
  }
  return e;
}

}  // namespace dreamseg::wire
