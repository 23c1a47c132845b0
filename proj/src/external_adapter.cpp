#include <httplib.h>

#include <regex>

#include "dreamseg/score_model.hpp"
#include "dreamseg/wire.hpp"

namespace dreamseg {

using nlohmann::json;

struct ExternalLdmAdapter::Connection {
  explicit Connection(const std::string& base) : client(base) {}
  httplib::Client client;
};

ExternalLdmAdapter::ExternalLdmAdapter(std::string model_locator, std::string device,
                                       ExternalModelOptions options)
    : locator_(std::move(model_locator)),
      device_(std::move(device)),
      options_(options),
      schedule_(default_schedule(ScheduleKind::ExternalNative)) {
  static const std::regex url(R"(^http://[^/\s]+(:\d+)?/?$)");
  if (!std::regex_match(locator_, url)) {
    throw ModelLoadError("model locator '" + locator_ +
                         "' is not a bridge URL (expected http://host:port); serve the "
                         "checkpoint with tools/ldm_bridge.py and pass its URL");
  }
  std::string base = locator_;
  if (base.back() == '/') base.pop_back();
  connection_ = std::make_unique<Connection>(base);
  connection_->client.set_read_timeout(options_.timeout_seconds, 0);
  connection_->client.set_write_timeout(options_.timeout_seconds, 0);
  connection_->client.set_connection_timeout(10, 0);

  httplib::Params query{{"device", device_}};
  if (!options_.cache_dir.empty()) query.emplace("cache_dir", options_.cache_dir);
  auto res = connection_->client.Get("/info", query, httplib::Headers{});
  if (!res) {
    throw ModelLoadError("cannot reach model bridge at " + locator_ + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ModelLoadError("model bridge at " + locator_ + " failed to load: " + res->body);
  }
  const json info = json::parse(res->body);
  checkpoint_ = info.value("checkpoint", std::string("unknown"));
  downsample_ = info.value("downsample", 8);
  channels_ = info.value("channels", 4);
  if (downsample_ < 1 || channels_ < 1) throw ModelLoadError("model bridge reported bad latent geometry");
  if (info.contains("alphas_cumprod")) {
    schedule_ = NoiseSchedule::discrete(info.at("alphas_cumprod").get<std::vector<double>>());
  }
}

ExternalLdmAdapter::~ExternalLdmAdapter() = default;

std::string ExternalLdmAdapter::post(const std::string& path, const std::string& body) const {
  std::lock_guard lock(mutex_);
  auto res = connection_->client.Post(path, body, "application/json");
  if (!res) throw std::runtime_error("model bridge request " + path + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw std::runtime_error("model bridge request " + path + " returned " +
                             std::to_string(res->status) + ": " + res->body);
  }
  return res->body;
}

void ExternalLdmAdapter::check_geometry(const RasterImage& image) const {
  if (image.height() % downsample_ != 0 || image.width() % downsample_ != 0) {
    throw std::invalid_argument("image " + std::to_string(image.height()) + "x" +
                                std::to_string(image.width()) + " is not divisible by the encoder factor " +
                                std::to_string(downsample_));
  }
}

Latent ExternalLdmAdapter::encode_image(const RasterImage& image) const {
  check_geometry(image);
  const json req = {{"image", wire::encode(image)}, {"device", device_}};
  const json res = json::parse(post("/encode_image", req.dump()));
  Latent latent = wire::decode_latent(res.at("latent"), downsample_);
  if (latent.values.height != image.height() / downsample_ ||
      latent.values.width != image.width() / downsample_ || latent.values.channels != channels_) {
    throw std::runtime_error("model bridge returned a latent of unexpected shape");
  }
  return latent;
}

Tensor3 ExternalLdmAdapter::encode_image_vjp(const RasterImage& image, const Latent& cotangent) const {
  check_geometry(image);
  const json req = {{"image", wire::encode(image)}, {"cotangent", wire::encode(cotangent)}, {"device", device_}};
  const json res = json::parse(post("/encode_image_vjp", req.dump()));
  return wire::decode_pixel_grad(res.at("pixel_grad"), image.height(), image.width());
}

TextEmbedding ExternalLdmAdapter::encode_text(const std::string& caption) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = text_cache_.find(caption); it != text_cache_.end()) return it->second;
  }
  const json req = {{"caption", caption}, {"device", device_}};
  const json res = json::parse(post("/encode_text", req.dump()));
  TextEmbedding embedding = wire::decode_embedding(res.at("embedding"));
  std::lock_guard lock(mutex_);
  return text_cache_.emplace(caption, std::move(embedding)).first->second;
}

Latent ExternalLdmAdapter::predict_noise(const Latent& noisy, const TextEmbedding& text, double t) const {
  const json req = {{"latent", wire::encode(noisy)},
                    {"embedding", wire::encode(text)},
                    {"t", t},
                    {"guidance_scale", options_.guidance_scale},
                    {"device", device_}};
  const json res = json::parse(post("/predict_noise", req.dump()));
  Latent out = wire::decode_latent(res.at("noise"), downsample_);
  if (!out.values.same_shape(noisy.values)) {
    throw std::runtime_error("model bridge returned a noise prediction of unexpected shape");
  }
  return out;
}

std::size_t ExternalLdmAdapter::text_cache_size() const {
  std::lock_guard lock(mutex_);
  return text_cache_.size();
}

std::unique_ptr<ExternalLdmAdapter> external_ldm_adapter(const std::string& model_locator,
                                                         const std::string& device,
                                                         ExternalModelOptions options) {
  return std::make_unique<ExternalLdmAdapter>(model_locator, device, options);
}

}  // namespace dreamseg
