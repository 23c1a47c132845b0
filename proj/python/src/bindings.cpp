#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "dreamseg/compositing.hpp"
#include "dreamseg/eval.hpp"
#include "dreamseg/losses.hpp"
#include "dreamseg/optimizer.hpp"
#include "dreamseg/refine.hpp"
#include "dreamseg/run_config.hpp"
#include "dreamseg/synthetic.hpp"

namespace py = pybind11;
using namespace dreamseg;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

RasterImage to_image(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("image must have shape (H, W, 3)");
  Tensor3 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), 3);
  std::copy(a.data(), a.data() + a.size(), t.values.begin());
  return RasterImage(std::move(t));
}

Plane to_plane(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("mask must have shape (H, W)");
  Plane p(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), p.values.begin());
  return p;
}

AlphaMaskStack to_stack(const Array& a) {
  if (a.ndim() != 3) throw std::invalid_argument("masks must have shape (k, H, W)");
  AlphaMaskStack m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), m.alphas.begin());
  return m;
}

BinaryMask to_binary(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("binary mask must have shape (H, W)");
  BinaryMask m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  for (py::ssize_t i = 0; i < a.size(); ++i) m.values[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
  return m;
}

py::array_t<double> from_image(const RasterImage& img) {
  py::array_t<double> out({img.height(), img.width(), 3});
  std::copy(img.pixels().values.begin(), img.pixels().values.end(), out.mutable_data());
  return out;
}

py::array_t<double> from_plane(const Plane& p) {
  py::array_t<double> out({p.height, p.width});
  std::copy(p.values.begin(), p.values.end(), out.mutable_data());
  return out;
}

py::array_t<double> from_stack(const AlphaMaskStack& m) {
  py::array_t<double> out({m.k, m.height, m.width});
  std::copy(m.alphas.begin(), m.alphas.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> from_binary(const BinaryMask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

RunConfig resolve(const std::string& config_json, RunKind kind) {
  const json overrides = json::parse(config_json);
  const std::string backend = overrides.value("backend", std::string("oracle"));
  RunConfig cfg = default_run_config(backend, kind);
  apply_json(cfg, overrides);
  cfg.optim.validate();
  return cfg;
}

py::tuple run_segment(const Array& image, const std::vector<std::string>& prompts, const std::vector<Array>& targets,
                  const std::string& config_json) {
  const RunConfig cfg = resolve(config_json, RunKind::Segment);
  SegmentationTask task{to_image(image), prompts, {}};
  std::map<std::string, RasterImage> oracle;
  if (cfg.backend == "oracle") {
    if (targets.size() != prompts.size()) throw std::invalid_argument("the oracle backend needs one target per prompt");
    for (std::size_t i = 0; i < prompts.size(); ++i) oracle.emplace(prompts[i], to_image(targets[i]));
  }
  SegmentResult r;
  {
    py::gil_scoped_release release;
    const auto model = make_score_model(cfg, std::move(oracle));
    r = segment(task, *model, cfg.optim);
  }
  return py::make_tuple(from_stack(r.masks), trace_jsonl(r.trace));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Text-prompted segmentation by score distillation through alpha compositing.";

  py::register_exception<OptimizationAborted>(m, "OptimizationAborted", PyExc_RuntimeError);
  py::register_exception<UnknownCaption>(m, "UnknownCaption", PyExc_KeyError);
  py::register_exception<ModelLoadError>(m, "ModelLoadError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ManifestError>(m, "ManifestError", PyExc_ValueError);

  m.def("default_config", [](const std::string& backend, const std::string& kind) {
    return to_json(default_run_config(backend, kind == "grid" ? RunKind::Grid : RunKind::Segment)).dump();
  }, py::arg("backend") = "oracle", py::arg("kind") = "segment");

  m.def("segment", &run_segment, py::arg("image"), py::arg("prompts"), py::arg("oracle_targets"), py::arg("config_json"));

  m.def("make_oracle_scene", [](int size, std::uint64_t seed, const std::string& caption) {
    const OracleScene s = make_oracle_scene(size, size, seed, caption);
    return py::make_tuple(from_image(s.image), from_image(s.target), from_binary(s.ground_truth), s.caption);
  }, py::arg("size") = 64, py::arg("seed") = 0, py::arg("caption") = "a bright object");

  m.def("composite", [](const Array& image, const Array& mask, std::array<double, 3> color) {
    return from_image(composite(to_image(image), to_plane(mask), UniformBackground{color}));
  }, py::arg("image"), py::arg("mask"), py::arg("background"));

  m.def("gravity_loss", [](const Array& masks) { return gravity_loss(to_stack(masks)); });
  m.def("intersection_loss", [](const Array& masks) { return intersection_loss(to_stack(masks)); });

  m.def("cross_bilateral", [](const Array& mask, const Array& guide, int iterations, double sigma_range,
                              double sigma_spatial, int kernel_size) {
    BilateralConfig c{kernel_size, iterations, sigma_spatial, sigma_range};
    c.validate();
    return from_plane(cross_bilateral(to_plane(mask), to_image(guide), c));
  }, py::arg("mask"), py::arg("guide"), py::arg("iterations") = 40, py::arg("sigma_range") = 0.1,
     py::arg("sigma_spatial") = 1.0, py::arg("kernel_size") = 3);

  m.def("binarize", [](const Array& mask, double threshold) { return from_binary(binarize(to_plane(mask), threshold)); },
        py::arg("mask"), py::arg("threshold") = 0.5);
  m.def("iou", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& pred,
                  const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& gt) {
    return iou(to_binary(pred), to_binary(gt));
  });
  m.def("precision_at", &precision_at, py::arg("ious"), py::arg("thresholds") = kPrecThresholds);

  m.def("whole_image_baseline", [](const std::string& manifest) {
    return report_to_json(whole_image_baseline(load_manifest(manifest)));
  });
}
