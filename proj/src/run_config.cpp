#include "dreamseg/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

namespace dreamseg {

using nlohmann::json;

RunConfig default_run_config(const std::string& backend, RunKind kind) {
  RunConfig c;
  c.backend = backend;
  if (backend == "oracle") {
    c.optim = kind == RunKind::Grid ? oracle_grid_preset() : oracle_preset();
  } else if (backend == "external") {
    c.optim = external_preset();
    c.schedule = ScheduleKind::ExternalNative;
  } else {
    throw ConfigError("unknown backend '" + backend + "' (expected oracle or external)");
  }
  return c;
}

namespace {

struct Field {
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T, typename M>
Field plain(M member) {
  return {[member](const RunConfig& c) { return json(std::invoke(member, c)); },
          [member](RunConfig& c, const json& v) { std::invoke(member, c) = v.get<T>(); }};
}

template <typename Get, typename Set>
Field custom(Get g, Set s) {
  return {g, s};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["backend"] = plain<std::string>(&RunConfig::backend);
    t["model"] = plain<std::string>(&RunConfig::model);
    t["device"] = plain<std::string>(&RunConfig::device);
    t["guidance_scale"] = plain<double>(&RunConfig::guidance_scale);
    t["threshold"] = plain<double>(&RunConfig::threshold);
    t["workers"] = plain<int>(&RunConfig::workers);
    t["schedule"] = custom([](const RunConfig& c) { return json(to_string(c.schedule)); },
                           [](RunConfig& c, const json& v) { c.schedule = parse_schedule_kind(v.get<std::string>()); });
    t["weighting"] = custom([](const RunConfig& c) { return json(to_string(c.weighting)); },
                            [](RunConfig& c, const json& v) { c.weighting = parse_weight_kind(v.get<std::string>()); });

    auto num = [&](auto accessor) {
      using V = std::remove_cvref_t<decltype(accessor(std::declval<OptimConfig&>()))>;
      return Field{[accessor](const RunConfig& c) { return json(accessor(const_cast<OptimConfig&>(c.optim))); },
                   [accessor](RunConfig& c, const json& v) { accessor(c.optim) = v.get<V>(); }};
    };
    t["iterations"] = num([](OptimConfig& c) -> int& { return c.iterations; });
    t["learning_rate"] = num([](OptimConfig& c) -> double& { return c.learning_rate; });
    t["n_b"] = num([](OptimConfig& c) -> int& { return c.n_b; });
    t["t_min"] = num([](OptimConfig& c) -> double& { return c.t_min; });
    t["t_max"] = num([](OptimConfig& c) -> double& { return c.t_max; });
    t["seed"] = num([](OptimConfig& c) -> std::uint64_t& { return c.seed; });
    t["loss.dream"] = num([](OptimConfig& c) -> double& { return c.weights.dream; });
    t["loss.gravity"] = num([](OptimConfig& c) -> double& { return c.weights.gravity; });
    t["loss.intersection"] = num([](OptimConfig& c) -> double& { return c.weights.intersection; });
    t["loss.intersection_enabled"] = num([](OptimConfig& c) -> bool& { return c.weights.intersection_enabled; });
    t["loss.normalize_gravity"] = num([](OptimConfig& c) -> bool& { return c.weights.normalize_gravity; });
    t["bilateral.kernel_size"] = num([](OptimConfig& c) -> int& { return c.bilateral.kernel_size; });
    t["bilateral.iterations"] = num([](OptimConfig& c) -> int& { return c.bilateral.iterations; });
    t["bilateral.sigma_spatial"] = num([](OptimConfig& c) -> double& { return c.bilateral.sigma_spatial; });
    t["bilateral.sigma_range"] = num([](OptimConfig& c) -> double& { return c.bilateral.sigma_range; });
    t["fit.max_iterations"] = num([](OptimConfig& c) -> int& { return c.fit.max_iterations; });
    t["fit.tolerance_rmse"] = num([](OptimConfig& c) -> double& { return c.fit.tolerance_rmse; });
    t["fit.learning_rate"] = num([](OptimConfig& c) -> double& { return c.fit.learning_rate; });
    t["field.n_freq"] = num([](OptimConfig& c) -> int& { return c.field.n_freq; });
    t["field.fourier_scale"] = num([](OptimConfig& c) -> double& { return c.field.fourier_scale; });
    t["field.hidden"] = num([](OptimConfig& c) -> std::array<int, 3>& { return c.field.hidden; });
    t["field.train_frequencies"] = num([](OptimConfig& c) -> bool& { return c.field.train_frequencies; });
    t["shared_network"] = num([](OptimConfig& c) -> bool& { return c.shared_network; });
    t["per_composite_noise"] = num([](OptimConfig& c) -> bool& { return c.per_composite_noise; });
    t["snapshot_every"] = num([](OptimConfig& c) -> int& { return c.snapshot_every; });
    t["task_mode"] = custom([](const RunConfig& c) { return json(to_string(c.optim.task_mode)); },
                            [](RunConfig& c, const json& v) { c.optim.task_mode = parse_task_mode(v.get<std::string>()); });
    t["bilateral.mode"] = custom(
        [](const RunConfig& c) { return json(to_string(c.optim.bilateral_mode)); },
        [](RunConfig& c, const json& v) { c.optim.bilateral_mode = parse_bilateral_mode(v.get<std::string>()); });
    t["representation"] = custom(
        [](const RunConfig& c) { return json(to_string(c.optim.representation)); },
        [](RunConfig& c, const json& v) { c.optim.representation = parse_representation(v.get<std::string>()); });
    t["latent_grad_mode"] = custom(
        [](const RunConfig& c) { return json(to_string(c.optim.latent_grad_mode)); },
        [](RunConfig& c, const json& v) { c.optim.latent_grad_mode = parse_latent_grad_mode(v.get<std::string>()); });
    return t;
  }();
  return table;
}

}  // namespace

json to_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(config);
  for (const auto& [name, v] : config.inputs) j["input." + name] = v;
  return j;
}

void apply_json(RunConfig& config, const json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : flat.items()) {
    if (key.rfind("input.", 0) == 0) {
      config.inputs[key.substr(6)] = value;
      continue;
    }
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second.set(config, value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

NoiseSchedule make_schedule(ScheduleKind kind, WeightKind weighting) {
  NoiseSchedule s = default_schedule(kind);
  s.set_weight_kind(weighting);
  return s;
}

std::unique_ptr<ScoreModel> make_score_model(const RunConfig& config, std::map<std::string, RasterImage> oracle_targets) {
  if (config.backend == "oracle") {
    return oracle_score_model(std::move(oracle_targets), make_schedule(config.schedule, config.weighting));
  }
  if (config.backend == "external") {
    if (config.model.empty()) throw ConfigError("external backend needs a model locator (--model)");
    ExternalModelOptions opts;
    opts.guidance_scale = config.guidance_scale;
    if (const char* cache = std::getenv(kModelCacheEnv)) opts.cache_dir = cache;
    return std::make_unique<ExternalLdmAdapter>(config.model, config.device, opts);
  }
  throw ConfigError("unknown backend '" + config.backend + "'");
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

void write_config_file(const std::filesystem::path& path, const RunConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << to_json(config).dump(2) << "\n";
}

}  // namespace dreamseg
