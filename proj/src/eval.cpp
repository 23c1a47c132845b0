#include "dreamseg/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "dreamseg/image_io.hpp"

namespace dreamseg {

namespace fs = std::filesystem;
using nlohmann::json;

BinaryMask binarize(const Plane& mask, double threshold) {
  BinaryMask out(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.values.size(); ++i) out.values[i] = mask.values[i] >= threshold ? 1 : 0;
  return out;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw std::invalid_argument("iou: mask shapes differ (" + std::to_string(pred.height) + "x" +
                                std::to_string(pred.width) + " vs " + std::to_string(gt.height) + "x" +
                                std::to_string(gt.width) + ")");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool a = pred.values[i] != 0;
    const bool b = gt.values[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::map<double, double> precision_at(const std::vector<double>& ious, const std::vector<double>& thresholds) {
  if (ious.empty()) throw std::invalid_argument("precision_at: no IoU values");
  std::map<double, double> out;
  for (double tau : thresholds) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("precision_at: thresholds must lie in (0,1)");
    const auto hits = std::count_if(ious.begin(), ious.end(), [tau](double v) { return v > tau; });
    out[tau] = static_cast<double>(hits) / static_cast<double>(ious.size());
  }
  return out;
}

namespace {

BinaryMask boundary_band(const BinaryMask& m, int radius) {
  BinaryMask band(m.height, m.width);
  for (int i = 0; i < m.height; ++i) {
    for (int j = 0; j < m.width; ++j) {
      if (!m.at(i, j)) continue;
      bool edge = false;
      for (int di = -radius; di <= radius && !edge; ++di) {
        for (int dj = -radius; dj <= radius; ++dj) {
          const int y = i + di;
          const int x = j + dj;
          if (y < 0 || y >= m.height || x < 0 || x >= m.width) continue;
          if (!m.at(y, x)) {
            edge = true;
            break;
          }
        }
      }
      band.at(i, j) = edge ? 1 : 0;
    }
  }
  return band;
}

}  // namespace

double boundary_iou(const BinaryMask& pred, const BinaryMask& gt, int radius) {
  if (radius < 1) throw std::invalid_argument("boundary_iou: radius must be >= 1");
  return iou(boundary_band(pred, radius), boundary_band(gt, radius));
}

namespace {

std::vector<std::string> string_or_list(const json& line, const char* one, const char* many) {
  std::vector<std::string> out;
  if (line.contains(many)) {
    for (const auto& v : line.at(many)) out.push_back(v.get<std::string>());
  } else if (line.contains(one)) {
    out.push_back(line.at(one).get<std::string>());
  }
  return out;
}

void require_file(const fs::path& p, int line_no) {
  if (!fs::is_regular_file(p)) {
    throw ManifestError("manifest line " + std::to_string(line_no) + ": missing file " + p.string());
  }
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json line;
    try {
      line = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      ManifestEntry e;
      e.image = m.root / line.at("image").get<std::string>();
      e.id = line.value("id", fs::path(line.at("image").get<std::string>()).stem().string());
      e.captions = string_or_list(line, "caption", "captions");
      for (const auto& s : string_or_list(line, "mask", "masks")) e.masks.push_back(m.root / s);
      for (const auto& s : string_or_list(line, "oracle_target", "oracle_targets")) e.oracle_targets.push_back(m.root / s);
      if (line.contains("class") && !line.at("class").is_null()) e.label = line.at("class").get<std::string>();

      if (e.captions.empty()) throw ManifestError("entry has no caption");
      for (const auto& c : e.captions) {
        if (c.empty()) throw ManifestError("empty caption");
      }
      if (e.masks.size() != e.captions.size()) throw ManifestError("needs one mask per caption");
      if (!e.oracle_targets.empty() && e.oracle_targets.size() != e.captions.size()) {
        throw ManifestError("needs one oracle target per caption");
      }
      require_file(e.image, line_no);
      const PngInfo img = probe_png(e.image.string());
      for (const auto& mp : e.masks) {
        require_file(mp, line_no);
        const PngInfo mi = probe_png(mp.string());
        if (mi.channels != 1) throw ManifestError("mask " + mp.string() + " is not single-channel");
        if (mi.height != img.height || mi.width != img.width) {
          throw ManifestError("mask " + mp.string() + " does not match the image resolution");
        }
      }
      for (const auto& tp : e.oracle_targets) require_file(tp, line_no);
      m.entries.push_back(std::move(e));
    } catch (const ManifestError& err) {
      const std::string msg = err.what();
      if (msg.rfind("manifest line", 0) == 0) throw;
      throw ManifestError("manifest line " + std::to_string(line_no) + ": " + msg);
    } catch (const json::exception& err) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": " + err.what());
    } catch (const ImageIoError& err) {
      throw ManifestError("manifest line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (m.entries.empty()) throw ManifestError("manifest " + path.string() + " has no entries");
  return m;
}

namespace {

std::vector<SampleResult> run_entry(const ManifestEntry& e, const SegmentFn& fn, const EvalConfig& config) {
  std::vector<SampleResult> out;
  for (const auto& c : e.captions) out.push_back({e.id, c, e.label, 0.0, 0.0, std::nullopt});
  const auto start = std::chrono::steady_clock::now();
  try {
    const RasterImage image = read_rgb_png(e.image.string());
    const std::vector<Plane> masks = fn(SampleInput{e, image});
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (masks.size() != e.captions.size()) {
      throw std::runtime_error("segmenter returned " + std::to_string(masks.size()) + " masks for " +
                               std::to_string(e.captions.size()) + " captions");
    }
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const BinaryMask gt = read_mask_png(e.masks[i].string());
      out[i].iou = iou(binarize(masks[i], config.threshold), gt);
      out[i].runtime_ms = ms / static_cast<double>(masks.size());
    }
    if (config.sink) config.sink(e, masks);
  } catch (const std::exception& err) {
    for (auto& r : out) {
      r.iou = 0.0;
      r.error = err.what();
    }
  }
  return out;
}

std::string threshold_key(double tau) {
  std::ostringstream os;
  os << "prec_at." << tau;
  return os.str();
}

}  // namespace

void aggregate(EvalReport& report, const std::vector<double>& prec_thresholds) {
  std::vector<double> ious;
  std::map<std::string, std::pair<double, int>> classes;
  report.failures = 0;
  report.total_ms = 0.0;
  report.max_ms = 0.0;
  for (const auto& s : report.samples) {
    if (s.error) {
      ++report.failures;
      continue;
    }
    ious.push_back(s.iou);
    report.total_ms += s.runtime_ms;
    report.max_ms = std::max(report.max_ms, s.runtime_ms);
    if (s.label) {
      auto& acc = classes[*s.label];
      acc.first += s.iou;
      acc.second += 1;
    }
  }
  report.per_class.clear();
  for (const auto& [name, acc] : classes) report.per_class[name] = acc.first / acc.second;
  if (ious.empty()) {
    // nothing scored: aggregates stay at zero, failures says why
    report.miou = 0.0;
    report.mean_ms = 0.0;
    report.prec_at.clear();
    for (double tau : prec_thresholds) report.prec_at[tau] = 0.0;
    return;
  }
  double sum = 0.0;
  for (double v : ious) sum += v;
  report.miou = sum / static_cast<double>(ious.size());
  report.mean_ms = report.total_ms / static_cast<double>(ious.size());
  report.prec_at = precision_at(ious, prec_thresholds);
}

EvalReport evaluate(const DatasetManifest& manifest, const SegmentFn& segment_fn, const EvalConfig& config) {
  if (manifest.entries.empty()) throw std::invalid_argument("evaluate: manifest has no entries");
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    throw std::invalid_argument("evaluate: threshold must lie in (0,1)");
  }
  const std::size_t n = manifest.entries.size();
  std::vector<std::vector<SampleResult>> per_entry(n);
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) per_entry[i] = run_entry(manifest.entries[i], segment_fn, config);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          per_entry[i] = run_entry(manifest.entries[i], segment_fn, config);
        }
      });
    }
  }
  EvalReport report;
  for (auto& v : per_entry) {
    for (auto& s : v) report.samples.push_back(std::move(s));
  }
  aggregate(report, config.prec_thresholds);
  return report;
}

EvalReport whole_image_baseline(const DatasetManifest& manifest, const EvalConfig& config) {
  return evaluate(manifest, [](const SampleInput& in) {
    return std::vector<Plane>(in.entry.captions.size(), Plane(in.image.height(), in.image.width(), 1.0));
  }, config);
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["miou"] = report.miou;
  for (const auto& [tau, v] : report.prec_at) j[threshold_key(tau)] = v;
  j["per_class"] = json::object();
  for (const auto& [name, v] : report.per_class) j["per_class"][name] = v;
  j["failures"] = report.failures;
  json samples = json::array();
  for (const auto& s : report.samples) {
    json o = {{"id", s.id}, {"caption", s.caption}, {"iou", s.iou}};
    o["class"] = s.label ? json(*s.label) : json(nullptr);
    if (s.error) o["error"] = *s.error;
    samples.push_back(std::move(o));
  }
  j["samples"] = std::move(samples);
  return j.dump(2);
}

std::string runtime_to_json(const EvalReport& report) {
  json j = {{"total_ms", report.total_ms}, {"mean_ms", report.mean_ms}, {"max_ms", report.max_ms}};
  json samples = json::array();
  for (const auto& s : report.samples) samples.push_back({{"id", s.id}, {"caption", s.caption}, {"runtime_ms", s.runtime_ms}});
  j["samples"] = std::move(samples);
  return j.dump(2);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << "\n";
}

}  // namespace

void write_report(const fs::path& path, const EvalReport& report) { write_text(path, report_to_json(report)); }

void write_runtime(const fs::path& path, const EvalReport& report) { write_text(path, runtime_to_json(report)); }

}  // namespace dreamseg
