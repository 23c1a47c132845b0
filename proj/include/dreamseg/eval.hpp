#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dreamseg/tensor.hpp"

namespace dreamseg {

/// entry >= threshold -> 1.
BinaryMask binarize(const Plane& mask, double threshold);

/// |pred & gt| / |pred | gt|, 1 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Fraction of samples with IoU strictly greater than each threshold.
std::map<double, double> precision_at(const std::vector<double>& ious,
                                      const std::vector<double>& thresholds);

inline const std::vector<double> kPrecThresholds = {0.1, 0.2, 0.3, 0.4, 0.5};

/// IoU restricted to the boundary bands of both masks. A pixel is in the
/// band when it is set and some pixel within `radius` (Chebyshev) is not.
double boundary_iou(const BinaryMask& pred, const BinaryMask& gt, int radius = 1);

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::vector<std::string> captions;
  std::vector<std::filesystem::path> masks;           // one per caption
  std::vector<std::filesystem::path> oracle_targets;  // empty or one per caption
  std::optional<std::string> label;
};

/// JSON-lines dataset description. Keys per line:
///   image, caption | captions, mask | masks, class (optional),
///   oracle_target | oracle_targets (optional), id (optional).
/// Paths are relative to the manifest's directory.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

/// Parses and validates: every file exists, masks are single-channel and
/// match the image resolution.
DatasetManifest load_manifest(const std::filesystem::path& path);

struct SampleInput {
  const ManifestEntry& entry;
  const RasterImage& image;
};

/// Returns one soft mask per caption of the entry.
using SegmentFn = std::function<std::vector<Plane>(const SampleInput&)>;

struct EvalConfig {
  double threshold = 0.5;
  std::vector<double> prec_thresholds = kPrecThresholds;
  int workers = 1;
  /// Called with every successful entry's soft masks (from worker threads).
  std::function<void(const ManifestEntry&, const std::vector<Plane>&)> sink;
};

struct SampleResult {
  std::string id;
  std::string caption;
  std::optional<std::string> label;
  double iou = 0.0;
  double runtime_ms = 0.0;
  std::optional<std::string> error;  // set when the sample failed
};

struct EvalReport {
  std::vector<SampleResult> samples;
  double miou = 0.0;
  std::map<double, double> prec_at;
  std::map<std::string, double> per_class;
  int failures = 0;
  double total_ms = 0.0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};

/// Segments every entry (fanning out over `workers` threads), scores each
/// caption's mask against its ground truth and aggregates. A failing entry
/// is recorded per caption with its error and excluded from the aggregates.
EvalReport evaluate(const DatasetManifest& manifest, const SegmentFn& segment_fn,
                    const EvalConfig& config = {});

/// Predicts the whole image for every caption.
EvalReport whole_image_baseline(const DatasetManifest& manifest, const EvalConfig& config = {});

/// Recomputes the aggregates from the per-sample results.
void aggregate(EvalReport& report, const std::vector<double>& prec_thresholds);

/// Metrics only (miou, prec_at.<tau>, per_class, failures, samples); wall
/// clock numbers go to the runtime file so reports are reproducible.
std::string report_to_json(const EvalReport& report);
std::string runtime_to_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);
void write_runtime(const std::filesystem::path& path, const EvalReport& report);

}  // namespace dreamseg
