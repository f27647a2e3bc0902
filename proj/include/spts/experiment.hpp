#pragma once

// End-to-end experiment pipelines driven by one JSON config file. Each command
// is a pure function of (config, master seed) and writes plot-ready CSV/JSON.

#include "spts/core.hpp"
#include "spts/dictionary.hpp"
#include "spts/frontend.hpp"
#include "spts/perception.hpp"
#include "spts/scenarios.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace spts::experiment {

inline constexpr const char* kCodeVersion = "0.1.0";

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CorpusSettings {
  std::size_t shape_variants = 12;  // jittered presses per shape
  std::vector<double> levels{1.0, 0.6};  // envelope levels of those presses
  std::size_t bounce_samples = 100;
};

struct DictionarySettings {
  std::string file = "dictionary.spd";  // relative paths resolve against output_dir
  std::size_t atoms = 100;
  std::size_t sparsity = 30;
  std::size_t iterations = 30;
  double amp_threshold = 0.1;
  double coherence_threshold = 0.95;
  double min_relative_improvement = 1e-4;
  CorpusSettings corpus;
};

struct ShapeSettings {
  double peak_pressure = 3e4;
  bool jitter = true;
  std::vector<std::string> kinds;  // empty = all 17 defaults
};

struct PressSettings {
  double rise = 0.005;
  double hold = 0.03;
  double release = 0.005;
};

struct BounceSettings {
  BounceSpec spec{0.001, 0.008, 5e4, 4.5, 4.5, 3.0, 1.5};
  double center_margin = 2.0;   // localization trials draw centers this far from the edge
  double contact_fraction = 0.1;  // frames scored only while truth peak >= this share of its maximum
};

struct PerceptionSettings {
  double support_threshold = 0.3;
  std::size_t vote_window = 20;
  double small_area_fraction = 0.4;
  std::size_t library_variants = 8;  // exemplars per label: the centered press plus jittered ones
};

struct AdaptSettings {
  std::string scene = "T";  // a shape label or "ball"
  std::vector<std::size_t> schedule{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100};
};

struct ExperimentConfig {
  std::uint32_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  std::size_t trials = 10;
  std::vector<std::size_t> m_sweep{13, 20, 25, 50, 100};
  bool allow_overcomplete = false;
  std::size_t jobs = 1;
  double noise_fraction = 0.01;  // output noise sigma as a share of the reference RMS of y

  GridGeometry geometry;
  CircuitParams circuit;
  AcquisitionConfig acquisition;
  DictionarySettings dictionary;
  ShapeSettings shapes;
  PressSettings press;
  BounceSettings bounce;
  PerceptionSettings perception;
  AdaptSettings adapt;

  /// Strict parse: unknown keys and wrong types raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  std::filesystem::path dictionary_path() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical config dump.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Results returned by the commands (also written to disk).

struct DictTrainResult {
  Dictionary dictionary;
  std::vector<KsvdSweep> log;
  std::size_t corpus_raw = 0;
  std::size_t corpus_kept = 0;
};

struct ClassifyRow {
  std::string object;
  std::size_t trial = 0;
  std::size_t m = 0;
  std::string predicted;
  bool correct = false;
  double frame_accuracy = 0.0;  // share of individual frames labeled correctly
  double support_accuracy = 0.0;
  std::string raster_predicted;
  bool raster_correct = false;
  double fps = 0.0;
  double time_to_first_correct = -1.0;  // seconds of acquisition until the running vote is right
};

struct ClassifySummary {
  std::size_t m = 0;
  double accuracy = 0.0;
  double frame_accuracy = 0.0;
  double raster_accuracy = 0.0;
  double fps = 0.0;
};

struct ClassifyResult {
  std::vector<ClassifyRow> rows;
  std::vector<ClassifySummary> summary;
};

struct SupportRow {
  std::string object;
  std::string size_class;  // "small" or "large"
  std::size_t trial = 0;
  std::size_t m = 0;
  SupportMetrics metrics;
  double raster_accuracy = 0.0;
};

struct SupportSummary {
  std::size_t m = 0;
  double accuracy = 0.0;
  double small_accuracy = 0.0;
  double large_accuracy = 0.0;
  double raster_accuracy = 0.0;
};

struct SupportResult {
  std::vector<SupportRow> rows;
  std::vector<SupportSummary> summary;
};

struct BounceSummary {
  std::size_t m = 0;
  std::size_t frames_in_contact = 0;
  double delta_pressure = 0.0;  // reconstructed frames, siemens
  double truth_delta_pressure = 0.0;
  std::vector<TracePoint> trace;  // reconstructed max intensity per frame
  std::vector<TracePoint> truth_trace;
};

struct BounceResult {
  std::vector<BounceSummary> summary;
};

struct LocalizeSummary {
  std::size_t m = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double max_error = 0.0;
  std::size_t frames = 0;
  std::size_t skipped = 0;  // reconstructions with no contact
};

struct LocalizeResult {
  std::vector<LocalizeSummary> summary;
};

struct AdaptStep {
  std::size_t m_used = 0;
  double residual = 0.0;
  SupportMetrics support;
  double relative_error = 0.0;
};

struct AdaptResult {
  std::vector<Reconstruction> reconstructions;
  std::vector<AdaptStep> steps;
};

DictTrainResult cmd_dict_train(const ExperimentConfig& config);
ClassifyResult cmd_classify_sweep(const ExperimentConfig& config);
SupportResult cmd_support_sweep(const ExperimentConfig& config);
BounceResult cmd_bounce(const ExperimentConfig& config);
LocalizeResult cmd_localize(const ExperimentConfig& config);
AdaptResult cmd_adapt(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Building blocks shared by the commands and the tests.

/// Synthetic training set of scaled conductance vectors x = -R_f * C.
TrainingCorpus build_training_corpus(const ExperimentConfig& config);

/// The configured shape specs (defaults filtered by `shapes.kinds`).
std::vector<ShapeSpec> configured_shapes(const ExperimentConfig& config);

/// Labeled exemplars for classification, drawn from their own seed stream.
ObjectLibrary build_object_library(const ExperimentConfig& config, const std::vector<ShapeSpec>& specs);

/// Output noise sigma: acquisition.noise_sigma plus noise_fraction times the
/// RMS of noiseless measurements of `frames` through `phi`.
double effective_noise_sigma(const ExperimentConfig& config, const std::vector<TactileFrame>& frames,
                             const SensingMatrix& phi);

/// Runs `task(i)` for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& task);

Dictionary load_dictionary(const ExperimentConfig& config);

}  // namespace spts::experiment
