#include "spts/experiment.hpp"

#include "spts/firmware.hpp"
#include "spts/recovery.hpp"
#include "spts/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

namespace spts::experiment {

namespace fs = std::filesystem;

// Stream identifiers for derive_seed; each random consumer gets its own.
namespace stream {
constexpr std::uint64_t kCorpus = 1000;
constexpr std::uint64_t kKsvd = 2000;
constexpr std::uint64_t kLibrary = 3000;
constexpr std::uint64_t kPressTrial = 100000;
constexpr std::uint64_t kPressNoise = 200000;
constexpr std::uint64_t kBounceNoise = 300000;
constexpr std::uint64_t kLocalizeTrial = 400000;
constexpr std::uint64_t kLocalizeNoise = 500000;
constexpr std::uint64_t kAdaptNoise = 600000;
}  // namespace stream

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_manifest(const ExperimentConfig& config, const std::string& command, const std::vector<std::string>& files) {
  nlohmann::json m;
  m["command"] = command;
  m["code_version"] = kCodeVersion;
  m["config_hash"] = config_hash(config);
  m["master_seed"] = config.master_seed;
  m["files"] = files;
  auto cfg = config.to_json();
  cfg.erase("output_dir");
  cfg.erase("jobs");
  m["config"] = cfg;
  open_out(config.output_dir / ("manifest_" + command + ".json")) << m.dump(2) << '\n';
}

SeedTable firmware_seeds(const ExperimentConfig& config) {
  return assign_seeds(config.master_seed, config.geometry.size());
}

Vector scaled(const TactileFrame& frame, const CircuitParams& circuit) {
  return -circuit.feedback_resistance * frame.conductance();
}

double rms_of(const std::vector<TactileFrame>& frames, const SensingMatrix& phi, const CircuitParams& circuit) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : frames) {
    const Vector y = -circuit.feedback_resistance * (phi.weights() * f.conductance());
    sum += y.squaredNorm();
    count += static_cast<std::size_t>(y.size());
  }
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

std::size_t tick_ceil(double t, double clock) { return static_cast<std::size_t>(std::ceil(t * clock - 1e-9)); }
std::size_t tick_floor(double t, double clock) { return static_cast<std::size_t>(std::floor(t * clock + 1e-9)); }

AcquisitionConfig with_noise(const AcquisitionConfig& base, double sigma) {
  AcquisitionConfig cfg = base;
  cfg.noise_sigma = sigma;
  return cfg;
}

double peak_intensity(double pressure, const CircuitParams& circuit) {
  return to_conductance(taxel_resistance(pressure, circuit)) - circuit.rest_conductance();
}

// One indentation trial: a (possibly jittered) shape pressed at a random point
// of the firmware sequence, acquired in frames of M samples during the hold.
struct PressFrames {
  std::vector<std::string> labels;
  std::vector<SupportMetrics> support;
};

struct PressTrialSetup {
  ShapeSpec spec;
  std::size_t start_tick = 0;
};

PressTrialSetup press_trial_setup(const ExperimentConfig& config, const ShapeSpec& base, std::size_t shape_index,
                                  std::size_t trial) {
  Rng rng(derive_seed(config.master_seed, stream::kPressTrial + shape_index * 1000 + trial));
  PressTrialSetup s;
  s.spec = config.shapes.jitter ? jitter_shape(base, config.geometry, rng) : base;
  s.start_tick = static_cast<std::size_t>(rng.below(1u << 20));
  return s;
}

PressFrames run_press_trial(const ExperimentConfig& config, const Dictionary& dict, const SeedTable& seeds,
                            const ObjectLibrary& library, const PressTrialSetup& setup, std::size_t m,
                            double sigma, std::uint64_t noise_seed) {
  const auto& cfg = config.acquisition;
  const double start = static_cast<double>(setup.start_tick) / cfg.clock_hz;
  auto event = std::make_shared<PressEvent>(setup.spec, config.geometry, config.press.rise, config.press.hold,
                                            config.press.release, start);
  const std::size_t first = tick_ceil(event->hold_begin(), cfg.clock_hz);
  const std::size_t last = tick_floor(event->hold_end(), cfg.clock_hz);
  const std::size_t available = last >= first ? (last - first + 1) / m : 0;
  const std::size_t frames = std::max<std::size_t>(1, std::min(config.perception.vote_window, available));

  const SensingMatrix phi = generate_sensing_matrix(seeds, frames * m, config.circuit.supply, first);
  const MeasurementVector y =
      acquire(as_scene(event, config.circuit), phi, config.circuit, with_noise(cfg, sigma), noise_seed);
  const TactileFrame truth = transduce(event->peak_map(), config.circuit);
  const double rest = config.circuit.rest_conductance();

  PressFrames out;
  for (std::size_t f = 0; f < frames; ++f) {
    const Reconstruction r = reconstruct(phi.slice(f * m, m), dict, y.slice(f * m, m), config.circuit, config.geometry);
    out.labels.push_back(classify(r.frame, library, rest));
    out.support.push_back(support_accuracy(r.frame, truth, config.perception.support_threshold, rest));
  }
  return out;
}

SupportMetrics mean_metrics(const std::vector<SupportMetrics>& all) {
  SupportMetrics m;
  for (const auto& s : all) {
    m.accuracy += s.accuracy;
    m.precision += s.precision;
    m.recall += s.recall;
    m.iou += s.iou;
    m.threshold_used += s.threshold_used;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, all.size()));
  m.accuracy /= n;
  m.precision /= n;
  m.recall /= n;
  m.iou /= n;
  m.threshold_used /= n;
  return m;
}

std::vector<TactileFrame> exemplars(const ObjectLibrary& library) {
  std::vector<TactileFrame> out;
  for (const auto& e : library.entries()) out.push_back(e.exemplar);
  return out;
}

}  // namespace

void parallel_for(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<ShapeSpec> configured_shapes(const ExperimentConfig& config) {
  auto all = default_shape_specs(config.geometry, config.shapes.peak_pressure);
  if (config.shapes.kinds.empty()) return all;
  std::vector<ShapeSpec> picked;
  for (const auto& name : config.shapes.kinds) {
    auto it = std::find_if(all.begin(), all.end(), [&](const ShapeSpec& s) { return s.label == name; });
    if (it == all.end()) throw ConfigError("unknown shape '" + name + "' in shapes.kinds");
    picked.push_back(*it);
  }
  return picked;
}

ObjectLibrary build_object_library(const ExperimentConfig& config, const std::vector<ShapeSpec>& specs) {
  ObjectLibrary library = shape_library(config.geometry, specs, config.circuit);
  Rng rng(derive_seed(config.master_seed, stream::kLibrary));
  for (std::size_t v = 1; v < config.perception.library_variants; ++v) {
    for (const auto& spec : specs) {
      library.add(spec.label, transduce(render_shape(jitter_shape(spec, config.geometry, rng), config.geometry),
                                        config.circuit));
    }
  }
  return library;
}

double effective_noise_sigma(const ExperimentConfig& config, const std::vector<TactileFrame>& frames,
                             const SensingMatrix& phi) {
  return config.acquisition.noise_sigma + config.noise_fraction * rms_of(frames, phi, config.circuit);
}

TrainingCorpus build_training_corpus(const ExperimentConfig& config) {
  const auto& g = config.geometry;
  Rng rng(derive_seed(config.master_seed, stream::kCorpus));
  TrainingCorpus corpus;
  for (const auto& base : configured_shapes(config)) {
    for (std::size_t v = 0; v < config.dictionary.corpus.shape_variants; ++v) {
      const ShapeSpec spec = v == 0 ? base : jitter_shape(base, g, rng);
      const PressureMap peak = render_shape(spec, g);
      for (double level : config.dictionary.corpus.levels) {
        const TactileFrame f = transduce(PressureMap(g, peak.pressure() * level), config.circuit);
        corpus.append(scaled(f, config.circuit), spec.label);
      }
    }
  }
  const double margin = config.bounce.center_margin;
  for (std::size_t b = 0; b < config.dictionary.corpus.bounce_samples; ++b) {
    BounceSpec spec = config.bounce.spec;
    spec.contact_start = 0.0;
    spec.center_row = rng.uniform(margin, static_cast<double>(g.rows - 1) - margin);
    spec.center_col = rng.uniform(margin, static_cast<double>(g.cols - 1) - margin);
    const double t = spec.contact_duration * rng.uniform(0.1, 0.9);
    const TactileFrame f = BounceEvent(spec, g).frame(t, config.circuit);
    corpus.append(scaled(f, config.circuit), "ball");
  }
  return corpus;
}

Dictionary load_dictionary(const ExperimentConfig& config) {
  const fs::path path = config.dictionary_path();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("dictionary file " + path.string() + " not found; run dict-train first");
  Dictionary dict = read_dictionary(in);
  if (dict.pixels() != config.geometry.size()) throw ConfigError("dictionary does not match the configured grid");
  return dict;
}

DictTrainResult cmd_dict_train(const ExperimentConfig& config) {
  ensure_dir(config.output_dir);
  const TrainingCorpus raw = build_training_corpus(config);
  const TrainingCorpus kept =
      preprocess(raw, config.dictionary.amp_threshold, config.dictionary.coherence_threshold);

  KsvdOptions opt;
  opt.atoms = config.dictionary.atoms;
  opt.sparsity = config.dictionary.sparsity;
  opt.iterations = config.dictionary.iterations;
  opt.seed = derive_seed(config.master_seed, stream::kKsvd);
  opt.min_relative_improvement = config.dictionary.min_relative_improvement;
  opt.corpus_id = fmt::format("synthetic-{}-{}x{}", config.master_seed, raw.size(), kept.size());

  DictTrainResult result;
  result.corpus_raw = raw.size();
  result.corpus_kept = kept.size();
  result.dictionary = ksvd(kept, opt, &result.log);

  const fs::path dict_path = config.dictionary_path();
  ensure_dir(dict_path.parent_path().empty() ? fs::path(".") : dict_path.parent_path());
  {
    auto out = open_out(dict_path, true);
    write_dictionary(out, result.dictionary);
  }
  {
    auto out = open_out(config.output_dir / "training_log.csv");
    out << "sweep,error_after_coding,error_after_update,replaced_atoms\n";
    for (std::size_t i = 0; i < result.log.size(); ++i) {
      const auto& s = result.log[i];
      out << i << ',' << num(s.error_after_coding) << ',' << num(s.error_after_update) << ',' << s.replaced_atoms
          << '\n';
    }
  }
  {
    auto out = open_out(config.output_dir / "atoms.csv");
    write_atom_csv(out, result.dictionary, config.geometry);
  }
  write_manifest(config, "dict-train", {dict_path.filename().string(), "training_log.csv", "atoms.csv"});
  return result;
}

ClassifyResult cmd_classify_sweep(const ExperimentConfig& config) {
  const Dictionary dict = load_dictionary(config);
  ensure_dir(config.output_dir);
  const auto specs = configured_shapes(config);
  const ObjectLibrary library = build_object_library(config, specs);
  const SeedTable seeds = firmware_seeds(config);
  const double sigma = effective_noise_sigma(
      config, exemplars(library), generate_sensing_matrix(seeds, 200, config.circuit.supply));
  const auto& ms = config.m_sweep;
  const double clock = config.acquisition.clock_hz;

  const std::size_t tasks = specs.size() * config.trials;
  std::vector<std::vector<ClassifyRow>> per_task(tasks);
  parallel_for(config.jobs, tasks, [&](std::size_t task) {
    const std::size_t s = task / config.trials;
    const std::size_t trial = task % config.trials;
    const PressTrialSetup setup = press_trial_setup(config, specs[s], s, trial);
    const TactileFrame truth = transduce(render_shape(setup.spec, config.geometry), config.circuit);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      const std::size_t m = ms[mi];
      const auto noise_seed = derive_seed(config.master_seed, stream::kPressNoise + task * 64 + mi);
      const PressFrames frames = run_press_trial(config, dict, seeds, library, setup, m, sigma, noise_seed);
      ClassifyRow row;
      row.object = specs[s].label;
      row.trial = trial;
      row.m = m;
      row.predicted = vote(frames.labels);
      row.correct = row.predicted == row.object;
      row.frame_accuracy =
          static_cast<double>(std::count(frames.labels.begin(), frames.labels.end(), row.object)) /
          static_cast<double>(frames.labels.size());
      row.support_accuracy = mean_metrics(frames.support).accuracy;
      const RasterEstimate raster = raster_baseline(truth, std::min(m, config.geometry.size()), config.acquisition);
      row.raster_predicted = classify(raster.frame, library, config.circuit.rest_conductance());
      row.raster_correct = row.raster_predicted == row.object;
      row.fps = frame_rate(m, config.acquisition);
      for (std::size_t k = 0; k < frames.labels.size(); ++k) {
        const std::vector<std::string> so_far(frames.labels.begin(), frames.labels.begin() + static_cast<long>(k) + 1);
        if (vote(so_far) == row.object) {
          row.time_to_first_correct = static_cast<double>((k + 1) * m) / clock;
          break;
        }
      }
      per_task[task].push_back(std::move(row));
    }
  });

  ClassifyResult result;
  for (auto& rows : per_task)
    for (auto& r : rows) result.rows.push_back(std::move(r));
  std::sort(result.rows.begin(), result.rows.end(), [&](const ClassifyRow& a, const ClassifyRow& b) {
    const auto ia = std::find(ms.begin(), ms.end(), a.m) - ms.begin();
    const auto ib = std::find(ms.begin(), ms.end(), b.m) - ms.begin();
    return std::tie(ia, a.object, a.trial) < std::tie(ib, b.object, b.trial);
  });

  for (std::size_t m : ms) {
    ClassifySummary s;
    s.m = m;
    s.fps = frame_rate(m, config.acquisition);
    std::size_t n = 0;
    for (const auto& r : result.rows) {
      if (r.m != m) continue;
      ++n;
      s.accuracy += r.correct ? 1.0 : 0.0;
      s.frame_accuracy += r.frame_accuracy;
      s.raster_accuracy += r.raster_correct ? 1.0 : 0.0;
    }
    s.accuracy /= static_cast<double>(n);
    s.frame_accuracy /= static_cast<double>(n);
    s.raster_accuracy /= static_cast<double>(n);
    result.summary.push_back(s);
  }

  {
    auto out = open_out(config.output_dir / "classify.csv");
    out << "object,trial,m,predicted,correct,frame_accuracy,support_accuracy,raster_predicted,raster_correct,fps,"
           "time_to_first_correct_s\n";
    for (const auto& r : result.rows) {
      out << r.object << ',' << r.trial << ',' << r.m << ',' << r.predicted << ',' << (r.correct ? 1 : 0) << ','
          << num(r.frame_accuracy) << ',' << num(r.support_accuracy) << ',' << r.raster_predicted << ','
          << (r.raster_correct ? 1 : 0) << ',' << num(r.fps) << ',' << num(r.time_to_first_correct) << '\n';
    }
  }
  {
    nlohmann::json j;
    j["noise_sigma"] = sigma;
    j["objects"] = specs.size();
    j["trials"] = config.trials;
    for (const auto& s : result.summary) {
      j["sweep"].push_back({{"m", s.m},
                            {"accuracy", s.accuracy},
                            {"frame_accuracy", s.frame_accuracy},
                            {"raster_accuracy", s.raster_accuracy},
                            {"fps", s.fps}});
    }
    open_out(config.output_dir / "classify_summary.json") << j.dump(2) << '\n';
  }
  write_manifest(config, "classify-sweep", {"classify.csv", "classify_summary.json"});
  return result;
}

SupportResult cmd_support_sweep(const ExperimentConfig& config) {
  const Dictionary dict = load_dictionary(config);
  ensure_dir(config.output_dir);
  const auto specs = configured_shapes(config);
  const ObjectLibrary library = build_object_library(config, specs);
  const SeedTable seeds = firmware_seeds(config);
  const double sigma = effective_noise_sigma(
      config, exemplars(library), generate_sensing_matrix(seeds, 200, config.circuit.supply));
  const auto& ms = config.m_sweep;
  const double rest = config.circuit.rest_conductance();

  std::vector<std::string> size_class;
  for (const auto& spec : specs) {
    const double area = render_shape(spec, config.geometry).pressure().sum() / spec.peak_pressure;
    size_class.push_back(area < config.perception.small_area_fraction * static_cast<double>(config.geometry.size())
                             ? "small"
                             : "large");
  }

  const std::size_t tasks = specs.size() * config.trials;
  std::vector<std::vector<SupportRow>> per_task(tasks);
  parallel_for(config.jobs, tasks, [&](std::size_t task) {
    const std::size_t s = task / config.trials;
    const std::size_t trial = task % config.trials;
    const PressTrialSetup setup = press_trial_setup(config, specs[s], s, trial);
    const TactileFrame truth = transduce(render_shape(setup.spec, config.geometry), config.circuit);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      const std::size_t m = ms[mi];
      const auto noise_seed = derive_seed(config.master_seed, stream::kPressNoise + task * 64 + mi);
      const PressFrames frames = run_press_trial(config, dict, seeds, library, setup, m, sigma, noise_seed);
      SupportRow row;
      row.object = specs[s].label;
      row.size_class = size_class[s];
      row.trial = trial;
      row.m = m;
      row.metrics = mean_metrics(frames.support);
      const RasterEstimate raster = raster_baseline(truth, std::min(m, config.geometry.size()), config.acquisition);
      row.raster_accuracy =
          support_accuracy(raster.frame, truth, config.perception.support_threshold, rest).accuracy;
      per_task[task].push_back(std::move(row));
    }
  });

  SupportResult result;
  for (auto& rows : per_task)
    for (auto& r : rows) result.rows.push_back(std::move(r));
  std::sort(result.rows.begin(), result.rows.end(), [&](const SupportRow& a, const SupportRow& b) {
    const auto ia = std::find(ms.begin(), ms.end(), a.m) - ms.begin();
    const auto ib = std::find(ms.begin(), ms.end(), b.m) - ms.begin();
    return std::tie(ia, a.object, a.trial) < std::tie(ib, b.object, b.trial);
  });

  for (std::size_t m : ms) {
    SupportSummary s;
    s.m = m;
    std::size_t n = 0, n_small = 0, n_large = 0;
    for (const auto& r : result.rows) {
      if (r.m != m) continue;
      ++n;
      s.accuracy += r.metrics.accuracy;
      s.raster_accuracy += r.raster_accuracy;
      if (r.size_class == "small") {
        ++n_small;
        s.small_accuracy += r.metrics.accuracy;
      } else {
        ++n_large;
        s.large_accuracy += r.metrics.accuracy;
      }
    }
    s.accuracy /= static_cast<double>(n);
    s.raster_accuracy /= static_cast<double>(n);
    s.small_accuracy = n_small ? s.small_accuracy / static_cast<double>(n_small) : 0.0;
    s.large_accuracy = n_large ? s.large_accuracy / static_cast<double>(n_large) : 0.0;
    result.summary.push_back(s);
  }

  {
    auto out = open_out(config.output_dir / "support.csv");
    out << "object,size_class,trial,m,accuracy,precision,recall,iou,raster_accuracy\n";
    for (const auto& r : result.rows) {
      out << r.object << ',' << r.size_class << ',' << r.trial << ',' << r.m << ',' << num(r.metrics.accuracy) << ','
          << num(r.metrics.precision) << ',' << num(r.metrics.recall) << ',' << num(r.metrics.iou) << ','
          << num(r.raster_accuracy) << '\n';
    }
  }
  {
    auto out = open_out(config.output_dir / "support_summary.csv");
    out << "m,accuracy,small_accuracy,large_accuracy,raster_accuracy\n";
    for (const auto& s : result.summary) {
      out << s.m << ',' << num(s.accuracy) << ',' << num(s.small_accuracy) << ',' << num(s.large_accuracy) << ','
          << num(s.raster_accuracy) << '\n';
    }
  }
  write_manifest(config, "support-sweep", {"support.csv", "support_summary.csv"});
  return result;
}

BounceResult cmd_bounce(const ExperimentConfig& config) {
  const Dictionary dict = load_dictionary(config);
  ensure_dir(config.output_dir);
  const auto& g = config.geometry;
  const double clock = config.acquisition.clock_hz;
  const double rest = config.circuit.rest_conductance();
  const SeedTable seeds = firmware_seeds(config);
  const BounceSpec& spec = config.bounce.spec;
  auto event = std::make_shared<BounceEvent>(spec, g);
  const double contact_end = spec.contact_start + spec.contact_duration;

  const TactileFrame apex = event->frame(spec.contact_start + spec.contact_duration / 2.0, config.circuit);
  const double sigma =
      effective_noise_sigma(config, {apex}, generate_sensing_matrix(seeds, 200, config.circuit.supply));
  // Record from t = 0 until as long after the contact as before it.
  const std::size_t total_ticks = tick_floor(contact_end + spec.contact_start, clock) + 1;

  BounceResult result;
  std::vector<std::string> files{"bounce.csv"};
  for (std::size_t mi = 0; mi < config.m_sweep.size(); ++mi) {
    const std::size_t m = config.m_sweep[mi];
    BounceSummary s;
    s.m = m;
    const std::size_t frames = total_ticks / m;
    std::vector<TactileFrame> recon_in, truth_in;
    std::vector<std::pair<TracePoint, TracePoint>> trace_rows;
    std::vector<bool> in_contact;
    if (frames > 0) {
      const SensingMatrix phi = generate_sensing_matrix(seeds, frames * m, config.circuit.supply);
      const MeasurementVector y =
          acquire(as_scene(event, config.circuit), phi, config.circuit, with_noise(config.acquisition, sigma),
                  derive_seed(config.master_seed, stream::kBounceNoise + mi));
      const Matrix phi_psi = phi.weights() * dict.atoms;
      for (std::size_t f = 0; f < frames; ++f) {
        const Reconstruction r = reconstruct_with_product(
            phi_psi.middleRows(static_cast<Eigen::Index>(f * m), static_cast<Eigen::Index>(m)), dict.atoms,
            y.slice(f * m, m), config.circuit, g);
        const double t0 = static_cast<double>(f * m) / clock;
        const double t1 = static_cast<double>((f + 1) * m - 1) / clock;
        const TactileFrame truth = event->frame((t0 + t1) / 2.0, config.circuit);
        const bool inside = t0 >= spec.contact_start - 1e-12 && t1 <= contact_end + 1e-12;
        if (inside) {
          recon_in.push_back(r.frame);
          truth_in.push_back(TactileFrame(g, truth.conductance(), t1));
        }
        in_contact.push_back(inside);
        trace_rows.push_back({{t1, intensity(r.frame, rest).maxCoeff()}, {t1, intensity(truth, rest).maxCoeff()}});
      }
    }
    s.frames_in_contact = recon_in.size();
    if (recon_in.size() >= 2) {
      s.delta_pressure = delta_pressure(recon_in, rest);
      s.truth_delta_pressure = delta_pressure(truth_in, rest);
    }
    s.trace = max_pressure_trace(recon_in, rest);
    s.truth_trace = max_pressure_trace(truth_in, rest);

    const std::string trace_name = fmt::format("bounce_trace_m{}.csv", m);
    auto out = open_out(config.output_dir / trace_name);
    out << "frame,t_s,in_contact,max_intensity,truth_max_intensity\n";
    for (std::size_t f = 0; f < trace_rows.size(); ++f) {
      out << f << ',' << num(trace_rows[f].first.t) << ',' << (in_contact[f] ? 1 : 0) << ','
          << num(trace_rows[f].first.max_intensity) << ',' << num(trace_rows[f].second.max_intensity) << '\n';
    }
    files.push_back(trace_name);
    result.summary.push_back(std::move(s));
  }

  auto out = open_out(config.output_dir / "bounce.csv");
  out << "m,fps,frame_time_s,frames_in_contact,delta_pressure,truth_delta_pressure,noise_sigma\n";
  for (const auto& s : result.summary) {
    out << s.m << ',' << num(frame_rate(s.m, config.acquisition)) << ',' << num(static_cast<double>(s.m) / clock)
        << ',' << s.frames_in_contact << ',' << num(s.delta_pressure) << ',' << num(s.truth_delta_pressure) << ','
        << num(sigma) << '\n';
  }
  write_manifest(config, "bounce", files);
  return result;
}

LocalizeResult cmd_localize(const ExperimentConfig& config) {
  const Dictionary dict = load_dictionary(config);
  ensure_dir(config.output_dir);
  const auto& g = config.geometry;
  const double clock = config.acquisition.clock_hz;
  const double rest = config.circuit.rest_conductance();
  const SeedTable seeds = firmware_seeds(config);
  const BounceSpec& base = config.bounce.spec;
  const double margin = config.bounce.center_margin;

  BounceSpec centered = base;
  centered.contact_start = 0.0;
  const TactileFrame apex = BounceEvent(centered, g).frame(base.contact_duration / 2.0, config.circuit);
  const double sigma =
      effective_noise_sigma(config, {apex}, generate_sensing_matrix(seeds, 200, config.circuit.supply));
  const double gate = config.bounce.contact_fraction * peak_intensity(base.peak_pressure, config.circuit);

  struct TrialErrors {
    std::vector<std::vector<double>> errors;  // per M
    std::vector<std::size_t> skipped;
  };
  const auto& ms = config.m_sweep;
  std::vector<TrialErrors> per_trial(config.trials);
  parallel_for(config.jobs, config.trials, [&](std::size_t trial) {
    Rng rng(derive_seed(config.master_seed, stream::kLocalizeTrial + trial));
    BounceSpec spec = base;
    spec.center_row = rng.uniform(margin, static_cast<double>(g.rows - 1) - margin);
    spec.center_col = rng.uniform(margin, static_cast<double>(g.cols - 1) - margin);
    const std::size_t offset = static_cast<std::size_t>(rng.below(1u << 20));
    spec.contact_start = static_cast<double>(offset) / clock;
    auto event = std::make_shared<BounceEvent>(spec, g);
    const GridPoint truth_center{spec.center_row, spec.center_col};
    const std::size_t first = tick_ceil(spec.contact_start, clock);
    const std::size_t last = tick_floor(spec.contact_start + spec.contact_duration, clock);

    TrialErrors te;
    te.errors.resize(ms.size());
    te.skipped.assign(ms.size(), 0);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      const std::size_t m = ms[mi];
      const std::size_t frames = (last - first + 1) / m;
      if (frames == 0) continue;
      const SensingMatrix phi = generate_sensing_matrix(seeds, frames * m, config.circuit.supply, first);
      const MeasurementVector y =
          acquire(as_scene(event, config.circuit), phi, config.circuit, with_noise(config.acquisition, sigma),
                  derive_seed(config.master_seed, stream::kLocalizeNoise + trial * 64 + mi));
      const Matrix phi_psi = phi.weights() * dict.atoms;
      for (std::size_t f = 0; f < frames; ++f) {
        const double t_mid = static_cast<double>(first + f * m) / clock + static_cast<double>(m - 1) / (2.0 * clock);
        if (intensity(event->frame(t_mid, config.circuit), rest).maxCoeff() < gate) continue;
        const Reconstruction r = reconstruct_with_product(
            phi_psi.middleRows(static_cast<Eigen::Index>(f * m), static_cast<Eigen::Index>(m)), dict.atoms,
            y.slice(f * m, m), config.circuit, g);
        try {
          te.errors[mi].push_back(localization_error(center_of_mass(r.frame, rest), truth_center));
        } catch (const NoContactError&) {
          ++te.skipped[mi];
        }
      }
    }
    per_trial[trial] = std::move(te);
  });

  LocalizeResult result;
  auto out = open_out(config.output_dir / "localize.csv");
  out << "trial,m,frames,skipped,mean_error_px\n";
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    LocalizeSummary s;
    s.m = ms[mi];
    std::vector<double> all;
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      const auto& e = per_trial[trial].errors[mi];
      all.insert(all.end(), e.begin(), e.end());
      s.skipped += per_trial[trial].skipped[mi];
      const double mean = e.empty() ? 0.0 : std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
      out << trial << ',' << s.m << ',' << e.size() << ',' << per_trial[trial].skipped[mi] << ',' << num(mean) << '\n';
    }
    s.frames = all.size();
    if (!all.empty()) {
      s.mean_error = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
      double var = 0.0;
      for (double e : all) var += (e - s.mean_error) * (e - s.mean_error);
      s.std_error = std::sqrt(var / static_cast<double>(all.size()));
      s.max_error = *std::max_element(all.begin(), all.end());
    }
    result.summary.push_back(s);
  }
  auto sum = open_out(config.output_dir / "localize_summary.csv");
  sum << "m,mean_error_px,std_error_px,max_error_px,frames,skipped\n";
  for (const auto& s : result.summary) {
    sum << s.m << ',' << num(s.mean_error) << ',' << num(s.std_error) << ',' << num(s.max_error) << ',' << s.frames
        << ',' << s.skipped << '\n';
  }
  write_manifest(config, "localize", {"localize.csv", "localize_summary.csv"});
  return result;
}

AdaptResult cmd_adapt(const ExperimentConfig& config) {
  const Dictionary dict = load_dictionary(config);
  ensure_dir(config.output_dir);
  const auto& g = config.geometry;
  const auto& schedule = config.adapt.schedule;
  if (schedule.back() > g.size() && !config.allow_overcomplete) {
    throw ConfigError("adapt.schedule exceeds N; set allow_overcomplete");
  }
  const SeedTable seeds = firmware_seeds(config);
  const double rest = config.circuit.rest_conductance();

  TactileFrame truth = TactileFrame::uniform(g, rest);
  if (config.adapt.scene == "ball") {
    BounceSpec spec = config.bounce.spec;
    truth = BounceEvent(spec, g).frame(spec.contact_start + spec.contact_duration / 2.0, config.circuit);
  } else {
    const auto specs = default_shape_specs(g, config.shapes.peak_pressure);
    auto it = std::find_if(specs.begin(), specs.end(), [&](const ShapeSpec& s) { return s.label == config.adapt.scene; });
    if (it == specs.end()) throw ConfigError("adapt.scene must be a shape label or 'ball'");
    truth = transduce(render_shape(*it, g), config.circuit);
  }

  const SensingMatrix phi = generate_sensing_matrix(seeds, schedule.back(), config.circuit.supply);
  const double sigma = effective_noise_sigma(config, {truth}, phi);
  const MeasurementVector y = acquire(static_scene(truth), phi, config.circuit, with_noise(config.acquisition, sigma),
                                      derive_seed(config.master_seed, stream::kAdaptNoise));

  AdaptResult result;
  result.reconstructions = adaptive_reconstruct(phi, dict.atoms, y, schedule, config.circuit, g);
  for (const auto& r : result.reconstructions) {
    AdaptStep step;
    step.m_used = r.m_used;
    step.residual = r.residual_norm;
    step.support = support_accuracy(r.frame, truth, config.perception.support_threshold, rest);
    step.relative_error = (r.frame.conductance() - truth.conductance()).norm() / truth.conductance().norm();
    result.steps.push_back(step);
  }

  {
    auto out = open_out(config.output_dir / "adapt_frames.jsonl");
    for (const auto& r : result.reconstructions) out << reconstruction_to_json_line(r) << '\n';
  }
  {
    auto out = open_out(config.output_dir / "adapt_truth.jsonl");
    out << frame_to_json_line(truth) << '\n';
  }
  {
    auto out = open_out(config.output_dir / "adapt.csv");
    out << "m_used,acquisition_time_s,residual,support_accuracy,support_iou,relative_error\n";
    for (const auto& s : result.steps) {
      out << s.m_used << ',' << num(static_cast<double>(s.m_used) / config.acquisition.clock_hz) << ','
          << num(s.residual) << ',' << num(s.support.accuracy) << ',' << num(s.support.iou) << ','
          << num(s.relative_error) << '\n';
    }
  }
  write_manifest(config, "adapt", {"adapt_frames.jsonl", "adapt_truth.jsonl", "adapt.csv"});
  return result;
}

}  // namespace spts::experiment
