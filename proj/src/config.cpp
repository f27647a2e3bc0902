#include "spts/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spts::experiment {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  /// Nested object, or null json if absent.
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where(key.c_str()) + "'");
    }
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "" : path_;
    if (key) p += (p.empty() ? "" : ".") + std::string(key);
    return p.empty() ? "<root>" : p;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void with_child(Section& parent, const char* key, const std::string& path, Fn&& fn) {
  if (const json* c = parent.child(key)) {
    Section s(*c, path);
    fn(s);
    s.finish();
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("master_seed", c.master_seed);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;
  root.get("trials", c.trials);
  root.get("m_sweep", c.m_sweep);
  root.get("allow_overcomplete", c.allow_overcomplete);
  root.get("jobs", c.jobs);
  root.get("noise_fraction", c.noise_fraction);

  with_child(root, "geometry", "geometry", [&](Section& s) {
    s.get("rows", c.geometry.rows);
    s.get("cols", c.geometry.cols);
    s.get("pitch", c.geometry.pitch);
  });
  with_child(root, "circuit", "circuit", [&](Section& s) {
    s.get("feedback_resistance", c.circuit.feedback_resistance);
    s.get("supply", c.circuit.supply);
    s.get("rest_resistance", c.circuit.rest_resistance);
    s.get("min_resistance", c.circuit.min_resistance);
    s.get("pressure_scale", c.circuit.pressure_scale);
  });
  with_child(root, "acquisition", "acquisition", [&](Section& s) {
    s.get("clock_hz", c.acquisition.clock_hz);
    s.get("adc_bits", c.acquisition.adc_bits);
    s.get("adc_range", c.acquisition.adc_range);
    s.get("noise_sigma", c.acquisition.noise_sigma);
    s.get("saturation", c.acquisition.saturation);
  });
  with_child(root, "dictionary", "dictionary", [&](Section& s) {
    s.get("file", c.dictionary.file);
    s.get("atoms", c.dictionary.atoms);
    s.get("sparsity", c.dictionary.sparsity);
    s.get("iterations", c.dictionary.iterations);
    s.get("amp_threshold", c.dictionary.amp_threshold);
    s.get("coherence_threshold", c.dictionary.coherence_threshold);
    s.get("min_relative_improvement", c.dictionary.min_relative_improvement);
    with_child(s, "corpus", "dictionary.corpus", [&](Section& k) {
      k.get("shape_variants", c.dictionary.corpus.shape_variants);
      k.get("levels", c.dictionary.corpus.levels);
      k.get("bounce_samples", c.dictionary.corpus.bounce_samples);
    });
  });
  with_child(root, "shapes", "shapes", [&](Section& s) {
    s.get("peak_pressure", c.shapes.peak_pressure);
    s.get("jitter", c.shapes.jitter);
    s.get("kinds", c.shapes.kinds);
  });
  with_child(root, "press", "press", [&](Section& s) {
    s.get("rise", c.press.rise);
    s.get("hold", c.press.hold);
    s.get("release", c.press.release);
  });
  with_child(root, "bounce", "bounce", [&](Section& s) {
    s.get("contact_start", c.bounce.spec.contact_start);
    s.get("contact_duration", c.bounce.spec.contact_duration);
    s.get("peak_pressure", c.bounce.spec.peak_pressure);
    s.get("center_row", c.bounce.spec.center_row);
    s.get("center_col", c.bounce.spec.center_col);
    s.get("max_radius", c.bounce.spec.max_radius);
    s.get("sigma", c.bounce.spec.sigma);
    s.get("center_margin", c.bounce.center_margin);
    s.get("contact_fraction", c.bounce.contact_fraction);
  });
  with_child(root, "perception", "perception", [&](Section& s) {
    s.get("support_threshold", c.perception.support_threshold);
    s.get("vote_window", c.perception.vote_window);
    s.get("small_area_fraction", c.perception.small_area_fraction);
    s.get("library_variants", c.perception.library_variants);
  });
  with_child(root, "adapt", "adapt", [&](Section& s) {
    s.get("scene", c.adapt.scene);
    s.get("schedule", c.adapt.schedule);
  });
  root.finish();
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["master_seed"] = master_seed;
  j["output_dir"] = output_dir.string();
  j["trials"] = trials;
  j["m_sweep"] = m_sweep;
  j["allow_overcomplete"] = allow_overcomplete;
  j["jobs"] = jobs;
  j["noise_fraction"] = noise_fraction;
  j["geometry"] = {{"rows", geometry.rows}, {"cols", geometry.cols}, {"pitch", geometry.pitch}};
  j["circuit"] = {{"feedback_resistance", circuit.feedback_resistance},
                  {"supply", circuit.supply},
                  {"rest_resistance", circuit.rest_resistance},
                  {"min_resistance", circuit.min_resistance},
                  {"pressure_scale", circuit.pressure_scale}};
  j["acquisition"] = {{"clock_hz", acquisition.clock_hz},     {"adc_bits", acquisition.adc_bits},
                      {"adc_range", acquisition.adc_range},   {"noise_sigma", acquisition.noise_sigma},
                      {"saturation", acquisition.saturation}};
  j["dictionary"] = {{"file", dictionary.file},
                     {"atoms", dictionary.atoms},
                     {"sparsity", dictionary.sparsity},
                     {"iterations", dictionary.iterations},
                     {"amp_threshold", dictionary.amp_threshold},
                     {"coherence_threshold", dictionary.coherence_threshold},
                     {"min_relative_improvement", dictionary.min_relative_improvement},
                     {"corpus",
                      {{"shape_variants", dictionary.corpus.shape_variants},
                       {"levels", dictionary.corpus.levels},
                       {"bounce_samples", dictionary.corpus.bounce_samples}}}};
  j["shapes"] = {{"peak_pressure", shapes.peak_pressure}, {"jitter", shapes.jitter}, {"kinds", shapes.kinds}};
  j["press"] = {{"rise", press.rise}, {"hold", press.hold}, {"release", press.release}};
  j["bounce"] = {{"contact_start", bounce.spec.contact_start},
                 {"contact_duration", bounce.spec.contact_duration},
                 {"peak_pressure", bounce.spec.peak_pressure},
                 {"center_row", bounce.spec.center_row},
                 {"center_col", bounce.spec.center_col},
                 {"max_radius", bounce.spec.max_radius},
                 {"sigma", bounce.spec.sigma},
                 {"center_margin", bounce.center_margin},
                 {"contact_fraction", bounce.contact_fraction}};
  j["perception"] = {{"support_threshold", perception.support_threshold},
                     {"vote_window", perception.vote_window},
                     {"small_area_fraction", perception.small_area_fraction},
                     {"library_variants", perception.library_variants}};
  j["adapt"] = {{"scene", adapt.scene}, {"schedule", adapt.schedule}};
  return j;
}

void ExperimentConfig::validate() const {
  try {
    GridGeometry check(geometry.rows, geometry.cols, geometry.pitch);
    circuit.validate();
    acquisition.validate();
    bounce.spec.validate(geometry);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (m_sweep.empty()) throw ConfigError("m_sweep must not be empty");
  for (std::size_t m : m_sweep) {
    if (m < 1) throw ConfigError("m_sweep values must be at least 1");
    if (m > geometry.size() && !allow_overcomplete) {
      throw ConfigError("m_sweep value " + std::to_string(m) + " exceeds N; set allow_overcomplete");
    }
  }
  if (!(noise_fraction >= 0.0)) throw ConfigError("noise_fraction must be non-negative");
  if (dictionary.atoms < 1 || dictionary.sparsity < 1) throw ConfigError("dictionary atoms and sparsity must be >= 1");
  if (dictionary.file.empty()) throw ConfigError("dictionary.file must be set");
  if (dictionary.corpus.levels.empty()) throw ConfigError("dictionary.corpus.levels must not be empty");
  for (double t : {dictionary.amp_threshold, dictionary.coherence_threshold, perception.support_threshold,
                   perception.small_area_fraction, bounce.contact_fraction}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("thresholds and fractions must lie in [0, 1]");
  }
  for (const auto& kind : shapes.kinds) {
    try {
      shape_kind_from_string(kind);
    } catch (const DomainError&) {
      throw ConfigError("unknown shape kind '" + kind + "'");
    }
  }
  if (perception.library_variants < 1) throw ConfigError("library_variants must be at least 1");
  if (perception.vote_window < 1) throw ConfigError("vote_window must be at least 1");
  if (press.rise < 0.0 || press.hold <= 0.0 || press.release < 0.0) throw ConfigError("press phases invalid");
  if (adapt.schedule.empty()) throw ConfigError("adapt.schedule must not be empty");
  for (std::size_t i = 0; i < adapt.schedule.size(); ++i) {
    if (adapt.schedule[i] < 1 || (i > 0 && adapt.schedule[i] <= adapt.schedule[i - 1])) {
      throw ConfigError("adapt.schedule must be strictly increasing and positive");
    }
  }
}

std::filesystem::path ExperimentConfig::dictionary_path() const {
  const std::filesystem::path p(dictionary.file);
  return p.is_absolute() ? p : output_dir / p;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return ExperimentConfig::from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  // Where results go and how many threads produce them do not change the results.
  auto j = config.to_json();
  j.erase("output_dir");
  j.erase("jobs");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace spts::experiment
