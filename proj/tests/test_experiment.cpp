#include "spts/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace spts;
using namespace spts::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spts_unit_" + name + "_" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.output_dir = out;
  c.trials = 2;
  c.m_sweep = {20, 50};
  c.dictionary.atoms = 40;
  c.dictionary.sparsity = 8;
  c.dictionary.iterations = 3;
  c.dictionary.corpus.shape_variants = 2;
  c.dictionary.corpus.bounce_samples = 10;
  c.shapes.kinds = {"disk", "T", "ring"};
  c.perception.vote_window = 4;
  c.perception.library_variants = 2;
  c.adapt.schedule = {2, 5, 15};
  return c;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(ExperimentConfig::from_json(nlohmann::json::object()));
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"circuit", {{"bogus", 1}}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"trials", "ten"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"m_sweep", {0}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"m_sweep", {101}}}), ConfigError);
  CHECK_NOTHROW(ExperimentConfig::from_json({{"m_sweep", {101}}, {"allow_overcomplete", true}}));
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"shapes", {{"kinds", {"blob"}}}}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"adapt", {{"schedule", {5, 3}}}}}), ConfigError);
}

TEST_CASE("config round trip and hash ignore output location") {
  ExperimentConfig a = ExperimentConfig::from_json({{"master_seed", 9}, {"trials", 3}});
  const ExperimentConfig b = ExperimentConfig::from_json(a.to_json());
  CHECK(config_hash(a) == config_hash(b));
  ExperimentConfig moved = a;
  moved.output_dir = "/somewhere/else";
  moved.jobs = 4;
  CHECK(config_hash(moved) == config_hash(a));
  moved.master_seed = 10;
  CHECK(config_hash(moved) != config_hash(a));

  const fs::path dir = scratch("cfg");
  {
    std::ofstream(dir / "c.json") << "{\"master_seed\": 3, \"output_dir\": \"res\"}";
  }
  const ExperimentConfig loaded = load_config(dir / "c.json");
  CHECK(loaded.master_seed == 3);
  {
    std::ofstream(dir / "bad.json") << "{not json";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("training corpus and library construction") {
  ExperimentConfig c;
  c.shapes.kinds = {"disk", "dot"};
  c.dictionary.corpus.shape_variants = 3;
  c.dictionary.corpus.bounce_samples = 5;
  const TrainingCorpus corpus = build_training_corpus(c);
  CHECK(corpus.size() == 2 * 3 * 2 + 5);
  CHECK(corpus.signals.maxCoeff() <= 0.0);
  CHECK(configured_shapes(c).size() == 2);
  const ObjectLibrary lib = build_object_library(c, configured_shapes(c));
  CHECK(lib.entries().size() == 2 * c.perception.library_variants);
  CHECK(lib.labels() == std::vector<std::string>{"disk", "dot"});
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(4, hits.size(), [&](std::size_t i) { hits[i]++; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("pipelines run end to end on a small configuration") {
  const fs::path out = scratch("pipe");
  const ExperimentConfig c = small_config(out);

  CHECK_THROWS(cmd_classify_sweep(c));

  const DictTrainResult d = cmd_dict_train(c);
  CHECK(d.dictionary.size() == 40);
  CHECK((d.dictionary.atoms.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK(fs::exists(c.dictionary_path()));
  CHECK(fs::exists(out / "training_log.csv"));
  CHECK(fs::exists(out / "manifest_dict-train.json"));

  const ClassifyResult cl = cmd_classify_sweep(c);
  CHECK(cl.rows.size() == 3 * 2 * 2);
  CHECK(cl.summary.size() == 2);
  CHECK(cl.summary[0].fps == 3500.0);
  CHECK(line_count(out / "classify.csv") == 1 + cl.rows.size());

  const SupportResult su = cmd_support_sweep(c);
  CHECK(su.rows.size() == 2 * 3 * 2);
  CHECK(line_count(out / "support.csv") == 1 + su.rows.size());

  const BounceResult bo = cmd_bounce(c);
  CHECK(bo.summary.size() == 2);
  CHECK(fs::exists(out / "bounce_trace_m20.csv"));

  const LocalizeResult lo = cmd_localize(c);
  CHECK(lo.summary.size() == 2);

  const AdaptResult ad = cmd_adapt(c);
  REQUIRE(ad.steps.size() == 3);
  CHECK(ad.steps[0].m_used == 2);
  CHECK(ad.steps[2].m_used == 15);
  CHECK(line_count(out / "adapt_frames.jsonl") == 3);
  fs::remove_all(out);
}

TEST_CASE("iterations = 0 writes the initialization dictionary") {
  const fs::path out = scratch("init");
  ExperimentConfig c = small_config(out);
  c.dictionary.iterations = 0;
  const DictTrainResult d = cmd_dict_train(c);
  CHECK(d.dictionary.meta.iterations == 0);
  CHECK(d.log.empty());
  fs::remove_all(out);
}

TEST_CASE("zero-pressure bounce gives flat traces") {
  const fs::path out = scratch("flat");
  ExperimentConfig c = small_config(out);
  cmd_dict_train(c);
  c.noise_fraction = 0.0;
  const BounceResult real = cmd_bounce(c);
  c.bounce.spec.peak_pressure = 0.0;
  const BounceResult r = cmd_bounce(c);
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    double peak = 0.0;
    for (const auto& p : real.summary[i].truth_trace) peak = std::max(peak, p.max_intensity);
    for (const auto& p : r.summary[i].truth_trace) CHECK(p.max_intensity == 0.0);
    // the rest level itself is only approximately in the dictionary's span
    for (const auto& p : r.summary[i].trace) CHECK(p.max_intensity < 0.05 * peak);
  }
  fs::remove_all(out);
}
