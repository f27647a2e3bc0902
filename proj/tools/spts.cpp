// Command-line experiment runner.
//
//   spts dict-train|classify-sweep|support-sweep|bounce|localize|adapt
//        --config <path> [--out <dir>] [--seed <u32>] [--jobs <n>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical/runtime error.

#include "spts/experiment.hpp"

#include <CLI11.hpp>

#include <fmt/format.h>

#include <iostream>
#include <optional>

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void report(const spts::experiment::DictTrainResult& r) {
  std::cerr << fmt::format("dictionary: {} atoms from {} of {} training frames, {} sweeps\n", r.dictionary.size(),
                           r.corpus_kept, r.corpus_raw, r.log.size());
}

void report(const spts::experiment::ClassifyResult& r) {
  for (const auto& s : r.summary)
    std::cerr << fmt::format("M={:>3}  fps={:>8.1f}  accuracy={:.3f}  raster={:.3f}\n", s.m, s.fps, s.accuracy,
                             s.raster_accuracy);
}

void report(const spts::experiment::SupportResult& r) {
  for (const auto& s : r.summary)
    std::cerr << fmt::format("M={:>3}  support={:.3f}  small={:.3f}  large={:.3f}  raster={:.3f}\n", s.m, s.accuracy,
                             s.small_accuracy, s.large_accuracy, s.raster_accuracy);
}

void report(const spts::experiment::BounceResult& r) {
  for (const auto& s : r.summary)
    std::cerr << fmt::format("M={:>3}  frames in contact={:>3}  delta={:.4g}\n", s.m, s.frames_in_contact,
                             s.delta_pressure);
}

void report(const spts::experiment::LocalizeResult& r) {
  for (const auto& s : r.summary)
    std::cerr << fmt::format("M={:>3}  CoM error={:.3f} px (sd {:.3f}, {} frames, {} skipped)\n", s.m, s.mean_error,
                             s.std_error, s.frames, s.skipped);
}

void report(const spts::experiment::AdaptResult& r) {
  for (const auto& s : r.steps)
    std::cerr << fmt::format("M={:>3}  residual={:.4g}  support={:.3f}  iou={:.3f}\n", s.m_used, s.residual,
                             s.support.accuracy, s.support.iou);
}

}  // namespace

int main(int argc, char** argv) {
  namespace ex = spts::experiment;

  CLI::App app{"Single-pixel tactile skin simulator and experiment runner"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint32_t> seed;
  std::optional<std::size_t> jobs;

  const std::vector<std::string> commands{"dict-train", "classify-sweep", "support-sweep", "bounce", "localize", "adapt"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "master seed (overrides master_seed)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    ex::ExperimentConfig config = ex::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.master_seed = *seed;
    if (jobs) config.jobs = *jobs;
    config.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "dict-train") report(ex::cmd_dict_train(config));
    else if (cmd == "classify-sweep") report(ex::cmd_classify_sweep(config));
    else if (cmd == "support-sweep") report(ex::cmd_support_sweep(config));
    else if (cmd == "bounce") report(ex::cmd_bounce(config));
    else if (cmd == "localize") report(ex::cmd_localize(config));
    else if (cmd == "adapt") report(ex::cmd_adapt(config));
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
