#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shapemc/commands.hpp"
#include "shapemc/config.hpp"

namespace {

using shapemc::ResolvedConfig;

struct Flags {
  std::map<std::string, std::string> values;
  std::string config_file;
  std::string manifest;
};

void add_settings(CLI::App* app, Flags& flags, const std::vector<std::string>& keys) {
  for (const std::string& key : keys) {
    if (key == "local-priors") {
      app->add_flag_callback("--local-priors", [&flags] { flags.values["local-priors"] = "true"; },
                             "Use per-patch local shape priors");
      continue;
    }
    app->add_option("--" + key, flags.values[key]);
  }
  app->add_option("--config", flags.config_file, "Flat key = value config file (flag names as keys)");
}

// Bad keys or values anywhere in the configuration are usage errors.
ResolvedConfig resolve(const CLI::App* app, const Flags& flags) try {
  ResolvedConfig cfg;
  if (!flags.manifest.empty()) cfg = shapemc::config_from_manifest(flags.manifest);
  if (!flags.config_file.empty()) shapemc::apply_settings(cfg, shapemc::load_config_file(flags.config_file));
  for (const auto& [key, value] : flags.values) {
    if (key == "local-priors") {
      if (!value.empty()) shapemc::apply_setting(cfg, key, value);
      continue;
    }
    if (app->count("--" + key) > 0) shapemc::apply_setting(cfg, key, value);
  }
  return cfg;
} catch (const shapemc::InvalidArgument& e) {
  throw shapemc::UsageError(e.what());
} catch (const shapemc::FormatError& e) {
  throw shapemc::UsageError(e.what());
}

const std::vector<std::string> kSampleKeys = {
    "train-dir", "case", "out", "samples", "threads", "iters", "gamma", "alpha", "max-step", "sigma", "beta-shape",
    "target", "data-only-iters", "reinit-period", "seed", "reverse-eval", "local-priors", "patch-grid", "blend-band",
    "epsilon", "lambda1", "lambda2", "mu", "heaviside", "align-test", "max-rotation", "rotation-step",
    "estimate-scale", "min-scale", "max-scale"};

const std::vector<std::string> kPrepareKeys = {"corpus", "idx-images", "idx-labels", "per-class", "out",
                                               "occlude", "snr-db", "seed", "fg", "bg", "sigma", "max-rotation",
                                               "rotation-step", "estimate-scale", "min-scale", "max-scale"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape sampling for segmentation with nonparametric shape priors"};
  app.require_subcommand(1);

  Flags prepare_flags;
  CLI::App* prepare = app.add_subcommand("prepare", "Write a shape corpus and synthesized test cases");
  add_settings(prepare, prepare_flags, kPrepareKeys);

  Flags sample_flags;
  CLI::App* sample = app.add_subcommand("sample", "Draw segmentation samples for one test case");
  add_settings(sample, sample_flags, kSampleKeys);
  sample->add_option("--manifest", sample_flags.manifest, "Rerun with the configuration recorded in a manifest");

  std::string run_dir;
  std::string report_out;
  bool no_baseline = false;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a run against its ground truth");
  evaluate->add_option("--run", run_dir, "Directory written by sample")->required();
  evaluate->add_option("--out", report_out, "Report directory")->required();
  evaluate->add_flag("--no-baseline", no_baseline, "Skip the gradient-descent baseline");

  CLI::App* report = app.add_subcommand("report", "Histogram image, bounds, counts and traces of a run");
  report->add_option("--run", run_dir, "Directory written by sample")->required();
  report->add_option("--out", report_out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (prepare->parsed()) {
      shapemc::cmd_prepare(resolve(prepare, prepare_flags));
    } else if (sample->parsed()) {
      shapemc::cmd_sample(resolve(sample, sample_flags));
    } else if (evaluate->parsed()) {
      shapemc::cmd_evaluate(run_dir, report_out, !no_baseline);
    } else if (report->parsed()) {
      shapemc::cmd_report(run_dir, report_out);
    }
  } catch (const shapemc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
