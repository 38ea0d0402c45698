#pragma once

// Batch operations behind the command-line tool. Each writes into a
// staging directory next to its output and renames it into place only
// when everything succeeded.
//
// Run directory layout (sample):
//   manifest.json  samples/chain_<k>.png  trace_<k>.csv

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shapemc/config.hpp"
#include "shapemc/error.hpp"
#include "shapemc/evaluation.hpp"

namespace shapemc {

// Missing or contradictory settings (exit status 2 in the tool).
class UsageError : public Error {
 public:
  using Error::Error;
};

// corpus/<class>/*.png, aligned/<class>/*.png, cases/<id>/..., prepare.json
void cmd_prepare(const ResolvedConfig& cfg);

// On failure the output directory holds only a manifest with status "failed".
void cmd_sample(const ResolvedConfig& cfg);

// Report with precision/recall against the case's ground truth and,
// unless disabled, the gradient-descent baseline.
void cmd_evaluate(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir, bool baseline);

// Report without ground truth.
void cmd_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

TrainingSet load_training(const ResolvedConfig& cfg, const std::optional<std::string>& held_out);

struct LoadedRun {
  ResolvedConfig cfg;
  std::vector<std::string> class_names;
  std::vector<SampleRecord> samples;  // masks, classes and traces only
};
LoadedRun read_run(const std::filesystem::path& run_dir);

ResolvedConfig config_from_manifest(const std::filesystem::path& manifest_path);

}  // namespace shapemc
