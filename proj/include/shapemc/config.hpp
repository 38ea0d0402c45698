#pragma once

// Run configuration resolved from built-in defaults, then a config file,
// then command-line flags. Every setting has a key equal to its flag name
// (without the leading dashes); config files are `key = value` lines with
// `#` comments, and manifests store the same keys as a JSON object.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapemc/grid.hpp"
#include "shapemc/sampler.hpp"

namespace shapemc {

struct ResolvedConfig {
  std::string train_dir;
  std::string case_dir;
  std::string out_dir;
  RunConfig run;
  std::optional<double> sigma;  // absent: mean nearest-neighbour distance
  // prepare
  std::string corpus;       // directory, or synthetic:aircraft|classes|composite
  std::string idx_images;
  std::string idx_labels;
  int per_class = 10;
  std::optional<double> snr_db;
  std::optional<PixelRect> occlusion;
  double fg = 200.0;
  double bg = 50.0;
  // evaluate
  bool baseline = true;
};

using Setting = std::pair<std::string, std::string>;

// Throws InvalidArgument naming the key on an unknown key or bad value.
void apply_setting(ResolvedConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(ResolvedConfig& cfg, const std::vector<Setting>& settings);

// Every key with its current value, in a fixed order.
std::vector<Setting> settings_of(const ResolvedConfig& cfg);
const std::vector<std::string>& setting_keys();

std::vector<Setting> parse_config_text(const std::string& text);
std::vector<Setting> load_config_file(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const ResolvedConfig& cfg);
ResolvedConfig config_from_json(const nlohmann::json& j);

// "x,y,w,h" -> rect (row = y, col = x); "none" -> nullopt.
std::optional<PixelRect> parse_occlusion(const std::string& text);
std::string format_occlusion(const std::optional<PixelRect>& rect);
// "RxC"
std::pair<int, int> parse_patch_grid(const std::string& text);

// Round-trippable decimal text.
std::string format_double(double v);

}  // namespace shapemc
