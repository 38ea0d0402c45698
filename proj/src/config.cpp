#include "shapemc/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "shapemc/error.hpp"

namespace shapemc {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

enum class Kind { text, number, boolean };

struct Entry {
  const char* key;
  Kind kind;
  std::function<void(ResolvedConfig&, const std::string&)> set;
  std::function<std::string(const ResolvedConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw InvalidArgument("setting '" + key + "': '" + value + "' is not " + expected);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) bad_value(key, s, "a number");
  return v;
}

long long to_int(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) bad_value(key, s, "an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, s, "a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

#define SHAPEMC_DOUBLE(KEY, FIELD)                                                                  \
  Entry {                                                                                           \
    KEY, Kind::number, [](ResolvedConfig& c, const std::string& v) { c.FIELD = to_double(KEY, v); }, \
        [](const ResolvedConfig& c) { return format_double(c.FIELD); }                              \
  }
#define SHAPEMC_INT(KEY, FIELD)                                                                                  \
  Entry {                                                                                                        \
    KEY, Kind::number, [](ResolvedConfig& c, const std::string& v) { c.FIELD = static_cast<int>(to_int(KEY, v)); }, \
        [](const ResolvedConfig& c) { return std::to_string(c.FIELD); }                                          \
  }
#define SHAPEMC_BOOL(KEY, FIELD)                                                                  \
  Entry {                                                                                         \
    KEY, Kind::boolean, [](ResolvedConfig& c, const std::string& v) { c.FIELD = to_bool(KEY, v); }, \
        [](const ResolvedConfig& c) { return std::string(c.FIELD ? "true" : "false"); }            \
  }
#define SHAPEMC_TEXT(KEY, FIELD)                                                         \
  Entry {                                                                                \
    KEY, Kind::text, [](ResolvedConfig& c, const std::string& v) { c.FIELD = v; },       \
        [](const ResolvedConfig& c) { return c.FIELD; }                                  \
  }

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = {
      SHAPEMC_TEXT("train-dir", train_dir),
      SHAPEMC_TEXT("case", case_dir),
      SHAPEMC_TEXT("out", out_dir),
      SHAPEMC_INT("samples", run.n_samples),
      SHAPEMC_INT("threads", run.threads),
      SHAPEMC_INT("iters", run.chain.n_iters),
      SHAPEMC_INT("gamma", run.chain.gamma),
      SHAPEMC_DOUBLE("alpha", run.chain.alpha),
      SHAPEMC_DOUBLE("max-step", run.chain.max_step_px),
      Entry{"sigma", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              if (v == "auto") {
                c.sigma.reset();
              } else {
                c.sigma = to_double("sigma", v);
              }
            },
            [](const ResolvedConfig& c) { return c.sigma ? format_double(*c.sigma) : std::string("auto"); }},
      SHAPEMC_DOUBLE("beta-shape", run.chain.beta_shape),
      Entry{"target", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              if (v == "full") {
                c.run.chain.target_mode = TargetMode::full;
              } else if (v == "shape-only") {
                c.run.chain.target_mode = TargetMode::shape_only;
              } else {
                bad_value("target", v, "full or shape-only");
              }
            },
            [](const ResolvedConfig& c) {
              return std::string(c.run.chain.target_mode == TargetMode::full ? "full" : "shape-only");
            }},
      SHAPEMC_INT("data-only-iters", run.chain.data_only_iters),
      SHAPEMC_INT("reinit-period", run.chain.reinit_period),
      Entry{"seed", Kind::number,
            [](ResolvedConfig& c, const std::string& v) {
              std::uint64_t s = 0;
              const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
              if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
                bad_value("seed", v, "an unsigned 64-bit integer");
              }
              c.run.chain.seed = s;
            },
            [](const ResolvedConfig& c) { return std::to_string(c.run.chain.seed); }},
      Entry{"reverse-eval", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              if (v == "candidate") {
                c.run.chain.reverse_eval = ReverseEval::candidate;
              } else if (v == "literal") {
                c.run.chain.reverse_eval = ReverseEval::literal_prev_curve;
              } else {
                bad_value("reverse-eval", v, "candidate or literal");
              }
            },
            [](const ResolvedConfig& c) {
              return std::string(c.run.chain.reverse_eval == ReverseEval::candidate ? "candidate" : "literal");
            }},
      SHAPEMC_BOOL("local-priors", run.chain.local_priors),
      Entry{"patch-grid", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              const auto [r, k] = parse_patch_grid(v);
              c.run.chain.patch_rows = r;
              c.run.chain.patch_cols = k;
            },
            [](const ResolvedConfig& c) {
              return std::to_string(c.run.chain.patch_rows) + "x" + std::to_string(c.run.chain.patch_cols);
            }},
      SHAPEMC_DOUBLE("blend-band", run.chain.blend_band_px),
      SHAPEMC_DOUBLE("epsilon", run.chain.chan_vese.epsilon),
      SHAPEMC_DOUBLE("lambda1", run.chain.chan_vese.lambda1),
      SHAPEMC_DOUBLE("lambda2", run.chain.chan_vese.lambda2),
      SHAPEMC_DOUBLE("mu", run.chain.chan_vese.mu_length),
      Entry{"heaviside", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              if (v == "smooth") {
                c.run.chain.chan_vese.heaviside = Heaviside::smooth;
              } else if (v == "hard") {
                c.run.chain.chan_vese.heaviside = Heaviside::hard;
              } else {
                bad_value("heaviside", v, "smooth or hard");
              }
            },
            [](const ResolvedConfig& c) {
              return std::string(c.run.chain.chan_vese.heaviside == Heaviside::smooth ? "smooth" : "hard");
            }},
      SHAPEMC_BOOL("align-test", run.chain.align_test),
      SHAPEMC_DOUBLE("max-rotation", run.chain.alignment.max_rotation),
      SHAPEMC_DOUBLE("rotation-step", run.chain.alignment.rotation_step),
      SHAPEMC_BOOL("estimate-scale", run.chain.alignment.estimate_scale),
      SHAPEMC_DOUBLE("min-scale", run.chain.alignment.min_scale),
      SHAPEMC_DOUBLE("max-scale", run.chain.alignment.max_scale),
      SHAPEMC_TEXT("corpus", corpus),
      SHAPEMC_TEXT("idx-images", idx_images),
      SHAPEMC_TEXT("idx-labels", idx_labels),
      SHAPEMC_INT("per-class", per_class),
      Entry{"snr-db", Kind::text,
            [](ResolvedConfig& c, const std::string& v) {
              if (v == "none") {
                c.snr_db.reset();
              } else {
                c.snr_db = to_double("snr-db", v);
              }
            },
            [](const ResolvedConfig& c) { return c.snr_db ? format_double(*c.snr_db) : std::string("none"); }},
      Entry{"occlude", Kind::text,
            [](ResolvedConfig& c, const std::string& v) { c.occlusion = parse_occlusion(v); },
            [](const ResolvedConfig& c) { return format_occlusion(c.occlusion); }},
      SHAPEMC_DOUBLE("fg", fg),
      SHAPEMC_DOUBLE("bg", bg),
      SHAPEMC_BOOL("baseline", baseline),
  };
  return entries;
}

#undef SHAPEMC_DOUBLE
#undef SHAPEMC_INT
#undef SHAPEMC_BOOL
#undef SHAPEMC_TEXT

const Entry& find(const std::string& key) {
  for (const Entry& e : table()) {
    if (key == e.key) return e;
  }
  throw InvalidArgument("unknown setting '" + key + "'");
}

}  // namespace

std::optional<PixelRect> parse_occlusion(const std::string& text) {
  if (text == "none" || text.empty()) return std::nullopt;
  std::vector<int> v;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) v.push_back(static_cast<int>(to_int("occlude", trim(part))));
  if (v.size() != 4 || v[0] < 0 || v[1] < 0 || v[2] < 1 || v[3] < 1) bad_value("occlude", text, "x,y,w,h");
  return PixelRect{v[1], v[0], v[3], v[2]};
}

std::string format_occlusion(const std::optional<PixelRect>& r) {
  if (!r) return "none";
  return std::to_string(r->col) + "," + std::to_string(r->row) + "," + std::to_string(r->width) + "," +
         std::to_string(r->height);
}

std::pair<int, int> parse_patch_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) bad_value("patch-grid", text, "RxC");
  const long long r = to_int("patch-grid", text.substr(0, x));
  const long long c = to_int("patch-grid", text.substr(x + 1));
  if (r < 1 || c < 1) bad_value("patch-grid", text, "RxC with positive counts");
  return {static_cast<int>(r), static_cast<int>(c)};
}

void apply_setting(ResolvedConfig& cfg, const std::string& key, const std::string& value) {
  find(key).set(cfg, value);
}

void apply_settings(ResolvedConfig& cfg, const std::vector<Setting>& settings) {
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Entry& e : table()) k.emplace_back(e.key);
    return k;
  }();
  return keys;
}

std::vector<Setting> settings_of(const ResolvedConfig& cfg) {
  std::vector<Setting> out;
  for (const Entry& e : table()) out.emplace_back(e.key, e.get(cfg));
  return out;
}

std::vector<Setting> parse_config_text(const std::string& text) {
  std::vector<Setting> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find_first_of("=:");
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<Setting> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

nlohmann::ordered_json config_to_json(const ResolvedConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Entry& e : table()) {
    const std::string v = e.get(cfg);
    switch (e.kind) {
      case Kind::text:
        j[e.key] = v;
        break;
      case Kind::boolean:
        j[e.key] = v == "true";
        break;
      case Kind::number:
        // kept as text so 64-bit seeds and doubles survive any JSON reader
        j[e.key] = v;
        break;
    }
  }
  return j;
}

ResolvedConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  ResolvedConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      apply_setting(cfg, key, value.get<std::string>());
    } else if (value.is_boolean()) {
      apply_setting(cfg, key, value.get<bool>() ? "true" : "false");
    } else if (value.is_number_integer() || value.is_number_unsigned()) {
      apply_setting(cfg, key, value.dump());
    } else if (value.is_number_float()) {
      apply_setting(cfg, key, format_double(value.get<double>()));
    } else {
      throw FormatError("config key '" + key + "' has an unsupported value");
    }
  }
  return cfg;
}

}  // namespace shapemc
