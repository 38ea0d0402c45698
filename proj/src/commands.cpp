#include "shapemc/commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "shapemc/dataset.hpp"
#include "shapemc/image_io.hpp"
#include "shapemc/simd/kernels.hpp"
#include "shapemc/synthetic.hpp"

namespace shapemc {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kManifestFormat = 1;

// Output directory built under a sibling name and renamed into place.
class StagedDir {
 public:
  explicit StagedDir(fs::path final_dir) : final_(std::move(final_dir)) {
    if (final_.empty()) throw UsageError("an output directory is required (--out)");
    fs::path parent = fs::absolute(final_).parent_path();
    fs::create_directories(parent);
    staging_ = parent / (final_.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool committed_ = false;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string case_name(std::string id) {
  std::replace(id.begin(), id.end(), '/', '_');
  return id;
}

struct PreparedCorpus {
  std::vector<RawShape> shapes;
  std::vector<TestCase> cases;
};

TestCase make_case(const RawShape& shape, std::optional<PixelRect> occlusion, std::optional<double> snr,
                   const ResolvedConfig& cfg, std::uint64_t index) {
  Rng rng(chain_seed(cfg.run.chain.seed, index));
  SynthesisOptions opts{occlusion, snr, cfg.fg, cfg.bg};
  return synthesize_test(shape.mask, opts, rng, shape.id);
}

void add_leave_one_out(PreparedCorpus& pc, const ResolvedConfig& cfg,
                       const std::vector<std::optional<PixelRect>>& occlusions, std::optional<double> snr) {
  for (std::size_t k = 0; k < pc.shapes.size(); ++k) {
    TestCase tc = make_case(pc.shapes[k], occlusions[k], snr, cfg, k);
    tc.held_out = pc.shapes[k].id;
    pc.cases.push_back(std::move(tc));
  }
}

PreparedCorpus prepare_corpus(const ResolvedConfig& cfg) {
  PreparedCorpus pc;
  const std::string prefix = "synthetic:";
  if (cfg.corpus.rfind(prefix, 0) == 0) {
    const std::string name = cfg.corpus.substr(prefix.size());
    if (name == "aircraft") {
      const auto shapes = synth::aircraft_corpus();
      std::vector<std::optional<PixelRect>> occ;
      for (const auto& s : shapes) {
        pc.shapes.push_back(s.shape);
        occ.emplace_back(cfg.occlusion ? *cfg.occlusion : s.occlusion);
      }
      add_leave_one_out(pc, cfg, occ, cfg.snr_db.value_or(6.0));
    } else if (name == "classes") {
      const auto corpus = synth::three_class_corpus();
      pc.shapes = corpus.training;
      const RawShape test{"test", "", corpus.test_mask};
      pc.cases.push_back(make_case(test, cfg.occlusion ? cfg.occlusion : corpus.occlusion, cfg.snr_db.value_or(6.0),
                                   cfg, 0));
    } else if (name == "composite") {
      const auto corpus = synth::composite_corpus();
      pc.shapes = corpus.training;
      for (std::size_t k = 0; k < corpus.tests.size(); ++k) {
        pc.cases.push_back(make_case(corpus.tests[k], cfg.occlusion, cfg.snr_db.value_or(0.0), cfg, k));
      }
    } else {
      throw UsageError("unknown synthetic corpus '" + name + "' (aircraft, classes, composite)");
    }
    return pc;
  }
  if (!cfg.idx_images.empty() || !cfg.idx_labels.empty()) {
    if (cfg.idx_images.empty() || cfg.idx_labels.empty()) {
      throw UsageError("--idx-images and --idx-labels go together");
    }
    pc.shapes = load_idx_digits(cfg.idx_images, cfg.idx_labels, cfg.per_class);
  } else if (!cfg.corpus.empty()) {
    if (!fs::is_directory(cfg.corpus)) throw UsageError("corpus directory not found: " + cfg.corpus);
    pc.shapes = load_shape_dir(cfg.corpus);
  } else {
    throw UsageError("prepare needs --corpus DIR, --corpus synthetic:NAME, or --idx-images/--idx-labels");
  }
  add_leave_one_out(pc, cfg, std::vector<std::optional<PixelRect>>(pc.shapes.size(), cfg.occlusion), cfg.snr_db);
  return pc;
}

json pose_json(const Pose& p) {
  json j;
  j["tx"] = p.tx;
  j["ty"] = p.ty;
  j["theta"] = p.theta;
  j["log_scale"] = p.log_scale;
  return j;
}

json manifest_base(const ResolvedConfig& cfg, const char* status) {
  json m;
  m["tool"] = "shapemc";
  m["format"] = kManifestFormat;
  m["command"] = "sample";
  m["status"] = status;
  m["config"] = config_to_json(cfg);
  return m;
}

void require_setting(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required setting --") + flag);
}

}  // namespace

TrainingSet load_training(const ResolvedConfig& cfg, const std::optional<std::string>& held_out) {
  require_setting(cfg.train_dir, "train-dir");
  if (!fs::is_directory(cfg.train_dir)) throw UsageError("training directory not found: " + cfg.train_dir);
  std::vector<RawShape> raw = load_shape_dir(cfg.train_dir);
  if (held_out) {
    const auto it = std::find_if(raw.begin(), raw.end(), [&](const RawShape& s) { return s.id == *held_out; });
    if (it == raw.end()) throw InvalidArgument("held-out shape '" + *held_out + "' is not in the training directory");
    raw.erase(it);
    if (raw.empty()) throw InvalidArgument("no training shapes left after holding out '" + *held_out + "'");
  }
  return align_training_set(raw, SigmaRule{cfg.sigma}, cfg.run.chain.alignment);
}

void cmd_prepare(const ResolvedConfig& cfg) {
  StagedDir stage(cfg.out_dir);
  const PreparedCorpus pc = prepare_corpus(cfg);
  write_shape_dir(stage.path() / "corpus", pc.shapes);

  const TrainingSet aligned = align_training_set(pc.shapes, SigmaRule{cfg.sigma}, cfg.run.chain.alignment);
  for (const ShapeClass& cls : aligned.classes()) {
    std::vector<RawShape> masks;
    for (const AlignedShape& s : cls.shapes) masks.push_back(RawShape{s.id, cls.name, s.mask});
    write_shape_dir(stage.path() / "aligned", masks);
  }
  for (const TestCase& tc : pc.cases) write_test_case(stage.path() / "cases" / case_name(tc.source_id), tc);

  json info;
  info["tool"] = "shapemc";
  info["command"] = "prepare";
  info["config"] = config_to_json(cfg);
  info["shapes"] = pc.shapes.size();
  info["cases"] = pc.cases.size();
  info["sigma"] = aligned.kernel().sigma;
  write_json(stage.path() / "prepare.json", info);
  stage.commit();
}

void cmd_sample(const ResolvedConfig& cfg) {
  require_setting(cfg.train_dir, "train-dir");
  require_setting(cfg.case_dir, "case");
  require_setting(cfg.out_dir, "out");
  if (!fs::is_directory(cfg.train_dir)) throw UsageError("training directory not found: " + cfg.train_dir);
  if (cfg.run.n_samples < 1) throw UsageError("--samples must be at least 1");
  try {
    StagedDir stage(cfg.out_dir);
    const TestCase tc = read_test_case(cfg.case_dir);
    const TrainingSet ts = load_training(cfg, tc.held_out);
    const ChainContext ctx = prepare_chain_context(tc.image, ts, cfg.run.chain);
    const std::vector<SampleRecord> samples = run_sampling(ctx, cfg.run.n_samples, cfg.run.threads);

    fs::create_directories(stage.path() / "samples");
    json chains = json::array();
    for (const SampleRecord& s : samples) {
      const std::string k = std::to_string(s.chain_id);
      io::write_mask(stage.path() / "samples" / ("chain_" + k + ".png"), s.final_mask);
      write_trace_csv(stage.path() / ("trace_" + k + ".csv"), {&s});
      const EnergyBreakdown& e = s.energy_trace.back().energy;
      json c;
      c["chain_id"] = s.chain_id;
      c["seed"] = std::to_string(s.seed);
      c["class_id"] = s.class_id;
      c["class_fallback"] = s.class_fallback;
      c["flagged"] = s.flagged;
      c["accept_count"] = s.accept_count;
      c["accept_rate"] = static_cast<double>(s.accept_count) / static_cast<double>(s.energy_trace.size());
      c["e_data"] = e.e_data;
      c["e_shape"] = e.e_shape;
      c["e_total"] = e.e_total;
      c["selection_digest"] = hex64(s.selection_digest);
      json patch_digests = json::array();
      for (std::uint64_t d : s.patch_digests) patch_digests.push_back(hex64(d));
      c["patch_digests"] = std::move(patch_digests);
      chains.push_back(std::move(c));
    }

    json m = manifest_base(cfg, "ok");
    m["simd"] = simd::isa_name(simd::active().isa);
    json training;
    training["sigma"] = ts.kernel().sigma;
    training["reference"] = ts.reference_id();
    training["held_out"] = tc.held_out ? json(*tc.held_out) : json(nullptr);
    json classes = json::array();
    for (const ShapeClass& cls : ts.classes()) {
      json jc;
      jc["name"] = cls.name;
      json ids = json::array();
      for (const AlignedShape& s : cls.shapes) ids.push_back(s.id);
      jc["shapes"] = std::move(ids);
      classes.push_back(std::move(jc));
    }
    training["classes"] = std::move(classes);
    m["training"] = std::move(training);
    m["test_pose"] = pose_json(ctx.aligned.pose);
    json layout;
    layout["rows"] = ctx.layout.rows;
    layout["cols"] = ctx.layout.cols;
    json rects = json::array();
    for (const PixelRect& r : ctx.layout.rects) rects.push_back({r.row, r.col, r.height, r.width});
    layout["rects"] = std::move(rects);
    m["patch_layout"] = std::move(layout);
    m["class_log_densities"] = ctx.log_class_densities;
    m["chains"] = std::move(chains);
    write_json(stage.path() / "manifest.json", m);
    stage.commit();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    // stale samples from an earlier run must not sit next to a failed manifest
    std::error_code ec;
    fs::remove_all(cfg.out_dir, ec);
    fs::create_directories(cfg.out_dir, ec);
    json m = manifest_base(cfg, "failed");
    m["error"] = e.what();
    try {
      write_json(fs::path(cfg.out_dir) / "manifest.json", m);
    } catch (const std::exception&) {
      // the original error is the one worth reporting
    }
    throw;
  }
}

ResolvedConfig config_from_manifest(const fs::path& manifest_path) {
  const json m = read_json(manifest_path);
  if (!m.contains("config")) throw FormatError(manifest_path.string() + ": no config section");
  return config_from_json(m["config"]);
}

LoadedRun read_run(const fs::path& run_dir) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("no manifest in " + run_dir.string());
  const json m = read_json(manifest_path);
  if (m.value("status", std::string{}) != "ok") {
    throw InvalidArgument(run_dir.string() + ": run did not complete (" + m.value("error", std::string{"unknown"}) +
                          ")");
  }
  LoadedRun run;
  run.cfg = config_from_json(m.at("config"));
  for (const auto& c : m.at("training").at("classes")) run.class_names.push_back(c.at("name").get<std::string>());
  const fs::path samples_dir = run_dir / "samples";
  if (!fs::is_directory(samples_dir) || fs::is_empty(samples_dir)) {
    throw InvalidArgument("no samples in " + samples_dir.string());
  }
  for (const auto& c : m.at("chains")) {
    const int id = c.at("chain_id").get<int>();
    const std::string k = std::to_string(id);
    std::vector<SampleRecord> trace = read_trace_csv(run_dir / ("trace_" + k + ".csv"));
    if (trace.size() != 1 || trace.front().chain_id != id) {
      throw FormatError("trace_" + k + ".csv does not hold chain " + k);
    }
    SampleRecord s = std::move(trace.front());
    s.final_mask = io::read_mask(samples_dir / ("chain_" + k + ".png"));
    s.class_id = c.at("class_id").get<int>();
    s.seed = std::stoull(c.at("seed").get<std::string>());
    s.selection_digest = std::stoull(c.at("selection_digest").get<std::string>(), nullptr, 16);
    for (const auto& d : c.value("patch_digests", json::array())) {
      s.patch_digests.push_back(std::stoull(d.get<std::string>(), nullptr, 16));
    }
    s.flagged = c.at("flagged").get<bool>();
    s.class_fallback = c.at("class_fallback").get<bool>();
    run.samples.push_back(std::move(s));
  }
  if (run.samples.empty()) throw InvalidArgument("run " + run_dir.string() + " has no chains");
  return run;
}

void cmd_evaluate(const fs::path& run_dir, const fs::path& out_dir, bool baseline) {
  StagedDir stage(out_dir);
  const LoadedRun run = read_run(run_dir);
  const TestCase tc = read_test_case(run.cfg.case_dir);
  ReportInputs in;
  in.samples = run.samples;
  in.n_classes = static_cast<int>(run.class_names.size());
  in.ground_truth = tc.ground_truth;
  in.image = tc.image;
  if (baseline) {
    const TrainingSet ts = load_training(run.cfg, tc.held_out);
    in.baseline = gd_baseline(prepare_chain_context(tc.image, ts, run.cfg.run.chain));
  }
  emit_report(in, stage.path());

  std::vector<PRResult> pr;
  for (const SampleRecord& s : in.samples) pr.push_back(precision_recall(s.final_mask, tc.ground_truth));
  const std::size_t best = best_index(pr);
  json summary;
  summary["samples"] = in.samples.size();
  summary["best_sample"] = in.samples[best].chain_id;
  summary["best_f_measure"] = pr[best].f_measure;
  summary["baseline_f_measure"] =
      in.baseline ? json(precision_recall(in.baseline->mask, tc.ground_truth).f_measure) : json(nullptr);
  summary["class_names"] = run.class_names;
  summary["class_counts"] = class_counts(in.samples, in.n_classes);
  write_json(stage.path() / "summary.json", summary);
  stage.commit();
}

void cmd_report(const fs::path& run_dir, const fs::path& out_dir) {
  StagedDir stage(out_dir);
  const LoadedRun run = read_run(run_dir);
  ReportInputs in;
  in.samples = run.samples;
  in.n_classes = static_cast<int>(run.class_names.size());
  emit_report(in, stage.path());
  stage.commit();
}

}  // namespace shapemc
