#include "shapemc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "shapemc/error.hpp"
#include "shapemc/image_io.hpp"
#include "shapemc/simd/kernels.hpp"

namespace shapemc {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

PRResult precision_recall(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred.dims(), gt.dims(), "precision_recall");
  std::size_t n_pred = 0, n_gt = 0, n_both = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    n_pred += pred[i];
    n_gt += gt[i];
    n_both += pred[i] && gt[i];
  }
  if (n_gt == 0) throw InvalidArgument("precision_recall: empty ground truth");
  PRResult r;
  r.precision = n_pred == 0 ? 0.0 : static_cast<double>(n_both) / static_cast<double>(n_pred);
  r.recall = static_cast<double>(n_both) / static_cast<double>(n_gt);
  const double s = r.precision + r.recall;
  r.f_measure = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

HistogramImage histogram_image(const std::vector<BinaryMask>& samples) {
  if (samples.empty()) throw InvalidArgument("histogram_image: no samples");
  HistogramImage h;
  h.dims = samples.front().dims();
  h.n_samples = static_cast<int>(samples.size());
  h.counts.assign(h.dims.size(), 0);
  for (const BinaryMask& m : samples) {
    require_same_dims(m.dims(), h.dims, "histogram_image");
    for (std::size_t i = 0; i < m.size(); ++i) h.counts[i] += m[i];
  }
  h.h = ScalarField(h.dims);
  for (std::size_t i = 0; i < h.counts.size(); ++i) h.h[i] = static_cast<double>(h.counts[i]) / h.n_samples;
  return h;
}

std::vector<BinaryMask> confidence_bounds(const HistogramImage& h, const std::vector<double>& levels) {
  std::vector<BinaryMask> out;
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    BinaryMask m(h.dims);
    // compare counts so that the level test is exact
    for (std::size_t i = 0; i < h.counts.size(); ++i) m.set(i, h.counts[i] >= level * h.n_samples);
    out.push_back(std::move(m));
  }
  return out;
}

BinaryMask mask_boundary(const BinaryMask& mask) {
  const GridDims d = mask.dims();
  BinaryMask out(d);
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      if (!mask(r, c)) continue;
      const bool edge = (r > 0 && !mask(r - 1, c)) || (r + 1 < d.height && !mask(r + 1, c)) ||
                        (c > 0 && !mask(r, c - 1)) || (c + 1 < d.width && !mask(r, c + 1));
      out.set(r, c, edge);
    }
  }
  return out;
}

std::vector<int> class_counts(const std::vector<SampleRecord>& samples, int n_classes) {
  if (n_classes < 1) throw InvalidArgument("class_counts: need at least one class");
  std::vector<int> counts(n_classes, 0);
  for (const SampleRecord& s : samples) {
    if (s.class_id < 0 || s.class_id >= n_classes) throw InvalidArgument("class_counts: class id out of range");
    ++counts[s.class_id];
  }
  return counts;
}

BaselineResult gd_baseline(const ChainContext& ctx) {
  const TrainingSet& ts = *ctx.ts;
  const ChainConfig& cfg = ctx.cfg;
  SignedDistanceField phi = ctx.aligned.sdf;
  SignedDistanceField last_valid = phi;
  BaselineResult res;
  // Always the full data + shape energy; the sampler's target mode only
  // changes what its acceptance test sees.
  for (int it = 1; it <= cfg.n_iters; ++it) {
    ScalarField f = chan_vese_gradient(*ctx.image, phi, ctx.sampling_params);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = -f[i];
    accumulate_full_prior_term(f.values(), phi, ts, shape_distances_sq(phi, ts), cfg.beta_shape);
    if (!f.all_finite()) break;
    phi = propose(phi, f, clamped_step(f, cfg.alpha, cfg.max_step_px));
    res.iterations = it;
    if (it % cfg.reinit_period == 0 || it == cfg.n_iters) {
      if (!phi.has_both_signs()) break;
      phi = reinitialize(phi);
      last_valid = phi;
    }
  }
  res.sdf_aligned = last_valid;
  res.energy = combine_energy(chan_vese_energy(*ctx.image, last_valid, ctx.sampling_params),
                              log_shape_prior(shape_distances_sq(last_valid, ts), ts), cfg.beta_shape,
                              TargetMode::full);
  res.mask = sdf_to_mask(apply_pose(last_valid, ctx.aligned.pose.inverse()));
  return res;
}

BaselineResult gd_baseline(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg) {
  return gd_baseline(prepare_chain_context(image, ts, cfg));
}

std::size_t best_index(const std::vector<PRResult>& results) {
  if (results.empty()) throw InvalidArgument("best_index: no results");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].f_measure > results[best].f_measure) best = i;
  }
  return best;
}

std::vector<ClassTrace> class_mean_traces(const std::vector<SampleRecord>& samples, int n_classes) {
  std::vector<ClassTrace> out(n_classes);
  for (int c = 0; c < n_classes; ++c) out[c].class_id = c;
  for (const SampleRecord& s : samples) {
    ClassTrace& t = out.at(s.class_id);
    if (t.mean_e_shape.empty()) {
      t.mean_e_shape.assign(s.energy_trace.size(), 0.0);
      t.mean_e_total.assign(s.energy_trace.size(), 0.0);
    }
    if (t.mean_e_shape.size() != s.energy_trace.size()) throw InvalidArgument("traces of unequal length");
    for (std::size_t i = 0; i < s.energy_trace.size(); ++i) {
      t.mean_e_shape[i] += s.energy_trace[i].energy.e_shape;
      t.mean_e_total[i] += s.energy_trace[i].energy.e_total;
    }
    ++t.n_chains;
  }
  for (ClassTrace& t : out) {
    for (double& v : t.mean_e_shape) v /= t.n_chains;
    for (double& v : t.mean_e_total) v /= t.n_chains;
  }
  return out;
}

double final_energy(const SampleRecord& s) {
  return s.energy_trace.empty() ? 0.0 : s.energy_trace.back().energy.e_total;
}

double final_shape_energy(const SampleRecord& s) {
  return s.energy_trace.empty() ? 0.0 : s.energy_trace.back().energy.e_shape;
}

std::vector<std::size_t> top_by_energy(const std::vector<SampleRecord>& samples, int class_id, std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].class_id == class_id) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return final_energy(samples[a]) < final_energy(samples[b]); });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

void write_trace_csv(const fs::path& path, const std::vector<const SampleRecord*>& samples) {
  std::ofstream out = open_out(path);
  out << "chain_id,iteration,e_data,e_shape,e_total,accepted\n";
  for (const SampleRecord* s : samples) {
    for (const TraceEntry& e : s->energy_trace) {
      out << s->chain_id << ',' << e.iteration << ',' << num(e.energy.e_data) << ',' << num(e.energy.e_shape) << ','
          << num(e.energy.e_total) << ',' << (e.accepted ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SampleRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "chain_id,iteration,e_data,e_shape,e_total,accepted") {
    throw FormatError(path.string() + ": unexpected trace header");
  }
  std::vector<SampleRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw FormatError(path.string() + ": malformed row: " + line);
    try {
      const int chain = std::stoi(cells[0]);
      if (out.empty() || out.back().chain_id != chain) {
        out.emplace_back();
        out.back().chain_id = chain;
      }
      TraceEntry e;
      e.iteration = std::stoi(cells[1]);
      e.energy.e_data = std::stod(cells[2]);
      e.energy.e_shape = std::stod(cells[3]);
      e.energy.e_total = std::stod(cells[4]);
      e.accepted = cells[5] == "1";
      out.back().accept_count += e.accepted;
      out.back().energy_trace.push_back(e);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": malformed row: " + line);
    }
  }
  return out;
}

namespace {

void write_scatter_svg(const fs::path& path, const std::vector<PRResult>& pr, const std::optional<PRResult>& baseline) {
  constexpr int kSize = 400;
  constexpr int kMargin = 40;
  constexpr double kSpan = kSize - 2 * kMargin;
  auto px = [&](double v) { return num(kMargin + v * kSpan); };
  auto py = [&](double v) { return num(kSize - kMargin - v * kSpan); };
  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kSize - kMargin << "\" x2=\"" << kSize - kMargin << "\" y2=\""
      << kSize - kMargin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kSize - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 10 << "\" text-anchor=\"middle\">precision</text>\n";
  out << "<text x=\"12\" y=\"" << kSize / 2 << "\" transform=\"rotate(-90 12 " << kSize / 2
      << ")\" text-anchor=\"middle\">recall</text>\n";
  for (const PRResult& r : pr) {
    out << "<circle cx=\"" << px(r.precision) << "\" cy=\"" << py(r.recall)
        << "\" r=\"3\" fill=\"none\" stroke=\"blue\"/>\n";
  }
  if (baseline) {
    out << "<rect x=\"" << num(kMargin + baseline->precision * kSpan - 4) << "\" y=\""
        << num(kSize - kMargin - baseline->recall * kSpan - 4) << "\" width=\"8\" height=\"8\" fill=\"red\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace

void emit_report(const ReportInputs& in, const fs::path& out_dir) {
  if (in.samples.empty()) throw InvalidArgument("emit_report: no samples");
  fs::create_directories(out_dir);

  std::vector<BinaryMask> masks;
  for (const SampleRecord& s : in.samples) masks.push_back(s.final_mask);
  const HistogramImage h = histogram_image(masks);

  if (in.ground_truth) {
    std::vector<PRResult> pr;
    std::ofstream out = open_out(out_dir / "pr.csv");
    out << "sample_id,precision,recall,f_measure,class_id,e_total\n";
    for (const SampleRecord& s : in.samples) {
      pr.push_back(precision_recall(s.final_mask, *in.ground_truth));
      out << s.chain_id << ',' << num(pr.back().precision) << ',' << num(pr.back().recall) << ','
          << num(pr.back().f_measure) << ',' << s.class_id << ',' << num(final_energy(s)) << '\n';
    }
    std::optional<PRResult> base;
    if (in.baseline) {
      base = precision_recall(in.baseline->mask, *in.ground_truth);
      out << "baseline," << num(base->precision) << ',' << num(base->recall) << ',' << num(base->f_measure)
          << ",-1," << num(in.baseline->energy.e_total) << '\n';
    }
    write_scatter_svg(out_dir / "pr_scatter.svg", pr, base);
  }

  {
    std::ofstream out = open_out(out_dir / "counts.csv");
    out << "class_id,count\n";
    const std::vector<int> counts = class_counts(in.samples, in.n_classes);
    for (int c = 0; c < in.n_classes; ++c) out << c << ',' << counts[c] << '\n';
  }

  io::GrayImage hist{h.dims, std::vector<std::uint8_t>(h.dims.size())};
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    hist.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * h.counts[i] / h.n_samples));
  }
  io::write_gray_pgm(out_dir / "h.pgm", hist);

  const std::vector<BinaryMask> bounds = confidence_bounds(h, {0.1, 0.9});
  const BinaryMask red = mask_boundary(bounds[0]);
  const BinaryMask green = mask_boundary(bounds[1]);
  std::vector<std::uint8_t> rgb(h.dims.size() * 3);
  for (std::size_t i = 0; i < h.dims.size(); ++i) {
    std::uint8_t g = hist.pixels[i];
    if (in.image) g = static_cast<std::uint8_t>(std::clamp(std::lround((*in.image)[i]), 0L, 255L));
    std::uint8_t px[3] = {g, g, g};
    if (red[i]) px[0] = 255, px[1] = 0, px[2] = 0;
    if (green[i]) px[0] = 0, px[1] = 255, px[2] = 0;
    std::copy(px, px + 3, rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));
  }
  io::write_rgb_png(out_dir / "mcb_overlay.png", h.dims, rgb);

  std::vector<const SampleRecord*> ptrs;
  for (const SampleRecord& s : in.samples) ptrs.push_back(&s);
  write_trace_csv(out_dir / "energy_trace.csv", ptrs);

  {
    std::ofstream out = open_out(out_dir / "class_traces.csv");
    out << "class_id,n_chains,iteration,mean_e_shape,mean_e_total\n";
    for (const ClassTrace& t : class_mean_traces(in.samples, in.n_classes)) {
      for (std::size_t i = 0; i < t.mean_e_shape.size(); ++i) {
        out << t.class_id << ',' << t.n_chains << ',' << i + 1 << ',' << num(t.mean_e_shape[i]) << ','
            << num(t.mean_e_total[i]) << '\n';
      }
    }
  }
  {
    std::ofstream out = open_out(out_dir / "top_samples.csv");
    out << "class_id,rank,sample_id,e_total,e_shape\n";
    for (int c = 0; c < in.n_classes; ++c) {
      const auto top = top_by_energy(in.samples, c, 3);
      for (std::size_t r = 0; r < top.size(); ++r) {
        const SampleRecord& s = in.samples[top[r]];
        out << c << ',' << r + 1 << ',' << s.chain_id << ',' << num(final_energy(s)) << ','
            << num(final_shape_energy(s)) << '\n';
      }
    }
  }
}

}  // namespace shapemc
