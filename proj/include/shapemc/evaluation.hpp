#pragma once

// Segmentation metrics, histogram images and confidence bounds, class
// counts, the deterministic gradient-flow baseline, and report files.

#include <filesystem>
#include <optional>
#include <vector>

#include "shapemc/grid.hpp"
#include "shapemc/sampler.hpp"

namespace shapemc {

struct PRResult {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

// Throws InvalidArgument on an empty ground truth.
PRResult precision_recall(const BinaryMask& pred, const BinaryMask& gt);

struct HistogramImage {
  GridDims dims;
  int n_samples = 0;
  std::vector<int> counts;  // samples containing each pixel
  ScalarField h;            // counts / n_samples
};

HistogramImage histogram_image(const std::vector<BinaryMask>& samples);

// {x : H(x) >= level} per level.
std::vector<BinaryMask> confidence_bounds(const HistogramImage& h, const std::vector<double>& levels = {0.1, 0.9});

// Inside pixels with a 4-neighbour outside the mask (frame edges do not count).
BinaryMask mask_boundary(const BinaryMask& mask);

std::vector<int> class_counts(const std::vector<SampleRecord>& samples, int n_classes);

struct BaselineResult {
  BinaryMask mask;  // image frame
  SignedDistanceField sdf_aligned;
  EnergyBreakdown energy;
  int iterations = 0;
};

// Deterministic descent with the shape term taken over every training
// shape: same initialization, alignment and iteration budget as a chain.
BaselineResult gd_baseline(const ChainContext& ctx);
BaselineResult gd_baseline(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg);

// Index of the highest F-measure (first on ties).
std::size_t best_index(const std::vector<PRResult>& results);

// Arithmetic mean over the chains of one class, per iteration.
struct ClassTrace {
  int class_id = 0;
  int n_chains = 0;
  std::vector<double> mean_e_shape;
  std::vector<double> mean_e_total;
};
std::vector<ClassTrace> class_mean_traces(const std::vector<SampleRecord>& samples, int n_classes);

// Up to k sample indices of one class with the lowest final total energy.
std::vector<std::size_t> top_by_energy(const std::vector<SampleRecord>& samples, int class_id, std::size_t k = 3);

double final_energy(const SampleRecord& s);
double final_shape_energy(const SampleRecord& s);

void write_trace_csv(const std::filesystem::path& path, const std::vector<const SampleRecord*>& samples);
// Rebuilds chain_id, energy_trace and accept_count from a trace file.
std::vector<SampleRecord> read_trace_csv(const std::filesystem::path& path);

struct ReportInputs {
  std::vector<SampleRecord> samples;
  int n_classes = 1;
  std::optional<BinaryMask> ground_truth;
  std::optional<BaselineResult> baseline;
  std::optional<ScalarField> image;  // backdrop of the overlay
};

// pr.csv (with ground truth), counts.csv, h.pgm, mcb_overlay.png,
// energy_trace.csv, class_traces.csv, top_samples.csv, pr_scatter.svg.
void emit_report(const ReportInputs& in, const std::filesystem::path& out_dir);

}  // namespace shapemc
