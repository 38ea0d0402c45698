#pragma once

// Shape corpora and synthetic test images.
//
// Directory corpora are laid out as <root>/<class>/<shape>.png|pgm. Digit
// corpora come from the standard big-endian IDX image/label file pair.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shapemc/alignment.hpp"
#include "shapemc/grid.hpp"
#include "shapemc/rng.hpp"

namespace shapemc {

// Sorted by class directory name, then by file name.
std::vector<RawShape> load_shape_dir(const std::filesystem::path& root);

// First `per_class` images of each label, in file order, binarized as
// pixel >= threshold.
std::vector<RawShape> load_idx_digits(const std::filesystem::path& images_path,
                                      const std::filesystem::path& labels_path, int per_class,
                                      int binarize_threshold = 128);

struct TestCase {
  std::string source_id;
  ScalarField image;
  BinaryMask ground_truth;
  std::optional<PixelRect> occlusion;
  std::optional<double> snr_db;
  // training shape to exclude when this case came from a leave-one-out split
  std::optional<std::string> held_out;
};

struct SynthesisOptions {
  std::optional<PixelRect> occlusion;
  std::optional<double> snr_db;
  double fg = 200.0;
  double bg = 50.0;
};

// fg inside, bg outside, occlusion forced to bg, then white Gaussian noise
// with variance mean((fg-bg)^2 over the occluded foreground) / 10^(snr/10).
TestCase synthesize_test(const BinaryMask& mask, const SynthesisOptions& options, Rng& rng,
                         std::string source_id = {});

// Noise variance matching `snr_db` for the given occluded image.
double noise_variance_for_snr(const BinaryMask& observed_foreground, double fg, double bg, double snr_db);

struct Split {
  std::vector<std::size_t> train;
  std::size_t test = 0;
};

Split leave_one_out(std::size_t corpus_size, std::size_t index);
std::vector<RawShape> subset(const std::vector<RawShape>& corpus, const std::vector<std::size_t>& indices);

// cases/<id>/{image.pgm, gt.png, meta.json}
void write_test_case(const std::filesystem::path& dir, const TestCase& tc);
TestCase read_test_case(const std::filesystem::path& dir);

void write_shape_dir(const std::filesystem::path& root, const std::vector<RawShape>& shapes);

}  // namespace shapemc
