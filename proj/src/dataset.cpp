#include "shapemc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "shapemc/error.hpp"
#include "shapemc/image_io.hpp"

namespace shapemc {
namespace fs = std::filesystem;

namespace {

bool is_shape_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::uint32_t read_be32(std::istream& in, const fs::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path.string() + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace

std::vector<RawShape> load_shape_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<RawShape> out;
  std::optional<GridDims> dims;
  for (const fs::path& class_dir : sorted_entries(root)) {
    if (!fs::is_directory(class_dir)) continue;
    const std::string class_name = class_dir.filename().string();
    for (const fs::path& file : sorted_entries(class_dir)) {
      if (!fs::is_regular_file(file) || !is_shape_file(file)) continue;
      BinaryMask mask = io::read_mask(file);
      if (dims && mask.dims() != *dims) {
        throw DimensionMismatch(file.string() + ": " + std::to_string(mask.dims().height) + "x" +
                                std::to_string(mask.dims().width) + " differs from corpus " +
                                std::to_string(dims->height) + "x" + std::to_string(dims->width));
      }
      dims = mask.dims();
      out.push_back(RawShape{class_name + "/" + file.stem().string(), class_name, std::move(mask)});
    }
  }
  if (out.empty()) throw IoError("no shapes under " + root.string());
  return out;
}

std::vector<RawShape> load_idx_digits(const fs::path& images_path, const fs::path& labels_path, int per_class,
                                      int binarize_threshold) {
  if (per_class < 1) throw InvalidArgument("per_class must be at least 1");
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw IoError("cannot open " + images_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot open " + labels_path.string());

  if (read_be32(images, images_path) != 2051) throw FormatError(images_path.string() + ": bad image magic");
  if (read_be32(labels, labels_path) != 2049) throw FormatError(labels_path.string() + ": bad label magic");
  const std::uint32_t n_images = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);
  const std::uint32_t n_labels = read_be32(labels, labels_path);
  if (n_images != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n_images) + " images vs " + std::to_string(n_labels) +
                      " labels");
  }
  const GridDims dims{static_cast<int>(rows), static_cast<int>(cols)};
  validate(dims);

  std::map<int, std::vector<RawShape>> by_label;
  std::vector<std::uint8_t> pixels(dims.size());
  for (std::uint32_t i = 0; i < n_images; ++i) {
    char label_byte = 0;
    if (!labels.read(&label_byte, 1)) throw FormatError(labels_path.string() + ": truncated labels");
    if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
      throw FormatError(images_path.string() + ": truncated images");
    }
    const int label = static_cast<unsigned char>(label_byte);
    auto& bucket = by_label[label];
    if (static_cast<int>(bucket.size()) >= per_class) continue;
    std::vector<std::uint8_t> inside(dims.size());
    for (std::size_t k = 0; k < inside.size(); ++k) inside[k] = pixels[k] >= binarize_threshold ? 1 : 0;
    bucket.push_back(RawShape{std::to_string(label) + "/" + std::to_string(i), std::to_string(label),
                              BinaryMask(dims, std::move(inside))});
  }
  std::vector<RawShape> out;
  for (auto& [label, shapes] : by_label) {
    for (auto& s : shapes) out.push_back(std::move(s));
  }
  return out;
}

double noise_variance_for_snr(const BinaryMask& observed_foreground, double fg, double bg, double snr_db) {
  if (observed_foreground.count() == 0) throw InvalidArgument("SNR undefined: no visible foreground");
  const double signal_power = (fg - bg) * (fg - bg);
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

TestCase synthesize_test(const BinaryMask& mask, const SynthesisOptions& options, Rng& rng, std::string source_id) {
  const GridDims dims = mask.dims();
  validate(dims);
  BinaryMask visible = mask;
  if (options.occlusion) {
    const PixelRect& r = *options.occlusion;
    if (r.height < 1 || r.width < 1 || r.row < 0 || r.col < 0 || r.row + r.height > dims.height ||
        r.col + r.width > dims.width) {
      throw InvalidArgument("occlusion rectangle outside the image");
    }
    for (int y = r.row; y < r.row + r.height; ++y) {
      for (int x = r.col; x < r.col + r.width; ++x) visible.set(y, x, false);
    }
  }
  TestCase tc;
  tc.source_id = std::move(source_id);
  tc.ground_truth = mask;
  tc.occlusion = options.occlusion;
  tc.snr_db = options.snr_db;
  tc.image = ScalarField(dims);
  for (std::size_t i = 0; i < dims.size(); ++i) tc.image[i] = visible[i] ? options.fg : options.bg;
  if (options.snr_db) {
    const double sd = std::sqrt(noise_variance_for_snr(visible, options.fg, options.bg, *options.snr_db));
    std::normal_distribution<double> noise(0.0, sd);
    for (std::size_t i = 0; i < dims.size(); ++i) tc.image[i] += noise(rng);
  }
  return tc;
}

Split leave_one_out(std::size_t corpus_size, std::size_t index) {
  if (index >= corpus_size) throw InvalidArgument("leave-one-out index out of range");
  Split s;
  s.test = index;
  for (std::size_t i = 0; i < corpus_size; ++i) {
    if (i != index) s.train.push_back(i);
  }
  return s;
}

std::vector<RawShape> subset(const std::vector<RawShape>& corpus, const std::vector<std::size_t>& indices) {
  std::vector<RawShape> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(corpus.at(i));
  return out;
}

void write_test_case(const fs::path& dir, const TestCase& tc) {
  fs::create_directories(dir);
  io::write_scalar_image_pgm(dir / "image.pgm", tc.image);
  // exact intensities; the PGM is rounded and clamped to 0..255
  io::write_field_csv(dir / "image.csv", tc.image);
  io::write_mask(dir / "gt.png", tc.ground_truth);
  nlohmann::ordered_json meta;
  meta["source_id"] = tc.source_id;
  meta["height"] = tc.image.dims().height;
  meta["width"] = tc.image.dims().width;
  if (tc.occlusion) {
    // x, y, w, h as on the command line
    meta["occlusion"] = {tc.occlusion->col, tc.occlusion->row, tc.occlusion->width, tc.occlusion->height};
  } else {
    meta["occlusion"] = nullptr;
  }
  meta["snr_db"] = tc.snr_db ? nlohmann::ordered_json(*tc.snr_db) : nlohmann::ordered_json(nullptr);
  meta["held_out"] = tc.held_out ? nlohmann::ordered_json(*tc.held_out) : nlohmann::ordered_json(nullptr);
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

TestCase read_test_case(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("no test case at " + dir.string());
  TestCase tc;
  tc.image = fs::exists(dir / "image.csv") ? io::read_field_csv(dir / "image.csv")
                                           : io::read_scalar_image(dir / "image.pgm");
  tc.ground_truth = io::read_mask(dir / "gt.png");
  require_same_dims(tc.image.dims(), tc.ground_truth.dims(), "test case image vs ground truth");
  if (fs::exists(dir / "meta.json")) {
    std::ifstream in(dir / "meta.json");
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError((dir / "meta.json").string() + ": " + e.what());
    }
    tc.source_id = meta.value("source_id", std::string{});
    if (meta.contains("occlusion") && meta["occlusion"].is_array()) {
      const auto& o = meta["occlusion"];
      tc.occlusion = PixelRect{o.at(1).get<int>(), o.at(0).get<int>(), o.at(3).get<int>(), o.at(2).get<int>()};
    }
    if (meta.contains("snr_db") && meta["snr_db"].is_number()) tc.snr_db = meta["snr_db"].get<double>();
    if (meta.contains("held_out") && meta["held_out"].is_string()) tc.held_out = meta["held_out"].get<std::string>();
  }
  return tc;
}

void write_shape_dir(const fs::path& root, const std::vector<RawShape>& shapes) {
  for (const RawShape& s : shapes) {
    std::string stem = s.id;
    const auto slash = stem.rfind('/');
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    const fs::path dir = root / s.class_name;
    fs::create_directories(dir);
    io::write_mask(dir / (stem + ".png"), s.mask);
  }
}

}  // namespace shapemc
