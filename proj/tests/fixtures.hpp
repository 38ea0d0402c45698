#pragma once

// Small hand-built inputs shared by the test suites.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "shapemc/alignment.hpp"
#include "shapemc/grid.hpp"

namespace fixture {

using namespace shapemc;

// Training set from already aligned masks, one vector per class.
inline TrainingSet training_set(const std::vector<std::vector<BinaryMask>>& classes, double sigma) {
  std::vector<ShapeClass> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    ShapeClass c{"c" + std::to_string(i), {}};
    for (std::size_t j = 0; j < classes[i].size(); ++j) {
      c.shapes.push_back(AlignedShape{c.name + "/" + std::to_string(j), static_cast<int>(i), classes[i][j],
                                      mask_to_sdf(classes[i][j]), Pose{}});
    }
    out.push_back(std::move(c));
  }
  return TrainingSet(classes.at(0).at(0).dims(), std::move(out), KernelParams{sigma}, "c0/0");
}

// Piecewise-constant image of a mask plus Gaussian noise.
inline ScalarField noisy_image(const BinaryMask& m, double fg, double bg, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  ScalarField img(m.dims());
  for (std::size_t i = 0; i < m.size(); ++i) img[i] = (m[i] ? fg : bg) + (sd > 0 ? n(rng) : 0.0);
  return img;
}

inline std::vector<double> random_direction(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  double norm = 0;
  for (auto& x : v) {
    x = d(rng);
    norm += x * x;
  }
  for (auto& x : v) x /= std::sqrt(norm);
  return v;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("shapemc_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixture
