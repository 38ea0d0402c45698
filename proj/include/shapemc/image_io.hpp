#pragma once

// Grayscale/RGB image files (8-bit PNG, binary or ASCII PGM) and flat CSV
// dumps of scalar fields. Masks binarize at >= 128.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "shapemc/grid.hpp"

namespace shapemc::io {

struct GrayImage {
  GridDims dims;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Dispatches on extension: .png or .pgm (P2 / P5, maxval <= 255).
GrayImage read_gray(const std::filesystem::path& path);
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);
void write_gray_pgm(const std::filesystem::path& path, const GrayImage& image);

// 8-bit RGB, interleaved.
void write_rgb_png(const std::filesystem::path& path, GridDims dims, const std::vector<std::uint8_t>& rgb);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask gray_to_mask(const GrayImage& image, int threshold = 128);

// Pixel values 0..255 as reals.
ScalarField read_scalar_image(const std::filesystem::path& path);
// Values rounded and clamped to 0..255, no rescaling.
void write_scalar_image_pgm(const std::filesystem::path& path, const ScalarField& field);
// Min-max scaled to 0..255 for inspection; a constant field maps to 0.
void write_field_pgm_scaled(const std::filesystem::path& path, const ScalarField& field);

// Header line "height,width" then one value per line, row-major,
// printed with 17 significant digits so reading back is exact.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_csv(const std::filesystem::path& path);

}  // namespace shapemc::io
