#include "shapemc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include "shapemc/error.hpp"

namespace shapemc::io {
namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

GrayImage read_png(const fs::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  GrayImage image;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(width)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": unsupported PNG layout");
  }
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (int r = 0; r < height; ++r) rows[r] = buffer.data() + rowbytes * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  image.dims = GridDims{height, width};
  image.pixels = std::move(buffer);
  return image;
}

void write_png(const fs::path& path, GridDims dims, const std::uint8_t* data, int channels) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  std::vector<png_bytep> rows(dims.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, dims.width, dims.height, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < dims.height; ++r) {
    rows[r] = const_cast<png_bytep>(data + static_cast<std::size_t>(r) * dims.width * channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Next whitespace-delimited token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw FormatError(path.string() + ": not a PGM file");
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(pgm_token(in));
    height = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad PGM header");
  }
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw FormatError(path.string() + ": unsupported PGM header");
  }
  GrayImage image{GridDims{height, width}, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
      throw FormatError(path.string() + ": truncated PGM");
    }
  } else {
    for (auto& p : image.pixels) {
      const std::string tok = pgm_token(in);
      if (tok.empty()) throw FormatError(path.string() + ": truncated PGM");
      p = static_cast<std::uint8_t>(std::stoi(tok));
    }
  }
  if (maxval != 255) {
    for (auto& p : image.pixels) p = static_cast<std::uint8_t>(std::lround(p * 255.0 / maxval));
  }
  return image;
}

}  // namespace

GrayImage read_gray(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw FormatError(path.string() + ": unsupported image extension");
}

void write_gray_png(const fs::path& path, const GrayImage& image) {
  write_png(path, image.dims, image.pixels.data(), 1);
}

void write_gray_pgm(const fs::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.dims.width << ' ' << image.dims.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_rgb_png(const fs::path& path, GridDims dims, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != dims.size() * 3) throw InvalidArgument("write_rgb_png: buffer size does not match dims");
  write_png(path, dims, rgb.data(), 3);
}

BinaryMask gray_to_mask(const GrayImage& image, int threshold) {
  std::vector<std::uint8_t> inside(image.pixels.size());
  for (std::size_t i = 0; i < inside.size(); ++i) inside[i] = image.pixels[i] >= threshold ? 1 : 0;
  return BinaryMask(image.dims, std::move(inside));
}

BinaryMask read_mask(const fs::path& path) { return gray_to_mask(read_gray(path)); }

void write_mask(const fs::path& path, const BinaryMask& mask) {
  GrayImage image{mask.dims(), std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) image.pixels[i] = mask[i] ? 255 : 0;
  if (lower_extension(path) == ".pgm") {
    write_gray_pgm(path, image);
  } else {
    write_gray_png(path, image);
  }
}

ScalarField read_scalar_image(const fs::path& path) {
  const GrayImage image = read_gray(path);
  ScalarField field(image.dims);
  for (std::size_t i = 0; i < field.size(); ++i) field[i] = image.pixels[i];
  return field;
}

void write_scalar_image_pgm(const fs::path& path, const ScalarField& field) {
  GrayImage image{field.dims(), std::vector<std::uint8_t>(field.size())};
  for (std::size_t i = 0; i < field.size(); ++i) {
    image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(field[i]), 0L, 255L));
  }
  write_gray_pgm(path, image);
}

void write_field_pgm_scaled(const fs::path& path, const ScalarField& field) {
  const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
  const double range = *hi - *lo;
  GrayImage image{field.dims(), std::vector<std::uint8_t>(field.size())};
  for (std::size_t i = 0; i < field.size(); ++i) {
    image.pixels[i] = range > 0.0 ? static_cast<std::uint8_t>(std::lround(255.0 * (field[i] - *lo) / range)) : 0;
  }
  write_gray_pgm(path, image);
}

void write_field_csv(const fs::path& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << field.dims().height << ',' << field.dims().width << '\n';
  out << std::setprecision(17);
  for (double v : field.values()) out << v << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

ScalarField read_field_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const auto comma = header.find(',');
  if (comma == std::string::npos) throw FormatError(path.string() + ": missing dims header");
  GridDims dims{};
  try {
    dims = GridDims{std::stoi(header.substr(0, comma)), std::stoi(header.substr(comma + 1))};
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad dims header");
  }
  validate(dims);
  std::vector<double> values;
  values.reserve(dims.size());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad value '" + line + "'");
    }
  }
  if (values.size() != dims.size()) throw FormatError(path.string() + ": value count does not match dims");
  return ScalarField(dims, std::move(values));
}

}  // namespace shapemc::io
