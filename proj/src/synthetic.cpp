#include "shapemc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shapemc/error.hpp"
#include "shapemc/rng.hpp"

namespace shapemc::synth {

void fill_polygon(BinaryMask& mask, const std::vector<Point>& v) {
  const GridDims dims = mask.dims();
  const std::size_t n = v.size();
  if (n < 3) throw InvalidArgument("polygon needs at least 3 vertices");
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      bool inside = false;
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((v[i].y > r) != (v[j].y > r)) {
          const double x_cross = v[j].x + (r - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
          if (c < x_cross) inside = !inside;
        }
      }
      if (inside) mask.set(r, c, true);
    }
  }
}

void fill_ellipse(BinaryMask& mask, Point center, double radius_x, double radius_y) {
  const GridDims dims = mask.dims();
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const double dx = (c - center.x) / radius_x;
      const double dy = (r - center.y) / radius_y;
      if (dx * dx + dy * dy <= 1.0) mask.set(r, c, true);
    }
  }
}

void fill_rect(BinaryMask& mask, const PixelRect& rect) {
  const GridDims dims = mask.dims();
  for (int r = std::max(rect.row, 0); r < std::min(rect.row + rect.height, dims.height); ++r) {
    for (int c = std::max(rect.col, 0); c < std::min(rect.col + rect.width, dims.width); ++c) mask.set(r, c, true);
  }
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

PixelRect clip(PixelRect r, GridDims dims) {
  const int r0 = std::max(r.row, 0);
  const int c0 = std::max(r.col, 0);
  const int r1 = std::min(r.row + r.height, dims.height);
  const int c1 = std::min(r.col + r.width, dims.width);
  return PixelRect{r0, c0, std::max(r1 - r0, 0), std::max(c1 - c0, 0)};
}

}  // namespace

std::vector<OccludedShape> aircraft_corpus(int count, int size, std::uint64_t seed) {
  if (count < 1 || size < 32) throw InvalidArgument("aircraft corpus needs count >= 1 and size >= 32");
  const GridDims dims{size, size};
  const double s = size / 64.0;
  Rng rng(seed);
  std::vector<OccludedShape> out;
  for (int k = 0; k < count; ++k) {
    const double cx = 31.5 * s;
    const double half_len = uniform(rng, 22.0, 26.0) * s;
    const double half_w = uniform(rng, 3.0, 4.5) * s;
    const double span = uniform(rng, 20.0, 28.0) * s;
    const double wing_row = uniform(rng, 24.0, 30.0) * s;
    const double chord = uniform(rng, 7.0, 10.0) * s;
    const double sweep = uniform(rng, 2.0, 10.0) * s;
    const double tip_chord = uniform(rng, 2.5, 4.0) * s;
    const double tail_span = uniform(rng, 7.0, 11.0) * s;
    const double tail_row = 32.0 * s + half_len - 6.0 * s;

    BinaryMask mask(dims);
    fill_ellipse(mask, Point{cx, 32.0 * s}, half_w, half_len);
    for (double side : {-1.0, 1.0}) {
      fill_polygon(mask, {Point{cx, wing_row},
                          Point{cx + side * span, wing_row + sweep},
                          Point{cx + side * span, wing_row + sweep + tip_chord},
                          Point{cx, wing_row + chord}});
      fill_polygon(mask, {Point{cx, tail_row},
                          Point{cx + side * tail_span, tail_row + 3.0 * s},
                          Point{cx + side * tail_span, tail_row + 5.5 * s},
                          Point{cx, tail_row + 4.0 * s}});
    }
    // left wing beyond the fuselage
    const int occ_right = static_cast<int>(std::floor(cx - half_w - 1.0));
    const int occ_top = static_cast<int>(std::floor(wing_row - 1.0));
    const int occ_bottom = static_cast<int>(std::ceil(wing_row + std::max(chord, sweep + tip_chord) + 1.0));
    const PixelRect occ = clip(PixelRect{occ_top, 0, occ_bottom - occ_top, occ_right}, dims);
    out.push_back(OccludedShape{RawShape{"aircraft/" + std::to_string(k), "aircraft", std::move(mask)}, occ});
  }
  return out;
}

namespace {

// Shared lower body plus a class-specific top. `jitter` in [0,1]^4 varies
// the member.
BinaryMask three_class_member(int cls, const double* jitter, int size) {
  const double s = size / 64.0;
  const GridDims dims{size, size};
  BinaryMask mask(dims);
  const double body_half = (10.0 + 3.0 * jitter[0]) * s;
  const double body_top = (32.0 + 2.0 * jitter[1]) * s;
  const double body_bottom = (54.0 + 3.0 * jitter[2]) * s;
  const double cx = 31.5 * s;
  fill_polygon(mask, {Point{cx - body_half, body_top}, Point{cx + body_half, body_top},
                      Point{cx + body_half, body_bottom}, Point{cx - body_half, body_bottom}});
  const double top_h = (16.0 + 4.0 * jitter[3]) * s;
  switch (cls) {
    case 0:  // arch
      fill_ellipse(mask, Point{cx, body_top}, body_half, top_h);
      break;
    case 1:  // peak
      fill_polygon(mask, {Point{cx - body_half, body_top + 0.5}, Point{cx, body_top - top_h},
                          Point{cx + body_half, body_top + 0.5}});
      break;
    default: {  // block: narrow tower
      const double tower = body_half * 0.55;
      fill_polygon(mask, {Point{cx - tower, body_top + 0.5}, Point{cx - tower, body_top - top_h},
                          Point{cx + tower, body_top - top_h}, Point{cx + tower, body_top + 0.5}});
      break;
    }
  }
  return mask;
}

}  // namespace

MulticlassCorpus three_class_corpus(int per_class, int size, std::uint64_t seed) {
  if (per_class < 1 || size < 32) throw InvalidArgument("three-class corpus needs per_class >= 1 and size >= 32");
  static const char* names[] = {"arch", "peak", "block"};
  Rng rng(seed);
  MulticlassCorpus corpus;
  double jitter[4];
  for (int cls = 0; cls < 3; ++cls) {
    for (int k = 0; k < per_class; ++k) {
      for (double& j : jitter) j = uniform01(rng);
      corpus.training.push_back(
          RawShape{std::string(names[cls]) + "/" + std::to_string(k), names[cls], three_class_member(cls, jitter, size)});
    }
  }
  for (double& j : jitter) j = uniform01(rng);
  corpus.test_class = 0;
  corpus.test_mask = three_class_member(corpus.test_class, jitter, size);
  const double s = size / 64.0;
  // everything above the body except the lowest 8 rows of the top
  const int occ_bottom = static_cast<int>(std::floor((32.0 + 2.0 * jitter[1]) * s - 8.0 * s));
  corpus.occlusion = PixelRect{0, 0, std::max(occ_bottom, 1), size};
  return corpus;
}

BinaryMask composite_shape(int upper, int lower, int variants, int size) {
  if (variants < 1 || upper < 0 || upper >= variants || lower < 0 || lower >= variants) {
    throw InvalidArgument("composite part index out of range");
  }
  const double s = size / 64.0;
  const double u = variants > 1 ? static_cast<double>(upper) / (variants - 1) : 0.5;
  const double l = variants > 1 ? static_cast<double>(lower) / (variants - 1) : 0.5;
  const double cx = 31.5 * s;
  const double mid = 32.0 * s;
  BinaryMask mask(GridDims{size, size});
  // upper: ellipse from narrow-tall to wide-flat
  fill_ellipse(mask, Point{cx, mid - 12.0 * s}, (6.0 + 14.0 * u) * s, (13.0 - 4.0 * u) * s);
  // lower: trapezoid under a common neck, foot width and lean varying
  const double neck = 5.0 * s;
  const double foot = (5.0 + 17.0 * l) * s;
  const double lean = (l - 0.5) * 10.0 * s;
  fill_polygon(mask, {Point{cx - neck, mid - 2.0 * s}, Point{cx + neck, mid - 2.0 * s},
                      Point{cx + foot + lean, mid + 24.0 * s}, Point{cx - foot + lean, mid + 24.0 * s}});
  return mask;
}

CompositeCorpus composite_corpus(int variants, int n_tests, int size) {
  if (variants < 3) throw InvalidArgument("composite corpus needs at least 3 variants");
  CompositeCorpus corpus;
  corpus.variants = variants;
  for (int i = 0; i < variants; ++i) {
    for (int j : {i, (i + 1) % variants}) {
      corpus.training.push_back(RawShape{"composite/" + std::to_string(i) + "_" + std::to_string(j), "composite",
                                         composite_shape(i, j, variants, size)});
    }
  }
  // held-out pairs, farthest offsets first
  std::vector<std::pair<int, int>> pairs;
  for (int offset = variants / 2; offset >= 2 && static_cast<int>(pairs.size()) < n_tests; --offset) {
    for (int sign : {1, -1}) {
      for (int i = 0; i < variants && static_cast<int>(pairs.size()) < n_tests; ++i) {
        const int j = ((i + sign * offset) % variants + variants) % variants;
        if (j == i || j == (i + 1) % variants) continue;
        if (std::find(pairs.begin(), pairs.end(), std::make_pair(i, j)) != pairs.end()) continue;
        pairs.emplace_back(i, j);
      }
    }
  }
  for (auto [i, j] : pairs) {
    corpus.tests.push_back(RawShape{"composite/" + std::to_string(i) + "_" + std::to_string(j), "composite",
                                    composite_shape(i, j, variants, size)});
  }
  return corpus;
}

}  // namespace shapemc::synth
