#pragma once

// Procedural shape corpora for experiments and demos: an aircraft-like
// single-class set, a three-class set with a shared body, and two-part
// composites whose parts vary independently.

#include <cstdint>
#include <optional>
#include <vector>

#include "shapemc/alignment.hpp"
#include "shapemc/grid.hpp"

namespace shapemc::synth {

struct Point {
  double x = 0.0;  // column
  double y = 0.0;  // row
};

// Pixels whose centers fall inside the polygon (even-odd rule) are set.
void fill_polygon(BinaryMask& mask, const std::vector<Point>& vertices);
void fill_ellipse(BinaryMask& mask, Point center, double radius_x, double radius_y);
void fill_rect(BinaryMask& mask, const PixelRect& rect);

struct OccludedShape {
  RawShape shape;
  PixelRect occlusion;
};

// Nose-up aircraft silhouettes with varying fuselage, wing span, sweep and
// tail. Each comes with the rectangle covering its left wing.
std::vector<OccludedShape> aircraft_corpus(int count = 11, int size = 64, std::uint64_t seed = 7);

struct MulticlassCorpus {
  std::vector<RawShape> training;  // classes "arch", "peak", "block"
  BinaryMask test_mask;            // an unseen member of test_class
  int test_class = 0;
  PixelRect occlusion;             // hides most of the distinguishing top
};

MulticlassCorpus three_class_corpus(int per_class = 10, int size = 64, std::uint64_t seed = 11);

struct CompositeCorpus {
  std::vector<RawShape> training;  // part pairs (i, i) and (i, i+1 mod n)
  std::vector<RawShape> tests;     // held-out part pairs
  int variants = 0;
};

// Upper part occupies the top half, lower part the bottom half, so a 2x1
// patch grid separates them.
CompositeCorpus composite_corpus(int variants = 8, int n_tests = 14, int size = 64);
BinaryMask composite_shape(int upper, int lower, int variants, int size);

}  // namespace shapemc::synth
