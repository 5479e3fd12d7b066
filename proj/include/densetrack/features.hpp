#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "densetrack/geometry.hpp"

namespace densetrack {

// Pixel box: top-left corner, width m, height n.
struct BoundingBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const { return left + width; }
  double bottom() const { return top + height; }
  Vec2 center() const { return {left + 0.5 * width, top + 0.5 * height}; }
  double area() const { return width * height; }
  bool valid() const { return width > 0.0 && height > 0.0; }
  bool operator==(const BoundingBox&) const = default;
};

// Pixel grid that covers a bounding box: lround of each dimension, at least 1.
int grid_cols(const BoundingBox& box);
int grid_rows(const BoundingBox& box);
// Image-space centre of pixel (row, col) of the grid covering `box`.
Vec2 grid_pixel_center(const BoundingBox& box, int row, int col);

class Mask {
 public:
  Mask() = default;
  Mask(int rows, int cols, bool value = false);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  bool at(int r, int c) const { return bits_[index(r, c)] != 0; }
  void set(int r, int c, bool value) { bits_[index(r, c)] = value ? 1 : 0; }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Single-channel intensity patch, values in [0, 1], row-major.
struct Patch {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;

  Patch() = default;
  Patch(int r, int c, float value = 1.0f)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), value) {}

  float at(int r, int c) const { return pixels[static_cast<std::size_t>(r * cols + c)]; }
  float& at(int r, int c) { return pixels[static_cast<std::size_t>(r * cols + c)]; }
  bool operator==(const Patch&) const = default;
};

inline constexpr float kCanvasWhite = 1.0f;

struct SegmentedBox {
  BoundingBox bbox;
  Patch pixels;  // patch where the mask is set, kCanvasWhite elsewhere
  Mask mask;
};

struct FeatureVector {
  std::vector<double> values;
  std::size_t sparsity = 0;  // number of exact zeros
  bool degenerate = false;   // all-zero (empty mask)

  double norm() const;
};

struct FeatureLayout {
  int grid = 8;
  int channels = 1;

  std::size_t dimension() const {
    return static_cast<std::size_t>(grid * grid * (1 + channels));
  }
  static FeatureLayout for_dimension(std::size_t d);
};

// Per-row run-length encoding: rows joined by '|', each row a ';'-separated
// list of `start:len` runs of set pixels (empty for an all-false row).
std::string encode_mask_rle(const Mask& mask);
// Throws Error(kParse) on malformed text or runs outside `cols`.
Mask decode_mask_rle(std::string_view rle, int rows, int cols);

SegmentedBox segment_box(const Patch& patch, const Mask& mask, const BoundingBox& bbox = {});

// Grid-pooled descriptor: per cell the mask occupancy fraction followed by
// the mean masked intensity. Cells without mask pixels are exact zeros.
FeatureVector extract_feature(const SegmentedBox& sb, std::size_t d = 128);

double cosine_distance(const FeatureVector& a, const FeatureVector& b);

// 1 - B/A; requires A > B > 0.
double lemma1_probability(long a_count, long b_count);

// Fraction of placements with f^T (f^M - f^F) > 0, where f^M and f^F are
// binary with L0 norms x > y placed uniformly at random and f is uniform
// over {0,1}^dim. `trials == nullopt` enumerates every placement (dim <= 12).
double lemma1_empirical(int dim, int x, int y, std::optional<std::size_t> trials,
                        std::uint64_t seed = 0);

}  // namespace densetrack
