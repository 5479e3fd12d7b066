#include "densetrack/features.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, what);
}

[[noreturn]] void precondition(const std::string& what) {
  throw Error(ErrorCode::kPreconditionViolation, what);
}

constexpr int kMaxExhaustiveDim = 12;

// Uniformly random k-subset of [0, n) as a bitmask, by partial Fisher-Yates.
std::uint64_t random_subset(std::mt19937_64& rng, std::vector<int>& scratch, int k) {
  std::iota(scratch.begin(), scratch.end(), 0);
  std::uint64_t mask = 0;
  const int n = static_cast<int>(scratch.size());
  for (int i = 0; i < k; ++i) {
    const int j = std::uniform_int_distribution<int>(i, n - 1)(rng);
    std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
    mask |= std::uint64_t{1} << scratch[static_cast<std::size_t>(i)];
  }
  return mask;
}

// f^T (f^M - f^F) > 0 for binary vectors given as bitmasks.
bool positive_margin(std::uint64_t f, std::uint64_t m, std::uint64_t b) {
  return std::popcount(f & m) > std::popcount(f & b);
}

}  // namespace

int grid_cols(const BoundingBox& box) {
  return std::max(1, static_cast<int>(std::lround(box.width)));
}

int grid_rows(const BoundingBox& box) {
  return std::max(1, static_cast<int>(std::lround(box.height)));
}

Vec2 grid_pixel_center(const BoundingBox& box, int row, int col) {
  return {box.left + (col + 0.5) * box.width / grid_cols(box),
          box.top + (row + 0.5) * box.height / grid_rows(box)};
}

Mask::Mask(int rows, int cols, bool value) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) invalid("mask dimensions must be non-negative");
  bits_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), value ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (const double v : values) s += v * v;
  return std::sqrt(s);
}

FeatureLayout FeatureLayout::for_dimension(std::size_t d) {
  // Single intensity channel: d = 2 g^2.
  if (d >= 2 && d % 2 == 0) {
    const auto g = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d / 2))));
    if (g >= 1 && g * g * 2 == d) return {static_cast<int>(g), 1};
  }
  invalid("feature dimension must equal 2*g*g for a g x g pooling grid");
}

std::string encode_mask_rle(const Mask& mask) {
  std::string out;
  for (int r = 0; r < mask.rows(); ++r) {
    if (r > 0) out += '|';
    bool first = true;
    int c = 0;
    while (c < mask.cols()) {
      if (!mask.at(r, c)) {
        ++c;
        continue;
      }
      const int start = c;
      while (c < mask.cols() && mask.at(r, c)) ++c;
      if (!first) out += ';';
      first = false;
      out += std::to_string(start);
      out += ':';
      out += std::to_string(c - start);
    }
  }
  return out;
}

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::kParse, what); }

int parse_int(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    parse_error("mask RLE: expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Mask decode_mask_rle(std::string_view rle, int rows, int cols) {
  if (rows < 0 || cols < 0) invalid("mask dimensions must be non-negative");
  Mask mask(rows, cols);
  if (rows == 0) {
    if (!rle.empty()) parse_error("mask RLE has more rows than declared");
    return mask;
  }
  int r = 0;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t bar = rle.find('|', pos);
    const std::string_view row = rle.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
    if (r >= rows) parse_error("mask RLE has more rows than declared");
    std::size_t q = 0;
    int previous_end = -1;
    while (q < row.size()) {
      const std::size_t semi = row.find(';', q);
      const std::string_view run = row.substr(q, semi == std::string_view::npos ? std::string_view::npos : semi - q);
      const std::size_t colon = run.find(':');
      if (colon == std::string_view::npos) parse_error("mask RLE run lacks ':'");
      const int start = parse_int(run.substr(0, colon));
      const int len = parse_int(run.substr(colon + 1));
      if (start < 0 || len <= 0 || start + len > cols || start <= previous_end) {
        parse_error("mask RLE run out of range or out of order");
      }
      for (int c = start; c < start + len; ++c) mask.set(r, c, true);
      previous_end = start + len;
      if (semi == std::string_view::npos) break;
      q = semi + 1;
      if (q == row.size()) parse_error("mask RLE row ends with ';'");
    }
    ++r;
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  if (r != rows) parse_error("mask RLE row count does not match");
  return mask;
}

SegmentedBox segment_box(const Patch& patch, const Mask& mask, const BoundingBox& bbox) {
  if (patch.rows != mask.rows() || patch.cols != mask.cols()) {
    invalid("patch and mask dimensions differ");
  }
  if (patch.pixels.size() != static_cast<std::size_t>(patch.rows) * static_cast<std::size_t>(patch.cols)) {
    invalid("patch pixel buffer does not match its dimensions");
  }
  SegmentedBox out;
  out.bbox = bbox.valid() ? bbox : BoundingBox{0.0, 0.0, static_cast<double>(patch.cols),
                                               static_cast<double>(patch.rows)};
  out.mask = mask;
  out.pixels = Patch(patch.rows, patch.cols, kCanvasWhite);
  for (int r = 0; r < patch.rows; ++r) {
    for (int c = 0; c < patch.cols; ++c) {
      if (mask.at(r, c)) out.pixels.at(r, c) = patch.at(r, c);
    }
  }
  return out;
}

FeatureVector extract_feature(const SegmentedBox& sb, std::size_t d) {
  const FeatureLayout layout = FeatureLayout::for_dimension(d);
  const int g = layout.grid;
  const int rows = sb.pixels.rows;
  const int cols = sb.pixels.cols;

  FeatureVector out;
  out.values.assign(d, 0.0);
  for (int gr = 0; gr < g; ++gr) {
    const int r0 = gr * rows / g;
    const int r1 = (gr + 1) * rows / g;
    for (int gc = 0; gc < g; ++gc) {
      const int c0 = gc * cols / g;
      const int c1 = (gc + 1) * cols / g;
      const int total = (r1 - r0) * (c1 - c0);
      if (total == 0) continue;
      int masked = 0;
      double intensity = 0.0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          if (!sb.mask.at(r, c)) continue;
          ++masked;
          intensity += sb.pixels.at(r, c);
        }
      }
      if (masked == 0) continue;
      const auto cell = static_cast<std::size_t>(2 * (gr * g + gc));
      out.values[cell] = static_cast<double>(masked) / total;
      out.values[cell + 1] = intensity / masked;
    }
  }
  out.sparsity = static_cast<std::size_t>(std::count(out.values.begin(), out.values.end(), 0.0));
  out.degenerate = out.sparsity == d;
  return out;
}

double cosine_distance(const FeatureVector& a, const FeatureVector& b) {
  if (a.values.size() != b.values.size()) invalid("feature vectors differ in dimension");
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ab += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) {
    throw Error(ErrorCode::kDegenerateFeature, "cosine distance of a zero-norm feature");
  }
  return std::clamp(1.0 - ab / std::sqrt(aa * bb), 0.0, 2.0);
}

double lemma1_probability(long a_count, long b_count) {
  if (!(b_count > 0)) precondition("lemma 1 needs B > 0");
  if (!(a_count > b_count)) precondition("lemma 1 needs A > B");
  return 1.0 - static_cast<double>(b_count) / static_cast<double>(a_count);
}

double lemma1_empirical(int dim, int x, int y, std::optional<std::size_t> trials, std::uint64_t seed) {
  if (!(y >= 1 && x > y && dim >= x)) precondition("lemma 1 oracle needs dim >= x > y >= 1");
  if (dim > 63) precondition("lemma 1 oracle supports dim <= 63");

  if (!trials) {
    if (dim > kMaxExhaustiveDim) precondition("exhaustive enumeration needs dim <= 12");
    // Every placement of f^M is a coordinate permutation of the first x
    // coordinates, which leaves the fraction unchanged; enumerate f^F and f.
    const std::uint64_t m = (std::uint64_t{1} << x) - 1;
    const std::uint64_t all = std::uint64_t{1} << dim;
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    for (std::uint64_t b = 0; b < all; ++b) {
      if (std::popcount(b) != y) continue;
      for (std::uint64_t f = 0; f < all; ++f) {
        hits += positive_margin(f, m, b) ? 1 : 0;
      }
      total += all;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
  }

  if (*trials == 0) precondition("lemma 1 oracle needs at least one trial");
  std::mt19937_64 rng(seed);
  std::vector<int> scratch(static_cast<std::size_t>(dim));
  const std::uint64_t full = dim == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << dim) - 1;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < *trials; ++t) {
    const std::uint64_t m = random_subset(rng, scratch, x);
    const std::uint64_t b = random_subset(rng, scratch, y);
    const std::uint64_t f = rng() & full;
    hits += positive_margin(f, m, b) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(*trials);
}

}  // namespace densetrack
