#include "densetrack/mot_io.hpp"

#include <algorithm>
#include <array>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <type_traits>

#include "densetrack/error.hpp"

namespace densetrack {

namespace {

enum class RowKind { kGt, kHypothesis, kDetection };

[[noreturn]] void parse_failure(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, source + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, std::size_t max_fields = 0) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    if (max_fields != 0 && out.size() + 1 == max_fields) {
      out.push_back(trim(line.substr(pos)));
      return out;
    }
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      return out;
    }
    out.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
}

std::optional<double> to_double(std::string_view s) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<long> to_integer(std::string_view s) {
  const auto d = to_double(s);
  if (!d || *d != std::floor(*d) || std::fabs(*d) > 1e9) return std::nullopt;
  return static_cast<long>(*d);
}

MotSequence parse_rows(std::istream& in, const std::string& source, RowKind kind) {
  MotSequence seq;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text);
    if (fields.size() < 6) parse_failure(source, number, "expected at least 6 comma-separated fields");

    const auto frame = to_integer(fields[0]);
    if (!frame || *frame < 1) parse_failure(source, number, "frame must be a positive integer");
    const auto id = to_integer(fields[1]);
    if (!id) parse_failure(source, number, "id must be an integer");
    if (kind != RowKind::kDetection && *id < 1) parse_failure(source, number, "id must be positive");

    std::array<double, 4> geom{};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = to_double(fields[2 + k]);
      if (!v) parse_failure(source, number, "box field " + std::to_string(k + 1) + " is not a number");
      geom[k] = *v;
    }
    if (geom[2] < 0.0 || geom[3] < 0.0) parse_failure(source, number, "negative box size");

    double confidence = 1.0;
    if (fields.size() > 6) {
      const auto v = to_double(fields[6]);
      if (!v) parse_failure(source, number, "field 7 is not a number");
      if (kind == RowKind::kGt) {
        if (*v == 0.0) continue;  // flag 0: ignored annotation
      } else {
        confidence = *v;
      }
    }
    for (std::size_t k = 7; k < fields.size(); ++k) {
      if (!to_double(fields[k])) parse_failure(source, number, "field " + std::to_string(k + 1) + " is not a number");
    }

    const auto f = static_cast<std::size_t>(*frame);
    seq.ensure_frames(f);
    seq.frames[f - 1].push_back(
        {static_cast<int>(*id), BoundingBox{geom[0], geom[1], geom[2], geom[3]}, confidence});
  }
  if (in.bad()) throw Error(ErrorCode::kIo, source + ": read failed");
  return seq;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::string fixed2(double v) {
  v = quantize_centi(v);
  if (v == 0.0) v = 0.0;  // no "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_rows(std::ostream& out, const MotSequence& seq, RowKind kind) {
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    for (const LabeledBox& b : seq.frames[f]) {
      out << (f + 1) << ',' << (kind == RowKind::kDetection ? -1 : b.id) << ',' << fixed2(b.box.left) << ','
          << fixed2(b.box.top) << ',' << fixed2(b.box.width) << ',' << fixed2(b.box.height) << ',';
      if (kind == RowKind::kGt) {
        out << "1,1,1\n";
      } else {
        out << fixed2(b.confidence) << ",-1,-1,-1\n";
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

template <class T>
void put_le(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <class T>
bool get_le(std::istream& in, T& value) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) return false;
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  value = static_cast<T>(v);
  return true;
}

constexpr std::string_view kPatchMagic = "DTPATCH1";

}  // namespace

std::size_t MotSequence::box_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

MotSequence parse_gt(std::istream& in, const std::string& source) {
  return parse_rows(in, source, RowKind::kGt);
}

MotSequence parse_hypothesis(std::istream& in, const std::string& source) {
  return parse_rows(in, source, RowKind::kHypothesis);
}

MotSequence parse_detections(std::istream& in, const std::string& source) {
  return parse_rows(in, source, RowKind::kDetection);
}

MotSequence read_gt(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_gt(in, path.string());
}

MotSequence read_hypothesis(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_hypothesis(in, path.string());
}

MotSequence read_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detections(in, path.string());
}

void write_gt(std::ostream& out, const MotSequence& seq) { write_rows(out, seq, RowKind::kGt); }

void write_hypothesis(std::ostream& out, const MotSequence& seq) {
  write_rows(out, seq, RowKind::kHypothesis);
}

void write_detections(std::ostream& out, const MotSequence& seq) {
  write_rows(out, seq, RowKind::kDetection);
}

double quantize_centi(double value) { return std::round(value * 100.0) / 100.0; }

BoundingBox quantize_centi(const BoundingBox& box) {
  return {quantize_centi(box.left), quantize_centi(box.top), quantize_centi(box.width),
          quantize_centi(box.height)};
}

MaskTable parse_masks(std::istream& in, const MotSequence& detections, const std::string& source) {
  MaskTable table(detections.frames.size());
  for (std::size_t f = 0; f < table.size(); ++f) table[f].resize(detections.frames[f].size());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, 4);
    if (fields.size() != 4) parse_failure(source, number, "expected frame,det_index,n_rows,rle");
    const auto frame = to_integer(fields[0]);
    const auto index = to_integer(fields[1]);
    const auto rows = to_integer(fields[2]);
    if (!frame || !index || !rows) parse_failure(source, number, "non-integer header field");
    if (*frame < 1 || static_cast<std::size_t>(*frame) > table.size()) {
      parse_failure(source, number, "frame has no detections");
    }
    auto& slots = table[static_cast<std::size_t>(*frame - 1)];
    if (*index < 0 || static_cast<std::size_t>(*index) >= slots.size()) {
      parse_failure(source, number, "det_index out of range");
    }
    const BoundingBox& box = detections.frames[static_cast<std::size_t>(*frame - 1)][static_cast<std::size_t>(*index)].box;
    if (*rows != grid_rows(box)) parse_failure(source, number, "n_rows does not match the detection box");
    auto& slot = slots[static_cast<std::size_t>(*index)];
    if (slot) parse_failure(source, number, "duplicate mask");
    try {
      slot = decode_mask_rle(fields[3], static_cast<int>(*rows), grid_cols(box));
    } catch (const Error& e) {
      parse_failure(source, number, e.what());
    }
  }
  return table;
}

MaskTable read_masks(const std::filesystem::path& path, const MotSequence& detections) {
  auto in = open_input(path);
  return parse_masks(in, detections, path.string());
}

void write_masks(std::ostream& out, const MaskTable& masks) {
  for (std::size_t f = 0; f < masks.size(); ++f) {
    for (std::size_t j = 0; j < masks[f].size(); ++j) {
      if (!masks[f][j]) continue;
      out << (f + 1) << ',' << j << ',' << masks[f][j]->rows() << ',' << encode_mask_rle(*masks[f][j]) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

PatchTable read_patches(const std::filesystem::path& path, const MotSequence& detections) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  const std::string source = path.string();
  std::string magic(kPatchMagic.size(), '\0');
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kPatchMagic) {
    throw Error(ErrorCode::kParse, source + ": bad patch file header");
  }
  PatchTable table(detections.frames.size());
  for (std::size_t f = 0; f < table.size(); ++f) table[f].resize(detections.frames[f].size());
  std::size_t record = 0;
  for (;;) {
    std::uint32_t frame = 0;
    if (!get_le(in, frame)) break;
    ++record;
    std::uint32_t index = 0;
    std::uint16_t cols = 0;
    std::uint16_t rows = 0;
    const auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::kParse, source + ": record " + std::to_string(record) + ": " + what);
    };
    if (!get_le(in, index) || !get_le(in, cols) || !get_le(in, rows)) fail("truncated header");
    if (frame < 1 || frame > table.size() || index >= table[frame - 1].size()) fail("no matching detection");
    std::string bytes(static_cast<std::size_t>(cols) * rows, '\0');
    if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) fail("truncated pixels");
    auto& slot = table[frame - 1][index];
    if (slot) fail("duplicate patch");
    Patch p(rows, cols);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      p.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
    }
    slot = std::move(p);
  }
  return table;
}

void write_patches(std::ostream& out, const PatchTable& patches) {
  out.write(kPatchMagic.data(), static_cast<std::streamsize>(kPatchMagic.size()));
  for (std::size_t f = 0; f < patches.size(); ++f) {
    for (std::size_t j = 0; j < patches[f].size(); ++j) {
      if (!patches[f][j]) continue;
      const Patch& p = *patches[f][j];
      put_le(out, static_cast<std::uint32_t>(f + 1));
      put_le(out, static_cast<std::uint32_t>(j));
      put_le(out, static_cast<std::uint16_t>(p.cols));
      put_le(out, static_cast<std::uint16_t>(p.rows));
      for (const float v : p.pixels) {
        out.put(static_cast<char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

SeqInfo read_seqinfo(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::kParse : ErrorCode::kIo, e.what());
  }
  SeqInfo info;
  const auto field = [&](const char* key, auto& value) {
    const auto text = tree.get_optional<std::string>(std::string("Sequence.") + key);
    if (!text) return;
    try {
      value = boost::lexical_cast<std::remove_reference_t<decltype(value)>>(*text);
    } catch (const boost::bad_lexical_cast&) {
      throw Error(ErrorCode::kParse, path.string() + ": bad value for " + key + ": '" + *text + "'");
    }
  };
  field("name", info.name);
  field("frameRate", info.fps);
  field("seqLength", info.length);
  field("imWidth", info.image_width);
  field("imHeight", info.image_height);
  field("pxPerM", info.px_per_m);
  if (!(info.fps > 0.0) || !(info.px_per_m > 0.0)) {
    throw Error(ErrorCode::kParse, path.string() + ": frameRate and pxPerM must be positive");
  }
  return info;
}

void write_seqinfo(const std::filesystem::path& path, const SeqInfo& info) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  char fps[32];
  char scale[32];
  std::snprintf(fps, sizeof fps, "%g", info.fps);
  std::snprintf(scale, sizeof scale, "%g", info.px_per_m);
  out << "[Sequence]\n"
      << "name=" << info.name << '\n'
      << "imDir=img1\n"
      << "frameRate=" << fps << '\n'
      << "seqLength=" << info.length << '\n'
      << "imWidth=" << info.image_width << '\n'
      << "imHeight=" << info.image_height << '\n'
      << "imExt=.jpg\n"
      << "pxPerM=" << scale << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace densetrack
