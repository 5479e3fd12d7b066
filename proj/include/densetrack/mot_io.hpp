#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "densetrack/features.hpp"

namespace densetrack {

struct LabeledBox {
  int id = -1;
  BoundingBox box;
  double confidence = 1.0;
};

using FrameBoxes = std::vector<LabeledBox>;

// Per-frame box lists; frames[f - 1] holds frame f. Frames without rows are
// present and empty.
struct MotSequence {
  std::vector<FrameBoxes> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t box_count() const;
  void ensure_frames(std::size_t n) {
    if (frames.size() < n) frames.resize(n);
  }
};

// MOT text formats. All parsers throw Error(kParse) naming the source and the
// 1-based line number of the first malformed row.
//   gt:         frame,id,left,top,width,height,flag,class,visibility (flag 0 rows skipped)
//   hypothesis: frame,id,left,top,width,height,conf,-1,-1,-1
//   detections: frame,-1,left,top,width,height,conf,-1,-1,-1
MotSequence parse_gt(std::istream& in, const std::string& source = "gt");
MotSequence parse_hypothesis(std::istream& in, const std::string& source = "hypothesis");
MotSequence parse_detections(std::istream& in, const std::string& source = "detections");

MotSequence read_gt(const std::filesystem::path& path);
MotSequence read_hypothesis(const std::filesystem::path& path);
MotSequence read_detections(const std::filesystem::path& path);

// Floating fields carry two decimals.
void write_gt(std::ostream& out, const MotSequence& seq);
void write_hypothesis(std::ostream& out, const MotSequence& seq);
void write_detections(std::ostream& out, const MotSequence& seq);

// Rounds to the two-decimal grid used by the writers, so written values read
// back bit-identical.
double quantize_centi(double value);
BoundingBox quantize_centi(const BoundingBox& box);

// Side tables aligned with a detection sequence: [frame - 1][det_index].
using MaskTable = std::vector<std::vector<std::optional<Mask>>>;
using PatchTable = std::vector<std::vector<std::optional<Patch>>>;

// Lines `frame,det_index,n_rows,rle`; the column count is grid_cols of the
// detection box.
MaskTable parse_masks(std::istream& in, const MotSequence& detections,
                      const std::string& source = "masks");
MaskTable read_masks(const std::filesystem::path& path, const MotSequence& detections);
void write_masks(std::ostream& out, const MaskTable& masks);

// Binary: magic "DTPATCH1", then records of uint32 frame, uint32 det_index,
// uint16 cols, uint16 rows and cols*rows uint8 intensities (little endian).
PatchTable read_patches(const std::filesystem::path& path, const MotSequence& detections);
void write_patches(std::ostream& out, const PatchTable& patches);

struct SeqInfo {
  std::string name = "sequence";
  double fps = 10.0;
  std::size_t length = 0;
  int image_width = 0;
  int image_height = 0;
  double px_per_m = 1.0;
};

// seqinfo.ini with a [Sequence] section (MOTChallenge keys plus pxPerM).
SeqInfo read_seqinfo(const std::filesystem::path& path);
void write_seqinfo(const std::filesystem::path& path, const SeqInfo& info);

// Conventional file names inside a sequence directory.
struct SequencePaths {
  std::filesystem::path root;

  std::filesystem::path seqinfo() const { return root / "seqinfo.ini"; }
  std::filesystem::path gt() const { return root / "gt" / "gt.txt"; }
  std::filesystem::path det() const { return root / "det" / "det.txt"; }
  std::filesystem::path masks() const { return root / "det" / "masks.txt"; }
  std::filesystem::path patches() const { return root / "det" / "patches.bin"; }
};

}  // namespace densetrack
