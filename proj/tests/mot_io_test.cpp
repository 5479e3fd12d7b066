#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "densetrack/error.hpp"
#include "densetrack/mot_io.hpp"
#include "test_support.hpp"

namespace densetrack {
namespace {

using testing::Rng;
using testing::uniform;

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("densetrack_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

MotSequence random_sequence(Rng& rng, std::size_t frames) {
  MotSequence seq;
  seq.ensure_frames(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const int n = static_cast<int>(uniform(rng, 0.0, 5.0));
    for (int i = 0; i < n; ++i) {
      const BoundingBox b{uniform(rng, -50.0, 500.0), uniform(rng, -50.0, 500.0), uniform(rng, 1.0, 80.0),
                          uniform(rng, 1.0, 80.0)};
      seq.frames[f].push_back({i + 1, quantize_centi(b), quantize_centi(uniform(rng, 0.0, 1.0))});
    }
  }
  return seq;
}

void expect_same(const MotSequence& a, const MotSequence& b, bool compare_confidence) {
  ASSERT_EQ(a.frame_count(), b.frame_count());
  for (std::size_t f = 0; f < a.frame_count(); ++f) {
    ASSERT_EQ(a.frames[f].size(), b.frames[f].size());
    for (std::size_t i = 0; i < a.frames[f].size(); ++i) {
      EXPECT_EQ(a.frames[f][i].box, b.frames[f][i].box);
      if (compare_confidence) EXPECT_EQ(a.frames[f][i].confidence, b.frames[f][i].confidence);
    }
  }
}

TEST(MotIo, GroundTruthRoundTripsExactly) {
  Rng rng(1);
  MotSequence seq = random_sequence(rng, 40);
  seq.frames.back().push_back({3, {1, 1, 1, 1}, 1.0});  // keep the last frame non-empty
  std::stringstream text;
  write_gt(text, seq);
  const MotSequence back = parse_gt(text);
  expect_same(seq, back, false);
  for (std::size_t f = 0; f < seq.frame_count(); ++f) {
    for (std::size_t i = 0; i < seq.frames[f].size(); ++i) EXPECT_EQ(seq.frames[f][i].id, back.frames[f][i].id);
  }
  std::stringstream again;
  write_gt(again, back);
  EXPECT_EQ(text.str(), again.str());
}

TEST(MotIo, HypothesisAndDetectionsRoundTrip) {
  Rng rng(2);
  MotSequence seq = random_sequence(rng, 25);
  seq.frames.back().push_back({3, {1, 1, 1, 1}, 0.5});
  std::stringstream hyp;
  write_hypothesis(hyp, seq);
  expect_same(seq, parse_hypothesis(hyp), true);
  std::stringstream det;
  write_detections(det, seq);
  const MotSequence d = parse_detections(det);
  expect_same(seq, d, true);
  EXPECT_EQ(d.frames.back().front().id, -1);
}

TEST(MotIo, RowFormatting) {
  MotSequence seq;
  seq.ensure_frames(2);
  seq.frames[1].push_back({4, {1.004, -0.001, 10.5, 20.0}, 0.987});
  std::stringstream hyp;
  write_hypothesis(hyp, seq);
  EXPECT_EQ(hyp.str(), "2,4,1.00,0.00,10.50,20.00,0.99,-1,-1,-1\n");
  std::stringstream gt;
  write_gt(gt, seq);
  EXPECT_EQ(gt.str(), "2,4,1.00,0.00,10.50,20.00,1,1,1\n");
}

TEST(MotIo, FlagZeroRowsIgnored) {
  std::istringstream in("1,1,0,0,5,5,1,1,1\n1,2,9,9,5,5,0,1,1\n2,1,1,0,5,5,1,1,0.5\n");
  const MotSequence gt = parse_gt(in);
  ASSERT_EQ(gt.frame_count(), 2u);
  EXPECT_EQ(gt.frames[0].size(), 1u);
  EXPECT_EQ(gt.box_count(), 2u);
}

TEST(MotIo, GapFramesArePresentAndEmpty) {
  std::istringstream in("3,1,0,0,5,5,1,-1,-1,-1\n");
  const MotSequence h = parse_hypothesis(in);
  ASSERT_EQ(h.frame_count(), 3u);
  EXPECT_TRUE(h.frames[0].empty());
  EXPECT_TRUE(h.frames[1].empty());
}

TEST(MotIo, MalformedRowsReportLineNumbers) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"1,1,0,0,5,5,1,1,1\n\n1,2,0,0,5\n", ":3:"},
      {"1,1,0,0,5,5,1\n0,1,0,0,5,5,1\n", ":2:"},
      {"1,x,0,0,5,5,1\n", ":1:"},
      {"1,1,0,0,-5,5,1\n", ":1:"},
      {"1,1,0,abc,5,5,1\n", ":1:"},
      {"1,0,0,0,5,5,1\n", ":1:"},
      {"1.5,1,0,0,5,5,1\n", ":1:"},
      {"1,1,0,0,5,5,1,1,nan?\n", ":1:"},
  };
  for (const auto& [text, needle] : cases) {
    std::istringstream in(text);
    try {
      parse_hypothesis(in, "h.txt");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse);
      EXPECT_NE(std::string(e.what()).find("h.txt" + needle), std::string::npos) << e.what();
    }
  }
}

TEST(MotIo, MissingFileIsIoError) {
  try {
    read_gt("/nonexistent/gt.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(MotIo, MasksRoundTripAndCheckShape) {
  MotSequence det;
  det.ensure_frames(2);
  det.frames[0] = {{-1, {0, 0, 4, 3}, 1.0}, {-1, {10, 10, 2.4, 2.6}, 1.0}};
  det.frames[1] = {{-1, {0, 0, 5, 1}, 1.0}};
  MaskTable masks(2);
  masks[0].resize(2);
  masks[1].resize(1);
  Mask a(3, 4);
  a.set(0, 1, true);
  a.set(2, 3, true);
  masks[0][0] = a;
  masks[1][0] = Mask(1, 5, true);
  std::stringstream text;
  write_masks(text, masks);
  EXPECT_EQ(text.str(), "1,0,3,1:1||3:1\n2,0,1,0:5\n");
  const MaskTable back = parse_masks(text, det);
  ASSERT_TRUE(back[0][0]);
  EXPECT_EQ(*back[0][0], a);
  EXPECT_FALSE(back[0][1]);
  EXPECT_EQ(*back[1][0], Mask(1, 5, true));

  for (const std::string bad : {"1,0,2,1:1|\n", "1,5,3,||\n", "3,0,3,||\n", "1,0,3,0:9||\n", "1,0,3,||\n1,0,3,||\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(parse_masks(in, det), Error) << bad;
  }
}

TEST(MotIo, PatchesRoundTripAtByteResolution) {
  const auto dir = scratch_dir("patches");
  MotSequence det;
  det.ensure_frames(3);
  det.frames[0] = {{-1, {0, 0, 3, 2}, 1.0}};
  det.frames[2] = {{-1, {0, 0, 2, 2}, 1.0}, {-1, {0, 0, 1, 1}, 1.0}};
  PatchTable patches(3);
  patches[0].resize(1);
  patches[2].resize(2);
  Patch p(2, 3);
  for (std::size_t i = 0; i < p.pixels.size(); ++i) p.pixels[i] = static_cast<float>(i * 40) / 255.0f;
  patches[0][0] = p;
  patches[2][1] = Patch(1, 1, 0.0f);
  {
    std::ofstream out(dir / "patches.bin", std::ios::binary);
    write_patches(out, patches);
  }
  const PatchTable back = read_patches(dir / "patches.bin", det);
  ASSERT_TRUE(back[0][0]);
  EXPECT_EQ(*back[0][0], p);
  EXPECT_FALSE(back[2][0]);
  ASSERT_TRUE(back[2][1]);
  EXPECT_EQ(back[2][1]->pixels.front(), 0.0f);

  std::filesystem::resize_file(dir / "patches.bin", std::filesystem::file_size(dir / "patches.bin") - 1);
  EXPECT_THROW(read_patches(dir / "patches.bin", det), Error);
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "NOTPATCH";
  }
  EXPECT_THROW(read_patches(dir / "bad.bin", det), Error);
}

TEST(MotIo, SeqInfoRoundTrip) {
  const auto dir = scratch_dir("seqinfo");
  SeqInfo info;
  info.name = "corridor";
  info.fps = 12.5;
  info.length = 300;
  info.image_width = 640;
  info.image_height = 320;
  info.px_per_m = 40.0;
  write_seqinfo(dir / "seqinfo.ini", info);
  const SeqInfo back = read_seqinfo(dir / "seqinfo.ini");
  EXPECT_EQ(back.name, info.name);
  EXPECT_EQ(back.fps, info.fps);
  EXPECT_EQ(back.length, info.length);
  EXPECT_EQ(back.image_width, info.image_width);
  EXPECT_EQ(back.image_height, info.image_height);
  EXPECT_EQ(back.px_per_m, info.px_per_m);
  {
    std::ofstream out(dir / "bad.ini");
    out << "[Sequence]\nframeRate=fast\n";
  }
  EXPECT_THROW(read_seqinfo(dir / "bad.ini"), Error);
  EXPECT_THROW(read_seqinfo(dir / "missing.ini"), Error);
}

}  // namespace
}  // namespace densetrack
