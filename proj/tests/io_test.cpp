#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "kerman/io.hpp"
#include "support.hpp"

namespace kerman {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidConfig;
}

DetectionMap parse(const std::string& text) {
  std::istringstream in(text);
  return parse_detections(in, "dets");
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(10.0), "10");
  EXPECT_EQ(format_number(103.5), "103.5");
  EXPECT_EQ(format_number(0.1), "0.1");
  const double v = 1.0 / 3.0;
  EXPECT_EQ(*parse_number<double>(format_number(v)), v);
}

TEST(Detections, EmptyInput) { EXPECT_TRUE(parse("").empty()); }

TEST(Detections, SingleLine) {
  const auto d = parse("5,10,20,30,60,0.9\n");
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d.at(5).size(), 1u);
  EXPECT_EQ(d.at(5)[0].box, (BBox{10, 20, 30, 60}));
  EXPECT_DOUBLE_EQ(d.at(5)[0].score, 0.9);
}

TEST(Detections, CommentsBlankLinesAndGrouping) {
  const auto d = parse("# header\n\n0, 1, 2, 30, 40, 1  # trailing\n0,100,100,20,20,0.5\n10,5,5,50,50,0\n");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at(0).size(), 2u);
  EXPECT_EQ(d.at(10).size(), 1u);
}

TEST(Detections, ClampedToFrame) {
  const auto d = parse("0,380,-10,40,40,1\n");
  EXPECT_EQ(d.at(0)[0].box, (BBox{380, 0, 20, 30}));
}

TEST(Detections, ScoreOutOfRangeIsParseError) {
  EXPECT_EQ(kind_of([] { parse("0,1,2,3,4,1.2\n"); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([] { parse("0,1,2,3,4,-0.1\n"); }), ErrorKind::ParseError);
}

TEST(Detections, NegativeDimensionRejected) {
  EXPECT_EQ(kind_of([] { parse("0,1,2,-3,4,0.5\n"); }), ErrorKind::NegativeDimension);
}

TEST(Detections, ErrorNamesLine) {
  try {
    parse("0,1,2,3,4,0.5\n# ok\n0,1,2,x,4,0.5\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("dets:3"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { parse("0,1,2,3,4\n"); }), ErrorKind::ParseError);
}

TEST(Detections, RoundTrip) {
  testing::TempDir dir("dets");
  const DetectionMap dets{{0, {{{1.5, 2, 30, 40}, 1.0}}}, {5, {{{10, 20, 30, 60}, 0.9}, {{0, 0, 5, 5}, 0.25}}}};
  write_detections(dir / "d.txt", dets);
  EXPECT_EQ(read_detections(dir / "d.txt"), dets);
}

TEST(Detections, MissingFile) {
  EXPECT_EQ(kind_of([] { read_detections("/nonexistent/kerman/d.txt"); }), ErrorKind::IoFailure);
}

TEST(Tracks, EmptyStreamGivesEmptyFile) {
  testing::TempDir dir("tracks");
  write_tracks(dir / "t.txt", {});
  EXPECT_EQ(std::filesystem::file_size(dir / "t.txt"), 0u);
  EXPECT_TRUE(read_tracks(dir / "t.txt").empty());
}

TEST(Tracks, RoundTripIsLossless) {
  testing::TempDir dir("tracks");
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> u(0, 400);
  std::vector<TrackRecord> recs;
  const char branches[] = {'C', 'O', 'K'};
  const char statuses[] = {'A', 'O', 'T'};
  for (int i = 0; i < 300; ++i) {
    recs.push_back({i / 3, i % 3, {u(rng), u(rng), u(rng) + 1, u(rng) + 1}, branches[i % 3], i % 2 == 0,
                    statuses[(i / 3) % 3]});
  }
  write_tracks(dir / "t.txt", recs);
  EXPECT_EQ(read_tracks(dir / "t.txt"), recs);
}

TEST(Tracks, LineFormat) {
  EXPECT_EQ(format_track_line({7, 2, {10, 20.5, 30, 60}, 'O', false, 'O'}), "7,2,10,20.5,30,60,O,0,O");
}

TEST(Tracks, MalformedLinesRejected) {
  for (const char* bad : {"1,2,3,4,5,6,X,1,A", "1,2,3,4,5,6,C,2,A", "1,2,3,4,5,6,C,1,Z", "1,2,3,4,-5,6,C,1,A",
                          "1,2,3,4,5,6,C,1"}) {
    std::istringstream in(bad);
    EXPECT_EQ(kind_of([&] { parse_tracks(in, "t"); }), ErrorKind::ParseError) << bad;
  }
}

TEST(Tracks, UnwritablePath) {
  EXPECT_EQ(kind_of([] { TrackWriter w("/nonexistent/kerman/t.txt"); }), ErrorKind::IoFailure);
}

TEST(FrameSource, DirectoryYieldsIndexedFrames) {
  testing::TempDir dir("frames");
  for (int i = 0; i < 10; ++i) write_pgm(dir / frame_file_name(i), Frame(0, 400, 400, static_cast<std::uint8_t>(i)));
  auto src = FrameSource::open_directory(dir.path());
  EXPECT_EQ(src.size(), 10u);
  std::int64_t expect = 0;
  while (auto f = src.next()) {
    EXPECT_EQ(f->index, expect);
    EXPECT_EQ(f->at(0, 0), expect);
    ++expect;
  }
  EXPECT_EQ(expect, 10);
}

TEST(FrameSource, ResizesTo400) {
  testing::TempDir dir("frames");
  write_pgm(dir / frame_file_name(0), testing::textured_frame(512, 512, 1));
  auto src = FrameSource::open_directory(dir.path());
  const auto f = src.next();
  ASSERT_TRUE(f);
  EXPECT_EQ(f->width, 400);
  EXPECT_EQ(f->height, 400);
}

TEST(FrameSource, GapNamesMissingIndex) {
  testing::TempDir dir("frames");
  for (int i = 0; i < 10; ++i) {
    if (i != 7) write_pgm(dir / frame_file_name(i), Frame(0, 16, 16));
  }
  try {
    FrameSource::open_directory(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingFrame);
    EXPECT_NE(std::string(e.what()).find("frame 7"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("000007.pgm"), std::string::npos);
  }
}

TEST(FrameSource, CorruptImageNamesPath) {
  testing::TempDir dir("frames");
  std::ofstream(dir / frame_file_name(0)) << "P5\n16 16\n255\nshort";
  auto src = FrameSource::open_directory(dir.path());
  try {
    src.next();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CorruptImage);
    EXPECT_NE(std::string(e.what()).find("000000.pgm"), std::string::npos);
  }
  std::ofstream(dir / "x.pgm") << "P2\n1 1\n255\n0";
  EXPECT_EQ(kind_of([&] { read_pnm(dir / "x.pgm"); }), ErrorKind::CorruptImage);
}

TEST(ReadPnm, ColorConvertedWithBt601) {
  testing::TempDir dir("ppm");
  {
    std::ofstream out(dir / "c.ppm", std::ios::binary);
    out << "P6\n# comment\n3 1\n255\n";
    const unsigned char px[] = {255, 0, 0, 0, 255, 0, 10, 20, 30};
    out.write(reinterpret_cast<const char*>(px), sizeof px);
  }
  const Frame f = read_pnm(dir / "c.ppm");
  EXPECT_EQ(f.at(0, 0), 76);   // 0.299 * 255 = 76.2
  EXPECT_EQ(f.at(1, 0), 150);  // 0.587 * 255 = 149.7
  EXPECT_EQ(f.at(2, 0), 18);   // 2.99 + 11.74 + 3.42 = 18.15
}

TEST(FrameSource, RawStreamRoundTrip) {
  testing::TempDir dir("raw");
  std::vector<Frame> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(testing::textured_frame(400, 400, i + 1, i));
  write_raw_stream(dir / "s.raw", frames);
  EXPECT_EQ(std::filesystem::file_size(dir / "s.raw"), 16u + 4u * 400u * 400u);
  auto src = FrameSource::open_raw(dir / "s.raw");
  EXPECT_EQ(src.kind(), SourceKind::RawStream);
  for (int i = 0; i < 4; ++i) {
    const auto f = src.next();
    ASSERT_TRUE(f);
    EXPECT_EQ(f->index, i);
    EXPECT_EQ(f->luma, frames[i].luma);
  }
  EXPECT_FALSE(src.next());
}

TEST(FrameSource, RawStreamBadHeaderAndTruncation) {
  testing::TempDir dir("raw");
  std::ofstream(dir / "bad.raw") << "NOPE0000000000000000";
  EXPECT_EQ(kind_of([&] { FrameSource::open_raw(dir / "bad.raw"); }), ErrorKind::CorruptImage);

  write_raw_stream(dir / "s.raw", {Frame(0, 8, 8), Frame(1, 8, 8)});
  std::filesystem::resize_file(dir / "s.raw", 16 + 64 + 10);
  auto src = FrameSource::open_raw(dir / "s.raw", 10.0, 8);
  EXPECT_TRUE(src.next());
  EXPECT_EQ(kind_of([&] { src.next(); }), ErrorKind::CorruptImage);
}

}  // namespace
}  // namespace kerman
