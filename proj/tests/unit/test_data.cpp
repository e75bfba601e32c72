#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "fmbeam/data.hpp"
#include "fmbeam/errors.hpp"
#include "fmbeam/frame_io.hpp"

using namespace fmbeam;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "fmbeam_unit";
  fs::create_directories(dir);
  return dir / name;
}

Sequence synthetic_sequence(const std::string& id, int length) {
  Sequence s;
  s.seq_id = id;
  for (int i = 0; i < length; ++i) {
    Frame f;
    f.seq_id = id;
    f.frame = i;
    f.bbox = {0.01 * i, 0.5, 0.1, 0.2};
    f.beam = i % 32;
    s.frames.push_back(f);
  }
  return s;
}

Dataset small_dataset(std::size_t n) {
  ScenarioConfig sc;
  sc.length_min = 20;
  sc.length_max = 30;
  Rng rng(5);
  return generate_dataset(n, sc, rng);
}

}  // namespace

TEST(FrameIo, WriteThenLoadRoundTrips) {
  const Dataset ds = small_dataset(6);
  const auto path = temp_file("frames.csv");
  write_frames(path, ds);
  const RawFrameFile raw = read_frames(path);
  EXPECT_EQ(raw.frames, ds.frames);
  EXPECT_EQ(raw.header.beams, ds.header.beams);
  EXPECT_EQ(raw.header.config_hash, ds.header.config_hash);

  const FrameSet a = load_frames(path);
  const FrameSet b = group_frames(ds);
  ASSERT_EQ(a.sequences.size(), 6u);
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    EXPECT_EQ(a.sequences[i].frames, b.sequences[i].frames);
    EXPECT_TRUE(a.sequences[i].contiguous());
  }
}

TEST(FrameIo, ShuffledLinesGroupIdentically) {
  const Dataset ds = small_dataset(4);
  const auto path = temp_file("sorted.csv");
  write_frames(path, ds);
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  std::vector<std::string> body(lines.begin() + 2, lines.end());
  Rng rng(9);
  rng.shuffle(std::span<std::string>(body));
  const auto shuffled = temp_file("shuffled.csv");
  {
    std::ofstream out(shuffled);
    out << lines[0] << '\n' << lines[1] << '\n';
    for (const auto& l : body) out << l << '\n';
  }
  const FrameSet a = load_frames(path);
  const FrameSet b = load_frames(shuffled);
  ASSERT_EQ(a.sequences.size(), b.sequences.size());
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    EXPECT_EQ(a.sequences[i].frames, b.sequences[i].frames);
  }
}

TEST(FrameIo, DuplicateFrameNamesLine) {
  const auto path = temp_file("dup.csv");
  {
    std::ofstream out(path);
    out << "# fmbeam-frames v1 M=32 fps=7 hash=x\n"
        << "seq_id,frame,xc,yc,w,h,beam\n"
        << "a,0,0.5,0.5,0.1,0.1,3\n"
        << "a,1,0.5,0.5,0.1,0.1,3\n"
        << "a,1,0.5,0.5,0.1,0.1,4\n";
  }
  try {
    load_frames(path);
    FAIL() << "duplicate frame accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":5"), std::string::npos) << e.what();
  }
}

TEST(FrameIo, ParseErrorsCarryLineNumbers) {
  const auto path = temp_file("bad.csv");
  {
    std::ofstream out(path);
    out << "# fmbeam-frames v1 M=32 fps=7 hash=x\n"
        << "seq_id,frame,xc,yc,w,h,beam\n"
        << "a,0,0.5,0.5,0.1,0.1,3\n"
        << "a,1,0.5,zebra,0.1,0.1,3\n";
  }
  try {
    read_frames(path);
    FAIL() << "malformed row accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":4"), std::string::npos) << e.what();
  }
  {
    std::ofstream out(path);
    out << "# fmbeam-frames v1 M=32 fps=7 hash=x\n"
        << "seq_id,frame,xc,yc,w,h,beam\n"
        << "a,0,0.5,0.5,0.1,0.1,32\n";
  }
  EXPECT_THROW(read_frames(path), DataError);
  EXPECT_THROW(read_frames(temp_file("absent.csv")), DataError);
}

TEST(FrameIo, BeamBaseShiftsOneBasedLabels) {
  const auto path = temp_file("onebased.csv");
  {
    std::ofstream out(path);
    out << "# fmbeam-frames v1 M=32 fps=7 hash=x\n"
        << "seq_id,frame,xc,yc,w,h,beam\n"
        << "a,0,0.5,0.5,0.1,0.1,1\n"
        << "a,1,0.5,0.5,0.1,0.1,32\n";
  }
  const RawFrameFile raw = read_frames(path, 1);
  EXPECT_EQ(raw.frames[0].beam, 0);
  EXPECT_EQ(raw.frames[1].beam, 31);
}

TEST(FrameIo, GapsAreFlagged) {
  Dataset ds;
  for (int i : {0, 1, 2, 5, 6}) {
    Frame f;
    f.seq_id = "g";
    f.frame = i;
    ds.frames.push_back(f);
  }
  const FrameSet set = group_frames(ds);
  ASSERT_EQ(set.sequences.size(), 1u);
  EXPECT_FALSE(set.sequences[0].contiguous());
  EXPECT_EQ(set.sequences[0].gaps, std::vector<int>{5});
}

TEST(Windows, CountsFollowLengthAndStride) {
  EXPECT_EQ(make_windows(synthetic_sequence("a", 13), config_a()).size(), 1u);
  EXPECT_EQ(make_windows(synthetic_sequence("a", 20), config_a()).size(), 8u);
  EXPECT_TRUE(make_windows(synthetic_sequence("a", 12), config_a()).empty());
  WindowConfig strided = config_a();
  strided.stride = 3;
  EXPECT_EQ(make_windows(synthetic_sequence("a", 20), strided).size(), 3u);
}

TEST(Windows, ShapesAndLabelAlignment) {
  const Sequence s = synthetic_sequence("a", 20);
  for (const auto& cfg : {config_a(), config_b()}) {
    const auto windows = make_windows(s, cfg);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto& win = windows[w];
      EXPECT_EQ(win.boxes.rows(), cfg.hist);
      EXPECT_EQ(win.boxes.cols(), 4u);
      ASSERT_EQ(win.labels.size(), 13u);
      EXPECT_EQ(win.anchor, static_cast<int>(w + cfg.hist));
      for (std::size_t j = 0; j < cfg.pred; ++j) {
        EXPECT_EQ(win.labels[cfg.hist + j], s.frames[win.anchor + j].beam);
      }
      for (std::size_t i = 0; i < cfg.hist; ++i) {
        EXPECT_EQ(win.boxes(i, 0), s.frames[w + i].bbox[0]);
      }
    }
  }
}

TEST(Windows, NeverSpanGaps) {
  Sequence s = synthetic_sequence("a", 30);
  s.frames.erase(s.frames.begin() + 15);
  const auto windows = make_windows(s, config_a());
  for (const auto& w : windows) {
    const int first = w.anchor - 8;
    EXPECT_TRUE(first + 12 < 15 || first > 15) << w.anchor;
  }
  EXPECT_EQ(windows.size(), 3u + 2u);
}

TEST(Windows, TauGridEndsAtOne) {
  for (const auto& cfg : {config_a(), config_b()}) {
    EXPECT_EQ(cfg.total(), 13u);
    EXPECT_EQ(cfg.tau(0), 0.0);
    EXPECT_EQ(cfg.tau(cfg.total() - 1), 1.0);
    for (std::size_t i = 0; i < cfg.total(); ++i) {
      EXPECT_NEAR(cfg.tau(i), static_cast<double>(i) * cfg.dtau(), 1e-15);
    }
  }
  EXPECT_THROW(window_variant("C"), ConfigError);
  EXPECT_THROW((WindowConfig{0, 5, 1}).validate(), ConfigError);
}

TEST(Split, SizesDisjointAndDeterministic) {
  std::vector<Sequence> seqs;
  for (int i = 0; i < 10; ++i) seqs.push_back(synthetic_sequence("s" + std::to_string(i), 20));
  Rng a(4), b(4);
  const auto s1 = split_sequences(seqs, 0.2, a);
  const auto s2 = split_sequences(seqs, 0.2, b);
  EXPECT_EQ(s1.test_ids.size(), 2u);
  EXPECT_EQ(s1.train_ids.size(), 8u);
  EXPECT_EQ(s1.test_ids, s2.test_ids);
  EXPECT_EQ(s1.train_ids, s2.train_ids);
  for (const auto& id : s1.test_ids) {
    EXPECT_EQ(std::count(s1.train_ids.begin(), s1.train_ids.end(), id), 0);
  }
}

TEST(Split, WindowsNeverCrossSides) {
  std::vector<Sequence> seqs;
  for (int i = 0; i < 12; ++i) seqs.push_back(synthetic_sequence("s" + std::to_string(i), 25));
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ids = split_sequences(seqs, 0.3, rng);
    const DatasetSplit split = build_split(seqs, ids, config_b());
    std::set<std::string> train, test;
    for (const auto& w : split.train) train.insert(w.seq_id);
    for (const auto& w : split.test) test.insert(w.seq_id);
    for (const auto& id : test) ASSERT_EQ(train.count(id), 0u);
    EXPECT_EQ(split.train.size() + split.test.size(), 12u * 13u);
  }
}

TEST(Split, Errors) {
  std::vector<Sequence> one{synthetic_sequence("only", 20)};
  Rng rng(1);
  EXPECT_THROW(split_sequences(one, 0.2, rng), DataError);
  std::vector<Sequence> two{synthetic_sequence("a", 20), synthetic_sequence("b", 20)};
  EXPECT_THROW(split_sequences(two, 0.0, rng), ConfigError);
  EXPECT_THROW(split_sequences(two, 1.0, rng), ConfigError);
  const auto s = split_sequences(two, 0.01, rng);
  EXPECT_EQ(s.test_ids.size(), 1u);
  EXPECT_EQ(s.train_ids.size(), 1u);
  SequenceSplit overlap{{"a"}, {"a"}};
  EXPECT_THROW(build_split(two, overlap, config_a()), DataError);
}

TEST(Split, ManifestRoundTrip) {
  SequenceSplit s{{"a", "c"}, {"b"}};
  const auto path = temp_file("split.json");
  save_split_manifest(path, s);
  const auto back = load_split_manifest(path);
  EXPECT_EQ(back.train_ids, s.train_ids);
  EXPECT_EQ(back.test_ids, s.test_ids);
}
