#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/rng.hpp"
#include "fmbeam/simulator.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

/// All frames of one capture, sorted by frame index.
struct Sequence {
  std::string seq_id;
  std::vector<Frame> frames;
  std::vector<int> gaps;  // frame indices that start after a missing frame

  bool contiguous() const noexcept { return gaps.empty(); }
};

struct FrameSet {
  DatasetHeader header;
  std::vector<Sequence> sequences;  // sorted by seq_id
};

// Groups frames by seq_id and sorts each group by frame index. Throws
// DataError naming the line of any duplicate (seq_id, frame).
FrameSet load_frames(const std::filesystem::path& path, int beam_base = 0);
FrameSet group_frames(const Dataset& dataset);

/// Window geometry on the normalised time grid tau_i = i / (T - 1).
struct WindowConfig {
  std::size_t hist = 8;
  std::size_t pred = 5;
  std::size_t stride = 1;

  std::size_t total() const noexcept { return hist + pred; }
  double dtau() const noexcept { return 1.0 / static_cast<double>(total() - 1); }
  // Computed directly rather than accumulated so tau(T-1) == 1 exactly.
  double tau(std::size_t i) const noexcept {
    return static_cast<double>(i) / static_cast<double>(total() - 1);
  }
  void validate() const;
  std::string name() const;
};

nlohmann::json to_json(const WindowConfig& cfg);
WindowConfig window_from_json(const nlohmann::json& j);  // rejects unknown keys

WindowConfig config_a();  // 8 history / 5 predicted frames
WindowConfig config_b();  // 3 / 10
WindowConfig window_variant(const std::string& name);  // "A" or "B"

struct WindowSample {
  std::string seq_id;
  int anchor = 0;           // frame index of the first predicted frame
  Tensor boxes;             // hist x 4
  std::vector<int> labels;  // hist + pred ground-truth beams

  int first_label() const { return labels.front(); }
  int last_label() const { return labels.back(); }
};

// One window per anchor, `stride` apart, never spanning a missing frame.
// Sequences shorter than T give no windows.
std::vector<WindowSample> make_windows(const Sequence& seq, const WindowConfig& cfg);

struct SequenceSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct DatasetSplit {
  SequenceSplit ids;
  std::vector<WindowSample> train;
  std::vector<WindowSample> test;
};

// Random partition of whole sequences, done before any windowing.
SequenceSplit split_sequences(const std::vector<Sequence>& seqs, double test_fraction, Rng& rng);
DatasetSplit build_split(const std::vector<Sequence>& seqs, const SequenceSplit& ids,
                         const WindowConfig& cfg);

void save_split_manifest(const std::filesystem::path& path, const SequenceSplit& split);
SequenceSplit load_split_manifest(const std::filesystem::path& path);

}  // namespace fmbeam
