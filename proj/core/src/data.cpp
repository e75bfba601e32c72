#include "fmbeam/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "fmbeam/errors.hpp"
#include "fmbeam/frame_io.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam {

namespace {

FrameSet group(DatasetHeader header, std::vector<Frame> frames,
               const std::vector<std::size_t>* lines, const std::string& source) {
  std::map<std::string, std::map<int, std::size_t>> index;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    auto [it, inserted] = index[frames[i].seq_id].emplace(frames[i].frame, i);
    if (!inserted) {
      std::string where = source;
      if (lines != nullptr) where += ":" + std::to_string((*lines)[i]);
      throw DataError(where + ": duplicate frame " + std::to_string(frames[i].frame) +
                      " in sequence " + frames[i].seq_id);
    }
  }
  FrameSet out;
  out.header = std::move(header);
  for (auto& [id, by_frame] : index) {
    Sequence seq;
    seq.seq_id = id;
    for (auto& [frame_idx, i] : by_frame) {
      if (!seq.frames.empty() && frame_idx != seq.frames.back().frame + 1) seq.gaps.push_back(frame_idx);
      seq.frames.push_back(std::move(frames[i]));
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

FrameSet load_frames(const std::filesystem::path& path, int beam_base) {
  RawFrameFile raw = read_frames(path, beam_base);
  return group(std::move(raw.header), std::move(raw.frames), &raw.line_numbers, path.string());
}

FrameSet group_frames(const Dataset& dataset) {
  return group(dataset.header, dataset.frames, nullptr, "dataset");
}

void WindowConfig::validate() const {
  if (hist < 1 || pred < 1) throw ConfigError("window needs T_hist >= 1 and T_pred >= 1");
  if (stride < 1) throw ConfigError("window stride must be >= 1");
}

std::string WindowConfig::name() const {
  if (hist == 8 && pred == 5) return "A";
  if (hist == 3 && pred == 10) return "B";
  return std::to_string(hist) + "/" + std::to_string(pred);
}

nlohmann::json to_json(const WindowConfig& cfg) {
  return {{"hist", cfg.hist}, {"pred", cfg.pred}, {"stride", cfg.stride}};
}

WindowConfig window_from_json(const nlohmann::json& j) {
  WindowConfig cfg;
  StrictObject o(j, "window");
  o.read("hist", cfg.hist).read("pred", cfg.pred).read("stride", cfg.stride);
  o.finish();
  cfg.validate();
  return cfg;
}

WindowConfig config_a() { return {8, 5, 1}; }
WindowConfig config_b() { return {3, 10, 1}; }

WindowConfig window_variant(const std::string& name) {
  if (name == "A" || name == "a") return config_a();
  if (name == "B" || name == "b") return config_b();
  throw ConfigError("unknown window variant '" + name + "' (expected A or B)");
}

std::vector<WindowSample> make_windows(const Sequence& seq, const WindowConfig& cfg) {
  cfg.validate();
  std::vector<WindowSample> out;
  const std::size_t T = cfg.total();
  const auto& f = seq.frames;
  if (f.size() < T) return out;
  for (std::size_t start = 0; start + T <= f.size(); start += cfg.stride) {
    // A window may not cross a missing frame.
    if (f[start + T - 1].frame - f[start].frame != static_cast<int>(T - 1)) continue;
    WindowSample w;
    w.seq_id = seq.seq_id;
    w.anchor = f[start + cfg.hist].frame;
    w.boxes = Tensor::zeros(cfg.hist, 4);
    for (std::size_t i = 0; i < cfg.hist; ++i) {
      for (std::size_t k = 0; k < 4; ++k) w.boxes(i, k) = f[start + i].bbox[k];
    }
    w.labels.reserve(T);
    for (std::size_t i = 0; i < T; ++i) w.labels.push_back(f[start + i].beam);
    out.push_back(std::move(w));
  }
  return out;
}

SequenceSplit split_sequences(const std::vector<Sequence>& seqs, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  if (seqs.size() < 2) {
    throw DataError("need at least 2 sequences to split, have " + std::to_string(seqs.size()));
  }
  std::vector<std::string> ids;
  for (const auto& s : seqs) ids.push_back(s.seq_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw DataError("duplicate seq_id in split input");
  }
  const auto n = ids.size();
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  rng.shuffle(std::span<std::string>(ids));
  SequenceSplit out;
  out.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  return out;
}

DatasetSplit build_split(const std::vector<Sequence>& seqs, const SequenceSplit& ids,
                         const WindowConfig& cfg) {
  const std::set<std::string> train(ids.train_ids.begin(), ids.train_ids.end());
  const std::set<std::string> test(ids.test_ids.begin(), ids.test_ids.end());
  for (const auto& id : test) {
    if (train.count(id)) throw DataError("sequence " + id + " is on both sides of the split");
  }
  DatasetSplit out;
  out.ids = ids;
  for (const auto& seq : seqs) {
    const bool in_train = train.count(seq.seq_id) != 0;
    const bool in_test = test.count(seq.seq_id) != 0;
    if (!in_train && !in_test) continue;
    auto windows = make_windows(seq, cfg);
    auto& side = in_train ? out.train : out.test;
    side.insert(side.end(), std::make_move_iterator(windows.begin()),
                std::make_move_iterator(windows.end()));
  }
  return out;
}

void save_split_manifest(const std::filesystem::path& path, const SequenceSplit& split) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write split manifest " + path.string());
  nlohmann::json j{{"train", split.train_ids}, {"test", split.test_ids}};
  os << j.dump(2) << '\n';
}

SequenceSplit load_split_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open split manifest " + path.string());
  try {
    const auto j = nlohmann::json::parse(is);
    SequenceSplit s;
    s.train_ids = j.at("train").get<std::vector<std::string>>();
    s.test_ids = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed split manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace fmbeam
