#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fmbeam/data.hpp"
#include "fmbeam/model.hpp"
#include "fmbeam/simulator.hpp"

namespace fmbeam::testing {

// A few short simulated passes, grouped and split.
struct SmallData {
  std::vector<Sequence> sequences;
  SequenceSplit ids;
};

inline SmallData small_data(std::size_t n_sequences, std::uint64_t seed = 21) {
  ScenarioConfig sc;
  sc.length_min = 20;
  sc.length_max = 24;
  Rng rng(seed);
  SmallData d;
  d.sequences = group_frames(generate_dataset(n_sequences, sc, rng)).sequences;
  Rng split_rng(seed + 1);
  d.ids = split_sequences(d.sequences, 0.25, split_rng);
  return d;
}

// Tiny flow model over the full 32-beam codebook.
inline ModelConfig small_fm(CondEncoder cond = CondEncoder::transformer) {
  ModelConfig cfg;
  cfg.box_hidden = {8};
  cfg.cond = cond;
  cfg.cond_layers = 1;
  cfg.cond_heads = 2;
  cfg.cond_dim = 8;
  cfg.cond_ff = 8;
  cfg.field_hidden = {16};
  return cfg;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "fmbeam_unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fmbeam::testing
