#pragma once

#include <filesystem>
#include <vector>

#include "fmbeam/simulator.hpp"

namespace fmbeam {

// Dataset file, one record per line:
//
//   # fmbeam-frames v1 M=<beams> fps=<fps> hash=<config hash>
//   seq_id,frame,xc,yc,w,h,beam
//   seq00000,0,0.51234,...
//
// Floats are written with 17 significant digits so they read back exactly.
// Lines starting with '#' other than the first are ignored.
void write_frames(const std::filesystem::path& path, const Dataset& dataset);

struct RawFrameFile {
  DatasetHeader header;
  std::vector<Frame> frames;
  std::vector<std::size_t> line_numbers;  // 1-based source line per frame
};

// Parses records without grouping or validation beyond syntax. `beam_base`
// is subtracted from every label (1 for 1-based external exports).
RawFrameFile read_frames(const std::filesystem::path& path, int beam_base = 0);

}  // namespace fmbeam
