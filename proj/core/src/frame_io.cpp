#include "fmbeam/frame_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fmbeam/errors.hpp"

namespace fmbeam {

namespace {

constexpr const char* kHeaderTag = "# fmbeam-frames v1";
constexpr const char* kColumns = "seq_id,frame,xc,yc,w,h,beam";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + why);
}

template <class T>
T parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    // strtod accepts the full round-trip syntax produced by %.17g.
    std::string tmp(field);
    char* end = nullptr;
    value = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
      fail(path, line, "bad number '" + tmp + "'");
    }
  } else {
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail(path, line, "bad integer '" + std::string(field) + "'");
    }
  }
  return value;
}

void parse_header(const std::string& text, DatasetHeader& header, const std::filesystem::path& path) {
  std::istringstream is(text.substr(std::string(kHeaderTag).size()));
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "M") header.beams = parse_number<std::size_t>(value, path, 1);
    else if (key == "fps") header.fps = parse_number<double>(value, path, 1);
    else if (key == "hash") header.config_hash = value;
  }
}

}  // namespace

void write_frames(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write dataset " + path.string());
  os << kHeaderTag << " M=" << dataset.header.beams << " fps=" << format_double(dataset.header.fps)
     << " hash=" << dataset.header.config_hash << '\n';
  os << kColumns << '\n';
  for (const Frame& f : dataset.frames) {
    os << f.seq_id << ',' << f.frame;
    for (double v : f.bbox) os << ',' << format_double(v);
    os << ',' << f.beam << '\n';
  }
  if (!os) throw DataError("failed writing dataset " + path.string());
}

RawFrameFile read_frames(const std::filesystem::path& path, int beam_base) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open dataset " + path.string());
  RawFrameFile out;
  out.header.beams = 0;
  std::string line;
  std::size_t line_no = 0;
  bool seen_columns = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(kHeaderTag, 0) == 0) {
      parse_header(line, out.header, path);
      continue;
    }
    if (line[0] == '#') continue;
    if (!seen_columns && line == kColumns) {
      seen_columns = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 7) {
      fail(path, line_no, "expected 7 fields, found " + std::to_string(fields.size()));
    }
    Frame f;
    f.seq_id = std::string(fields[0]);
    if (f.seq_id.empty()) fail(path, line_no, "empty seq_id");
    f.frame = parse_number<int>(fields[1], path, line_no);
    for (std::size_t k = 0; k < 4; ++k) {
      f.bbox[k] = parse_number<double>(fields[2 + k], path, line_no);
      if (!(f.bbox[k] >= 0.0 && f.bbox[k] <= 1.0)) {
        fail(path, line_no, "bounding box component outside [0, 1]");
      }
    }
    f.beam = parse_number<int>(fields[6], path, line_no) - beam_base;
    if (f.beam < 0) fail(path, line_no, "negative beam index after base offset");
    if (out.header.beams != 0 && static_cast<std::size_t>(f.beam) >= out.header.beams) {
      fail(path, line_no, "beam index " + std::to_string(f.beam) + " >= M");
    }
    out.frames.push_back(std::move(f));
    out.line_numbers.push_back(line_no);
  }
  return out;
}

}  // namespace fmbeam
