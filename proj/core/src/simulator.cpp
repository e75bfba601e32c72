#include "fmbeam/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fmbeam/errors.hpp"
#include "fmbeam/frame_io.hpp"
#include "fmbeam/json_util.hpp"

namespace fmbeam {

namespace {

constexpr double kSpeedOfLight = 299'792'458.0;
constexpr double kMinDepth = 0.1;

Complex inner(const ComplexVector& h, const ComplexVector& w) {
  Complex acc{0.0, 0.0};
  for (std::size_t n = 0; n < h.size(); ++n) acc += std::conj(h[n]) * w[n];
  return acc;
}

}  // namespace

BeamCodebook dft_codebook(std::size_t antennas, std::size_t size) {
  if (antennas == 0 || size == 0) throw ConfigError("codebook needs N >= 1 and M >= 1");
  BeamCodebook cb;
  cb.antennas = antennas;
  cb.size = size;
  const double norm = 1.0 / std::sqrt(static_cast<double>(antennas));
  for (std::size_t m = 0; m < size; ++m) {
    const double s = -1.0 + (2.0 * static_cast<double>(m) + 1.0) / static_cast<double>(size);
    const double angle = std::asin(s);
    ComplexVector w = steering_vector(angle, antennas);
    for (auto& c : w) c *= norm;
    cb.beams.push_back(std::move(w));
    cb.angles.push_back(angle);
  }
  return cb;
}

ComplexVector steering_vector(double angle, std::size_t antennas) {
  const double s = std::sin(angle);
  ComplexVector a(antennas);
  for (std::size_t n = 0; n < antennas; ++n) {
    a[n] = std::polar(1.0, -std::numbers::pi * static_cast<double>(n) * s);
  }
  return a;
}

std::size_t optimal_beam(const ComplexVector& h, const BeamCodebook& codebook) {
  if (h.size() != codebook.antennas) {
    throw ShapeError("channel of length " + std::to_string(h.size()) + " for " +
                     std::to_string(codebook.antennas) + "-antenna codebook");
  }
  std::size_t best = 0;
  double best_power = -1.0;
  for (std::size_t m = 0; m < codebook.size; ++m) {
    const double p = std::norm(inner(h, codebook.beams[m]));
    if (p > best_power) {
      best_power = p;
      best = m;
    }
  }
  return best;
}

double measure_power(const ComplexVector& h, const ComplexVector& w, double noise_power, Rng& rng,
                     double symbol_power) {
  if (h.size() != w.size()) throw ShapeError("measure_power: channel and beam lengths differ");
  if (noise_power < 0.0) throw ConfigError("noise power must be non-negative");
  const Complex signal = inner(h, w) * std::sqrt(symbol_power);
  if (noise_power == 0.0) return std::norm(signal);
  const double sigma = std::sqrt(noise_power / 2.0);
  const Complex noise{sigma * rng.normal(), sigma * rng.normal()};
  return std::norm(signal + noise);
}

ChannelSample los_channel(const Position& pos, std::size_t antennas, double carrier_hz) {
  ChannelSample ch;
  const double range = std::hypot(pos.x, pos.y);
  if (range <= 0.0) throw DataError("vehicle at the RSU position");
  ch.angle = std::atan2(pos.x, pos.y);
  const double wavelength = kSpeedOfLight / carrier_hz;
  ch.gain = std::polar(wavelength / (4.0 * std::numbers::pi * range),
                       -2.0 * std::numbers::pi * range / wavelength);
  ch.h = steering_vector(ch.angle, antennas);
  for (auto& c : ch.h) c *= ch.gain;
  return ch;
}

Position TrajectoryConfig::position_at(double seconds) const {
  const double dx = end.x - start.x;
  const double dy = end.y - start.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return start;
  const double ux = dx / len;
  const double uy = dy / len;
  double s = speed * seconds;
  double lateral = 0.0;
  switch (motion) {
    case MotionModel::constant_velocity:
      break;
    case MotionModel::constant_acceleration: {
      // A decelerating vehicle stops rather than reversing.
      double t = seconds;
      if (acceleration < 0.0) t = std::min(t, speed / -acceleration);
      s = speed * t + 0.5 * acceleration * t * t;
      break;
    }
    case MotionModel::sinusoidal_weave:
      lateral = weave_amplitude * std::sin(2.0 * std::numbers::pi * seconds / weave_period);
      break;
  }
  return {start.x + ux * s - uy * lateral, start.y + uy * s + ux * lateral};
}

void TrajectoryConfig::validate() const {
  if (!(fps > 0.0)) throw ConfigError("trajectory fps must be positive");
  if (length == 0) throw ConfigError("trajectory length must be positive");
  if (!(p_flip >= 0.0 && p_flip < 1.0)) throw ConfigError("p_flip must lie in [0, 1)");
  if (speed < 0.0) throw ConfigError("speed must be non-negative");
  if (motion == MotionModel::sinusoidal_weave && !(weave_period > 0.0)) {
    throw ConfigError("weave period must be positive");
  }
}

void CameraModel::validate() const {
  if (!(focal_px > 0.0)) throw ConfigError("camera focal length must be positive");
  if (!(width_px > 0.0 && height_px > 0.0)) throw ConfigError("camera image size must be positive");
  if (!(vehicle_length > 0.0 && vehicle_height > 0.0)) {
    throw ConfigError("vehicle extent must be positive");
  }
}

BoxProjection project_vehicle(const Position& pos, const CameraModel& cam) {
  BoxProjection out;
  if (pos.y <= kMinDepth) return out;
  const double f = cam.focal_px / pos.y;
  double left = cam.cx + f * (pos.x - 0.5 * cam.vehicle_length);
  double right = cam.cx + f * (pos.x + 0.5 * cam.vehicle_length);
  double top = cam.cy + f * (cam.mount_height - cam.vehicle_height);
  double bottom = cam.cy + f * cam.mount_height;
  left = std::clamp(left, 0.0, cam.width_px);
  right = std::clamp(right, 0.0, cam.width_px);
  top = std::clamp(top, 0.0, cam.height_px);
  bottom = std::clamp(bottom, 0.0, cam.height_px);
  if (right <= left || bottom <= top) return out;
  out.visible = true;
  out.box = {0.5 * (left + right) / cam.width_px, 0.5 * (top + bottom) / cam.height_px,
             (right - left) / cam.width_px, (bottom - top) / cam.height_px};
  for (double& v : out.box) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<Frame> simulate_sequence(const std::string& seq_id, const TrajectoryConfig& tcfg,
                                     const CameraModel& cam, const BeamCodebook& codebook,
                                     double carrier_hz, Rng& rng) {
  tcfg.validate();
  cam.validate();
  std::vector<Frame> all;
  std::vector<bool> visible;
  all.reserve(tcfg.length);
  for (std::size_t k = 0; k < tcfg.length; ++k) {
    const Position pos = tcfg.position_at(static_cast<double>(k) / tcfg.fps);
    const BoxProjection proj = project_vehicle(pos, cam);
    Frame f;
    f.seq_id = seq_id;
    f.bbox = proj.box;
    if (proj.visible) {
      const ChannelSample ch = los_channel(pos, codebook.antennas, carrier_hz);
      int beam = static_cast<int>(optimal_beam(ch.h, codebook));
      if (tcfg.p_flip > 0.0 && rng.bernoulli(tcfg.p_flip)) {
        beam += rng.bernoulli(0.5) ? 1 : -1;
        beam = std::clamp(beam, 0, static_cast<int>(codebook.size) - 1);
      }
      f.beam = beam;
    }
    all.push_back(f);
    visible.push_back(proj.visible);
  }

  std::size_t best_begin = 0;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < all.size();) {
    if (!visible[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < all.size() && visible[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_begin = i;
    }
    i = j;
  }
  if (best_len == 0) throw DataError("empty sequence: vehicle never visible in " + seq_id);

  std::vector<Frame> out(all.begin() + static_cast<std::ptrdiff_t>(best_begin),
                         all.begin() + static_cast<std::ptrdiff_t>(best_begin + best_len));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].frame = static_cast<int>(i);
  return out;
}

void ScenarioConfig::validate() const {
  sim.camera.validate();
  if (sim.antennas == 0 || sim.beams == 0) throw ConfigError("codebook needs N >= 1 and M >= 1");
  if (motions.empty()) throw ConfigError("scenario needs at least one motion model");
  if (!(lane_min > kMinDepth && lane_max >= lane_min)) throw ConfigError("invalid lane range");
  if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw ConfigError("invalid speed range");
  if (!(fps > 0.0)) throw ConfigError("fps must be positive");
  if (length_min == 0 || length_max < length_min) throw ConfigError("invalid length range");
  if (!(p_flip >= 0.0 && p_flip < 1.0)) throw ConfigError("p_flip must lie in [0, 1)");
  if (!(fov_margin > 0.0 && fov_margin <= 1.0)) throw ConfigError("fov_margin must lie in (0, 1]");
  if (weave_amplitude_max < 0.0 || weave_amplitude_max >= lane_min - kMinDepth) {
    throw ConfigError("weave amplitude must be smaller than the nearest lane distance");
  }
}

TrajectoryConfig draw_trajectory(const ScenarioConfig& sc, Rng& rng) {
  TrajectoryConfig t;
  t.motion = sc.motions[rng.below(sc.motions.size())];
  t.fps = sc.fps;
  t.p_flip = sc.p_flip;
  t.length = sc.length_min + rng.below(sc.length_max - sc.length_min + 1);
  const double lane = rng.uniform(sc.lane_min, sc.lane_max);
  const double duration = static_cast<double>(t.length - 1) / t.fps;

  double nearest = lane;
  if (t.motion == MotionModel::sinusoidal_weave) {
    t.weave_amplitude = rng.uniform(0.0, sc.weave_amplitude_max);
    t.weave_period = rng.uniform(2.0, 6.0);
    nearest = lane - t.weave_amplitude;
  }
  // Largest |x| whose box centre stays inside the image at the nearest depth.
  const double half_range =
      sc.fov_margin * std::min(sc.sim.camera.cx, sc.sim.camera.width_px - sc.sim.camera.cx) *
      nearest / sc.sim.camera.focal_px;

  t.speed = rng.uniform(sc.speed_min, sc.speed_max);
  if (t.motion == MotionModel::constant_acceleration) {
    t.acceleration = rng.uniform(-sc.accel_max, sc.accel_max);
  }
  auto travel = [&] {
    double tt = duration;
    if (t.acceleration < 0.0 && t.speed > 0.0) tt = std::min(tt, t.speed / -t.acceleration);
    return std::max(0.0, t.speed * tt + 0.5 * t.acceleration * tt * tt);
  };
  double dist = travel();
  if (dist > 2.0 * half_range) {
    const double k = 2.0 * half_range / dist;
    t.speed *= k;
    t.acceleration *= k;
    dist = travel();
  }
  const double direction = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double x0 = direction * rng.uniform(-half_range, half_range - dist);
  t.start = {x0, lane};
  t.end = {x0 + direction * std::max(dist, 1.0), lane};
  return t;
}

Dataset generate_dataset(std::size_t n_sequences, const ScenarioConfig& scenario, Rng& rng) {
  scenario.validate();
  const BeamCodebook cb = dft_codebook(scenario.sim.antennas, scenario.sim.beams);
  Dataset ds;
  ds.header.beams = scenario.sim.beams;
  ds.header.fps = scenario.fps;
  ds.header.config_hash = fingerprint(to_json(scenario).dump() + "|n=" +
                                      std::to_string(n_sequences) +
                                      "|seed=" + std::to_string(rng.seed()));
  for (std::size_t i = 0; i < n_sequences; ++i) {
    Rng seq_rng = rng.fork(i);
    const TrajectoryConfig t = draw_trajectory(scenario, seq_rng);
    char id[32];
    std::snprintf(id, sizeof(id), "seq%05zu", i);
    auto frames = simulate_sequence(id, t, scenario.sim.camera, cb, scenario.sim.carrier_hz,
                                    seq_rng);
    ds.frames.insert(ds.frames.end(), frames.begin(), frames.end());
  }
  return ds;
}

Dataset generate_dataset(std::size_t n_sequences, const ScenarioConfig& scenario, Rng& rng,
                         const std::filesystem::path& out_path) {
  Dataset ds = generate_dataset(n_sequences, scenario, rng);
  write_frames(out_path, ds);
  return ds;
}

std::string motion_name(MotionModel m) {
  switch (m) {
    case MotionModel::constant_velocity:
      return "constant-velocity";
    case MotionModel::constant_acceleration:
      return "constant-acceleration";
    case MotionModel::sinusoidal_weave:
      return "sinusoidal-weave";
  }
  return "unknown";
}

MotionModel parse_motion(const std::string& name) {
  if (name == "constant-velocity") return MotionModel::constant_velocity;
  if (name == "constant-acceleration") return MotionModel::constant_acceleration;
  if (name == "sinusoidal-weave") return MotionModel::sinusoidal_weave;
  throw ConfigError("unknown motion model '" + name + "'");
}

nlohmann::json to_json(const ScenarioConfig& s) {
  nlohmann::json motions = nlohmann::json::array();
  for (auto m : s.motions) motions.push_back(motion_name(m));
  const auto& c = s.sim.camera;
  return {
      {"antennas", s.sim.antennas},
      {"beams", s.sim.beams},
      {"carrier_hz", s.sim.carrier_hz},
      {"camera",
       {{"focal_px", c.focal_px},
        {"cx", c.cx},
        {"cy", c.cy},
        {"width_px", c.width_px},
        {"height_px", c.height_px},
        {"mount_height", c.mount_height},
        {"vehicle_length", c.vehicle_length},
        {"vehicle_height", c.vehicle_height}}},
      {"motions", motions},
      {"lane_min", s.lane_min},
      {"lane_max", s.lane_max},
      {"speed_min", s.speed_min},
      {"speed_max", s.speed_max},
      {"accel_max", s.accel_max},
      {"weave_amplitude_max", s.weave_amplitude_max},
      {"fps", s.fps},
      {"length_min", s.length_min},
      {"length_max", s.length_max},
      {"p_flip", s.p_flip},
      {"fov_margin", s.fov_margin},
  };
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig s;
  StrictObject o(j, "simulator");
  o.read("antennas", s.sim.antennas).read("beams", s.sim.beams).read("carrier_hz", s.sim.carrier_hz);
  if (const auto* cam = o.child("camera")) {
    auto& c = s.sim.camera;
    StrictObject oc(*cam, "simulator.camera");
    oc.read("focal_px", c.focal_px)
        .read("cx", c.cx)
        .read("cy", c.cy)
        .read("width_px", c.width_px)
        .read("height_px", c.height_px)
        .read("mount_height", c.mount_height)
        .read("vehicle_length", c.vehicle_length)
        .read("vehicle_height", c.vehicle_height);
    oc.finish();
  }
  std::vector<std::string> motions;
  o.read("motions", motions);
  if (!motions.empty()) {
    s.motions.clear();
    for (const auto& m : motions) s.motions.push_back(parse_motion(m));
  }
  o.read("lane_min", s.lane_min)
      .read("lane_max", s.lane_max)
      .read("speed_min", s.speed_min)
      .read("speed_max", s.speed_max)
      .read("accel_max", s.accel_max)
      .read("weave_amplitude_max", s.weave_amplitude_max)
      .read("fps", s.fps)
      .read("length_min", s.length_min)
      .read("length_max", s.length_max)
      .read("p_flip", s.p_flip)
      .read("fov_margin", s.fov_margin);
  o.finish();
  s.validate();
  return s;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fmbeam
