#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmbeam/rng.hpp"

namespace fmbeam {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// DFT codebook of `size` unit-norm beams for an `antennas`-element
/// half-wavelength ULA. Beam m (0-based) points at
/// sin(theta_m) = -1 + (2m + 1) / size.
struct BeamCodebook {
  std::size_t antennas = 0;
  std::size_t size = 0;
  std::vector<ComplexVector> beams;
  std::vector<double> angles;  // radians
};

BeamCodebook dft_codebook(std::size_t antennas, std::size_t size);

// a[n] = exp(-j*pi*n*sin(angle)), not normalised.
ComplexVector steering_vector(double angle, std::size_t antennas);

// argmax_m |h^H w_m|^2, ties to the lowest index.
std::size_t optimal_beam(const ComplexVector& h, const BeamCodebook& codebook);

// |h^H w|^2 * symbol_power plus, when noise_power > 0, the power of one
// circularly-symmetric complex Gaussian noise sample added to the received
// symbol.
double measure_power(const ComplexVector& h, const ComplexVector& w, double noise_power, Rng& rng,
                     double symbol_power = 1.0);

struct ChannelSample {
  ComplexVector h;
  double angle = 0.0;
  Complex gain{1.0, 0.0};
  double noise_power = 0.0;
  double symbol_power = 1.0;
};

struct Position {
  double x = 0.0;  // along the road, metres
  double y = 0.0;  // distance from the RSU along the array broadside, metres
};

// Single-path line-of-sight channel from an RSU at the origin to `pos`.
ChannelSample los_channel(const Position& pos, std::size_t antennas, double carrier_hz);

enum class MotionModel { constant_velocity, constant_acceleration, sinusoidal_weave };

struct TrajectoryConfig {
  MotionModel motion = MotionModel::constant_velocity;
  Position start;
  Position end;            // direction of travel is start -> end
  double speed = 5.0;      // m/s at t = 0
  double acceleration = 0.0;     // m/s^2, constant_acceleration only
  double weave_amplitude = 0.0;  // metres, sinusoidal_weave only
  double weave_period = 4.0;     // seconds, sinusoidal_weave only
  double fps = 7.0;
  std::size_t length = 40;  // frames
  double p_flip = 0.0;      // probability of replacing a label by a neighbour

  Position position_at(double seconds) const;
  void validate() const;
};

/// Pinhole camera on the RSU, looking along +y with the image x axis aligned
/// to the road.
struct CameraModel {
  double focal_px = 369.5;  // ~120 deg horizontal field of view at 1280 px
  double cx = 640.0;
  double cy = 360.0;
  double width_px = 1280.0;
  double height_px = 720.0;
  double mount_height = 5.0;     // metres above the road
  double vehicle_length = 4.5;   // extent along the road
  double vehicle_height = 1.6;

  void validate() const;
};

// Normalised [xc, yc, w, h] box, or nullopt-like empty result when the
// vehicle is not visible. `visible` reports which.
struct BoxProjection {
  bool visible = false;
  std::array<double, 4> box{};
};
BoxProjection project_vehicle(const Position& pos, const CameraModel& cam);

struct Frame {
  std::string seq_id;
  int frame = 0;
  std::array<double, 4> bbox{};  // xc, yc, w, h in [0, 1]
  int beam = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct SimulatorConfig {
  std::size_t antennas = 32;
  std::size_t beams = 32;
  double carrier_hz = 60e9;  // metadata; labels depend on geometry only
  CameraModel camera;
};

/// Simulates `tcfg.length` frames and keeps the longest run of consecutive
/// frames in which the vehicle is visible, renumbered from 0. Throws
/// DataError("empty sequence") when it is never visible.
std::vector<Frame> simulate_sequence(const std::string& seq_id, const TrajectoryConfig& tcfg,
                                     const CameraModel& cam, const BeamCodebook& codebook,
                                     double carrier_hz, Rng& rng);

/// Ranges from which generate_dataset draws one TrajectoryConfig per
/// sequence. Every drawn pass stays inside the camera's field of view.
struct ScenarioConfig {
  SimulatorConfig sim;
  std::vector<MotionModel> motions{MotionModel::constant_velocity};
  double lane_min = 15.0;
  double lane_max = 35.0;
  double speed_min = 2.0;
  double speed_max = 8.0;
  double accel_max = 0.5;
  double weave_amplitude_max = 1.0;
  double fps = 7.0;
  std::size_t length_min = 40;
  std::size_t length_max = 60;
  double p_flip = 0.0;
  double fov_margin = 0.95;  // fraction of the half image width a pass may use

  void validate() const;
};

struct DatasetHeader {
  std::size_t beams = 32;
  double fps = 7.0;
  std::string config_hash;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Frame> frames;
};

TrajectoryConfig draw_trajectory(const ScenarioConfig& scenario, Rng& rng);

Dataset generate_dataset(std::size_t n_sequences, const ScenarioConfig& scenario, Rng& rng);
Dataset generate_dataset(std::size_t n_sequences, const ScenarioConfig& scenario, Rng& rng,
                         const std::filesystem::path& out_path);

nlohmann::json to_json(const ScenarioConfig& s);
ScenarioConfig scenario_from_json(const nlohmann::json& j);  // rejects unknown keys
std::string motion_name(MotionModel m);
MotionModel parse_motion(const std::string& name);

// 16 hex digits of FNV-1a over the text.
std::string fingerprint(const std::string& text);

}  // namespace fmbeam
