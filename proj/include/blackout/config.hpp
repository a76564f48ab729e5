#pragma once

// Flat `key = value` experiment configuration.
//
// Lines starting with '#' are comments. Lists are comma separated. Densities
// take an explicit unit suffix: "1e16 cm^-3" or "1e22 m^-3". Unknown keys are
// rejected. to_text() writes every key in a fixed order so archived configs
// diff cleanly and reload to an identical config.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blackout/baselines.hpp"
#include "blackout/em.hpp"
#include "blackout/physics.hpp"

namespace blackout::bench {

enum class SnrConvention { EsN0, EbN0 };

struct ExperimentConfig {
  // channel
  double carrier_frequency = 9e9;     // as configured; see frequency_convention
  double collision_frequency = 20e9;
  physics::FrequencyConvention frequency_convention = physics::FrequencyConvention::Ordinary;
  physics::LossTerm loss_term = physics::LossTerm::AsPrinted;
  double density_min = 1e22;          // m^-3
  double density_max = 6e23;          // m^-3
  double sheath_thickness = 0.0;      // m; 0 = calibrate from fade_floor
  double fade_floor = 0.05;           // |s(n_max)| targeted by the calibration

  // trajectory
  physics::ProfileKind trajectory = physics::ProfileKind::Sinusoid;
  double oscillation_frequency = 50e3;
  double phase_offset = 0.0;
  double symbol_rate = 10e6;
  double constant_level = 0.0;

  // link
  std::size_t frame_length = 4096;
  int bits_per_symbol = 2;
  std::vector<std::size_t> pilot_intervals = {256, 16};
  std::vector<double> snr_db = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  SnrConvention snr_convention = SnrConvention::EsN0;
  int trials = 10;
  std::uint64_t seed = 20190601;

  // receivers
  std::vector<std::string> receivers = {"smn", "dnn", "pilot_interp", "genie"};
  em::EmSchedule schedule{};
  double learning_rate = 1e-3;
  double sigma_floor = 1e-6;
  double init_stddev = 0.1;
  bool init_value_is_variance = false;
  std::vector<Eigen::Index> dnn_hidden = {16, 16};
  int dnn_steps = 2000;
  double dnn_learning_rate = 1e-2;

  // studies
  double snapshot_snr_db = 20.0;
  std::size_t snapshot_interval = 256;
  std::vector<double> fading_snr_db = {20, 11, 5};
  std::size_t fading_interval = 256;
  int curve_grid_points = 200;

  int threads = 0;  // 0 = hardware concurrency
  std::string output_dir = "blackout-out";

  /// Resolved physics parameters (sheath thickness calibrated if unset).
  physics::ChannelParams channel() const;
  physics::DensityTrajectory trajectory_spec(int trial) const;
  double noise_variance(double snr_db) const;
  double init_stddev_value() const;
  em::EmOptions em_options() const;
  baselines::DnnConfig dnn_config(std::uint64_t seed) const;

  std::string to_text() const;
};

/// Applies one `key = value` setting; throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses "<number> cm^-3" / "<number> m^-3" (bare numbers are m^-3) into m^-3.
double parse_density(const std::string& value);

}  // namespace blackout::bench
