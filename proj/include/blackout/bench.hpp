#pragma once

// Experiment driver: SER sweeps, learning-process snapshots and fading
// estimation, each a seeded pure function of an ExperimentConfig.
//
// Output files (all CSV start with a "# schema=<name>/<version>" line):
//   ser.csv                 receiver,snr_db,pilot_interval,frames,trials,errors,ser,bandwidth_utilization,status
//   snapshots/NN_<tag>_points.csv   index,pilot_flag,true_symbol,I,Q,decision
//   snapshots/NN_<tag>_curves.csv   curve,lambda,I,Q            (absent for the raw panel)
//   snapshots/NN_<tag>_model.txt    SMN checkpoint              (absent for the raw panel)
//   trace.csv, posteriors.csv       from the snapshot run
//   fading_samples.csv      snr_db,index,true_I,true_Q,est_I,est_Q,abs_error
//   fading_summary.csv      snr_db,payload_symbols,rmse,rmse_interior,ser
//   config.txt              the resolved config

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blackout/config.hpp"
#include "blackout/em.hpp"
#include "blackout/link.hpp"

namespace blackout::bench {

using Complex = std::complex<double>;

struct SerCount {
  std::size_t errors = 0;
  std::size_t symbols = 0;
  double ser() const { return symbols ? static_cast<double>(errors) / static_cast<double>(symbols) : 0.0; }
};

/// Mismatches over the payload positions only.
SerCount compute_ser(const std::vector<int>& decisions, const std::vector<int>& truth,
                     const std::vector<std::size_t>& payload_positions);

struct SerRecord {
  std::string receiver;
  double snr_db = 0.0;
  std::size_t pilot_interval = 0;
  int frames = 0;
  std::size_t trials = 0;  // payload symbols scored
  std::size_t errors = 0;
  double ser = 0.0;
  double bandwidth_utilization = 0.0;
  std::string status = "ok";
};

struct Simulation {
  link::Constellation constellation;
  link::Frame frame;
  link::ReceivedSequence received;
};

/// One frame for (snr, interval, trial). Symbols, gains and the unit noise
/// realisation depend only on (seed, trial), so cells that differ in SNR or
/// interval share them.
Simulation simulate(const ExperimentConfig& cfg, double snr_db, std::size_t interval, int trial);

struct SmnRun {
  em::Model model;
  em::FitResult fit;
  std::vector<int> decisions;
};

/// Initialises and fits an SMN on a simulated frame.
SmnRun run_smn(const ExperimentConfig& cfg, const Simulation& sim, int trial, const em::FitObserver& observer = {});

/// Decisions of a named receiver ("smn", "dnn", "pilot_interp", "genie").
std::vector<int> run_receiver(const ExperimentConfig& cfg, const std::string& receiver, const Simulation& sim,
                              int trial);

std::vector<SerRecord> run_ser_sweep(const ExperimentConfig& cfg);
void write_ser_csv(std::ostream& os, const std::vector<SerRecord>& records);

struct Snapshot {
  std::string tag;
  std::vector<Complex> samples;
  std::vector<int> decisions;                // empty for the raw panel
  net::RowVector<double> lambda_grid;
  std::vector<std::vector<Complex>> curves;  // empty for the raw panel
  std::optional<em::Model> model;
};

struct SnapshotRun {
  Simulation sim;
  std::vector<Snapshot> snapshots;
  em::FitResult fit;
  std::vector<int> decisions;
  double payload_ser = 0.0;
  double mean_max_posterior = 0.0;
  double max_row_sum_error = 0.0;  // over every posterior matrix produced
};

SnapshotRun run_learning_snapshots(const ExperimentConfig& cfg);

struct FadingRecord {
  double snr_db = 0.0;
  std::size_t payload_symbols = 0;
  double rmse = 0.0;
  double rmse_interior = 0.0;  // excluding the 10% lowest and highest curve coordinates
  double ser = 0.0;
  std::vector<Complex> true_gains;
  std::vector<Complex> estimated_gains;
  std::vector<std::size_t> positions;
  em::ElboTrace trace;
  double max_row_sum_error = 0.0;
};

std::vector<FadingRecord> run_fading_estimation(const ExperimentConfig& cfg);

// File writers. Each creates cfg.output_dir and archives config.txt beside the data.
void write_ser_outputs(const ExperimentConfig& cfg, const std::vector<SerRecord>& records);
void write_snapshot_outputs(const ExperimentConfig& cfg, const SnapshotRun& run);
void write_fading_outputs(const ExperimentConfig& cfg, const std::vector<FadingRecord>& records);

struct PhysicsReport {
  std::size_t points = 0;
  double max_relative_error = 0.0;
  bool attenuation_monotone = false;
  bool gain_monotone = false;
};

/// Closed-form alpha/beta against (omega/c) * principal sqrt(eps_r) over
/// log-uniform densities, plus monotonicity on a uniform grid.
PhysicsReport validate_physics(const physics::ChannelParams& params, std::size_t points, std::uint64_t seed);

/// Quick invariant suite; prints one line per check. Returns true if all pass.
bool run_selftest(std::ostream& os);

}  // namespace blackout::bench
