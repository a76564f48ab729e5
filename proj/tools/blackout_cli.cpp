// Command-line driver for the blackout experiments.
//
//   blackout ser-sweep        --config exp.cfg --snr 0,4,8 --interval 256,16
//   blackout snapshots        --seed 7 --output-dir out/
//   blackout fading
//   blackout validate-physics --points 1000
//   blackout selftest
//
// The default output directory comes from $BLACKOUT_OUTPUT_DIR, else the config.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "blackout/bench.hpp"
#include "blackout/errors.hpp"

namespace {

using blackout::bench::ExperimentConfig;

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<double> snr;
  std::vector<std::size_t> intervals;
  std::vector<std::string> settings;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Experiment config file");
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory");
  cmd->add_option("--snr", o.snr, "SNR list in dB")->delimiter(',');
  cmd->add_option("--interval", o.intervals, "Pilot interval list")->delimiter(',');
  cmd->add_option("--set", o.settings, "Override a config key (key=value)");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

ExperimentConfig resolve(const CLI::App& cmd, const CommonOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : blackout::bench::load_config(o.config_path);
  if (const char* env = std::getenv("BLACKOUT_OUTPUT_DIR"); env && *env && o.config_path.empty()) cfg.output_dir = env;
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw blackout::ConfigError("--set expects key=value, got '" + s + "'");
    blackout::bench::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (cmd.count("--seed")) cfg.seed = o.seed;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (!o.snr.empty()) cfg.snr_db = o.snr;
  if (!o.intervals.empty()) cfg.pilot_intervals = o.intervals;
  if (o.threads >= 0) cfg.threads = o.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plasma-sheath blackout demodulation experiments"};
  app.require_subcommand(1);

  CommonOptions sweep_opts, snap_opts, fading_opts, phys_opts;
  auto* sweep = app.add_subcommand("ser-sweep", "SER versus SNR for every receiver and pilot interval");
  auto* snaps = app.add_subcommand("snapshots", "Curve and decision snapshots through SMN training");
  auto* fading = app.add_subcommand("fading", "Fading-curve estimation error at several SNRs");
  auto* phys = app.add_subcommand("validate-physics", "Check the closed-form propagation coefficients");
  auto* self = app.add_subcommand("selftest", "Run the built-in invariant checks");
  add_common(sweep, sweep_opts);
  add_common(snaps, snap_opts);
  add_common(fading, fading_opts);
  add_common(phys, phys_opts);
  std::size_t points = 1000;
  phys->add_option("--points", points, "Number of log-uniform densities")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sweep) {
      const auto cfg = resolve(*sweep, sweep_opts);
      const auto records = blackout::bench::run_ser_sweep(cfg);
      blackout::bench::write_ser_outputs(cfg, records);
      blackout::bench::write_ser_csv(std::cout, records);
      for (const auto& r : records)
        if (r.status != "ok") return 1;
    } else if (*snaps) {
      const auto cfg = resolve(*snaps, snap_opts);
      const auto run = blackout::bench::run_learning_snapshots(cfg);
      blackout::bench::write_snapshot_outputs(cfg, run);
      std::cout << "pilots " << run.sim.frame.pilot_positions.size() << "\npayload_ser " << run.payload_ser
                << "\nmean_max_posterior " << run.mean_max_posterior << "\nsigma_clamps "
                << run.fit.trace.sigma_clamps << "\noutput " << cfg.output_dir << '\n';
    } else if (*fading) {
      const auto cfg = resolve(*fading, fading_opts);
      const auto records = blackout::bench::run_fading_estimation(cfg);
      blackout::bench::write_fading_outputs(cfg, records);
      std::cout << "snr_db,rmse,rmse_interior,ser\n";
      for (const auto& r : records)
        std::cout << r.snr_db << ',' << r.rmse << ',' << r.rmse_interior << ',' << r.ser << '\n';
    } else if (*phys) {
      const auto cfg = resolve(*phys, phys_opts);
      const auto rep = blackout::bench::validate_physics(cfg.channel(), points, cfg.seed);
      const bool ok = rep.max_relative_error < 1e-10 && rep.attenuation_monotone && rep.gain_monotone;
      std::cout << "points " << rep.points << "\nmax_relative_error " << rep.max_relative_error
                << "\nattenuation_monotone " << rep.attenuation_monotone << "\ngain_monotone " << rep.gain_monotone
                << '\n'
                << (ok ? "PASS" : "FAIL") << '\n';
      return ok ? 0 : 1;
    } else if (*self) {
      return blackout::bench::run_selftest(std::cout) ? 0 : 1;
    }
  } catch (const blackout::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
