#include "blackout/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "blackout/baselines.hpp"
#include "blackout/errors.hpp"
#include "blackout/physics.hpp"
#include "blackout/rng.hpp"

namespace blackout::bench {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::uint64_t stream_seed(const ExperimentConfig& cfg, StreamRole role, int trial) {
  return Rng::substream(cfg.seed, role, static_cast<std::uint64_t>(trial)).next_u64();
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

void archive_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  auto os = open_output(fs::path(cfg.output_dir) / "config.txt");
  os << cfg.to_text();
}

// Argmin of the projection distance; used for panels taken before any E-step.
std::vector<int> nearest_curve(const em::Model& model, const em::Samples& y) {
  const Eigen::MatrixXd d = net::squared_distances(model, y);
  std::vector<int> out(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    Eigen::Index best = 0;
    d.row(i).minCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Snapshot make_snapshot(const std::string& tag, const Simulation& sim, const em::Model& model,
                       std::vector<int> decisions, int grid_points) {
  Snapshot s;
  s.tag = tag;
  s.samples = sim.received.samples;
  const auto y = em::to_samples(sim.received.samples);
  const auto est = em::extract_fading_curve(model, y, decisions, sim.frame, sim.constellation.points, grid_points);
  s.decisions = std::move(decisions);
  s.lambda_grid = est.lambda_grid;
  s.curves = est.curves;
  s.model = model;
  return s;
}

}  // namespace

SerCount compute_ser(const std::vector<int>& decisions, const std::vector<int>& truth,
                     const std::vector<std::size_t>& payload_positions) {
  if (decisions.size() != truth.size())
    throw ContractError("compute_ser: " + std::to_string(decisions.size()) + " decisions for " +
                        std::to_string(truth.size()) + " symbols");
  SerCount c;
  for (auto p : payload_positions) {
    if (p >= truth.size()) throw ContractError("compute_ser: payload position out of range");
    c.errors += decisions[p] != truth[p] ? 1 : 0;
    ++c.symbols;
  }
  return c;
}

Simulation simulate(const ExperimentConfig& cfg, double snr_db, std::size_t interval, int trial) {
  Simulation sim;
  sim.constellation = link::build_constellation(cfg.bits_per_symbol);
  sim.frame = link::build_frame(cfg.frame_length, interval, sim.constellation.order(),
                                stream_seed(cfg, StreamRole::Symbols, trial));
  const auto params = cfg.channel();
  const auto gains = physics::channel_gains(physics::density_trajectory(cfg.trajectory_spec(trial), params), params);
  sim.received = link::transmit(sim.frame, sim.constellation, gains, cfg.noise_variance(snr_db),
                                stream_seed(cfg, StreamRole::Noise, trial));
  return sim;
}

SmnRun run_smn(const ExperimentConfig& cfg, const Simulation& sim, int trial, const em::FitObserver& observer) {
  net::SmnArchitecture arch;
  arch.init_stddev = cfg.init_stddev_value();
  SmnRun run{net::init_model<double>(sim.constellation.points, stream_seed(cfg, StreamRole::SmnInit, trial), arch),
             {},
             {}};
  run.fit = em::fit(run.model, sim.received, sim.frame, cfg.schedule, cfg.em_options(), observer);
  run.decisions = em::demodulate(run.fit.posteriors);
  return run;
}

std::vector<int> run_receiver(const ExperimentConfig& cfg, const std::string& receiver, const Simulation& sim,
                              int trial) {
  if (receiver == "smn") return run_smn(cfg, sim, trial).decisions;
  if (receiver == "dnn")
    return baselines::supervised_dnn(sim.received, sim.frame, sim.constellation,
                                     cfg.dnn_config(stream_seed(cfg, StreamRole::DnnInit, trial)))
        .decisions;
  if (receiver == "pilot_interp") return baselines::pilot_interp_ml(sim.received, sim.frame, sim.constellation).decisions;
  if (receiver == "genie") return baselines::genie_ml(sim.received, sim.constellation).decisions;
  throw ConfigError("unknown receiver '" + receiver + "'");
}

std::vector<SerRecord> run_ser_sweep(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  const std::size_t n_snr = cfg.snr_db.size();
  const std::size_t n_int = cfg.pilot_intervals.size();
  const std::size_t n_rx = cfg.receivers.size();
  const auto n_trials = static_cast<std::size_t>(cfg.trials);

  struct Outcome {
    SerCount count;
    std::string error;
  };
  // outcomes[((s * n_int + i) * n_trials + t) * n_rx + r]
  std::vector<Outcome> outcomes(n_snr * n_int * n_trials * n_rx);
  parallel_for(n_snr * n_int * n_trials, cfg.threads, [&](std::size_t task) {
    const std::size_t t = task % n_trials;
    const std::size_t i = (task / n_trials) % n_int;
    const std::size_t s = task / (n_trials * n_int);
    Simulation sim;
    std::string sim_error;
    try {
      sim = simulate(cfg, cfg.snr_db[s], cfg.pilot_intervals[i], static_cast<int>(t));
    } catch (const std::exception& e) {
      sim_error = e.what();
    }
    for (std::size_t r = 0; r < n_rx; ++r) {
      auto& out = outcomes[task * n_rx + r];
      if (!sim_error.empty()) {
        out.error = sim_error;
        continue;
      }
      try {
        const auto d = run_receiver(cfg, cfg.receivers[r], sim, static_cast<int>(t));
        out.count = compute_ser(d, sim.frame.symbols, sim.frame.payload_positions);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  });

  std::vector<SerRecord> records;
  for (std::size_t r = 0; r < n_rx; ++r)
    for (std::size_t s = 0; s < n_snr; ++s)
      for (std::size_t i = 0; i < n_int; ++i) {
        SerRecord rec;
        rec.receiver = cfg.receivers[r];
        rec.snr_db = cfg.snr_db[s];
        rec.pilot_interval = cfg.pilot_intervals[i];
        rec.bandwidth_utilization = 1.0 - 1.0 / static_cast<double>(rec.pilot_interval);
        for (std::size_t t = 0; t < n_trials; ++t) {
          const auto& out = outcomes[((s * n_int + i) * n_trials + t) * n_rx + r];
          if (!out.error.empty()) {
            rec.status = "error: " + out.error;
            std::replace(rec.status.begin(), rec.status.end(), ',', ';');
            continue;
          }
          ++rec.frames;
          rec.trials += out.count.symbols;
          rec.errors += out.count.errors;
        }
        rec.ser = rec.trials ? static_cast<double>(rec.errors) / static_cast<double>(rec.trials) : 0.0;
        records.push_back(rec);
      }
  return records;
}

void write_ser_csv(std::ostream& os, const std::vector<SerRecord>& records) {
  os << "# schema=ser/1\n";
  os << "receiver,snr_db,pilot_interval,frames,trials,errors,ser,bandwidth_utilization,status\n";
  for (const auto& r : records)
    os << r.receiver << ',' << num(r.snr_db) << ',' << r.pilot_interval << ',' << r.frames << ',' << r.trials << ','
       << r.errors << ',' << num(r.ser) << ',' << num(r.bandwidth_utilization) << ',' << r.status << '\n';
}

SnapshotRun run_learning_snapshots(const ExperimentConfig& cfg) {
  SnapshotRun run;
  run.sim = simulate(cfg, cfg.snapshot_snr_db, cfg.snapshot_interval, 0);
  const auto& sim = run.sim;
  const auto y = em::to_samples(sim.received.samples);

  Snapshot raw;
  raw.tag = "raw";
  raw.samples = sim.received.samples;
  run.snapshots.push_back(std::move(raw));

  const int pre_mid = std::max(1, cfg.schedule.pretrain_steps / 2);
  const int em_mid = std::max(1, (cfg.schedule.em_iterations + 1) / 2);
  double worst_row = 0.0;
  const auto observer = [&](const em::FitEvent& ev) {
    if (ev.posteriors) worst_row = std::max(worst_row, em::max_row_sum_error(*ev.posteriors));
    if (ev.phase == "pretrain_step" && ev.step == pre_mid && ev.step < cfg.schedule.pretrain_steps) {
      run.snapshots.push_back(make_snapshot("pretrain_mid", sim, ev.model, nearest_curve(ev.model, y),
                                            cfg.curve_grid_points));
    } else if (ev.phase == "pretrain_done") {
      if (run.snapshots.size() < 2)  // pretraining too short for a separate midpoint
        run.snapshots.push_back(make_snapshot("pretrain_mid", sim, ev.model, nearest_curve(ev.model, y),
                                              cfg.curve_grid_points));
      run.snapshots.push_back(make_snapshot("pretrain_end", sim, ev.model, nearest_curve(ev.model, y),
                                            cfg.curve_grid_points));
    } else if (ev.phase == "m_step" && (ev.step == 1 || ev.step == em_mid)) {
      if (ev.step == 1 || em_mid != 1)
        run.snapshots.push_back(make_snapshot(ev.step == 1 ? "em_first" : "em_mid", sim, ev.model,
                                              em::demodulate(*ev.posteriors), cfg.curve_grid_points));
    }
  };

  auto smn = run_smn(cfg, sim, 0, observer);
  // Fill in EM panels that a short schedule did not produce.
  while (run.snapshots.size() < 5)
    run.snapshots.push_back(make_snapshot(run.snapshots.size() == 3 ? "em_first" : "em_mid", sim, smn.model,
                                          smn.decisions, cfg.curve_grid_points));
  run.snapshots.push_back(make_snapshot("final", sim, smn.model, smn.decisions, cfg.curve_grid_points));

  run.decisions = smn.decisions;
  run.fit = std::move(smn.fit);
  run.payload_ser = compute_ser(run.decisions, sim.frame.symbols, sim.frame.payload_positions).ser();
  run.mean_max_posterior = em::mean_max_posterior(run.fit.posteriors, sim.frame.payload_positions);
  run.max_row_sum_error = std::max(worst_row, em::max_row_sum_error(run.fit.posteriors));
  return run;
}

std::vector<FadingRecord> run_fading_estimation(const ExperimentConfig& cfg) {
  std::vector<FadingRecord> out(cfg.fading_snr_db.size());
  parallel_for(out.size(), cfg.threads, [&](std::size_t idx) {
    FadingRecord& rec = out[idx];
    rec.snr_db = cfg.fading_snr_db[idx];
    const auto sim = simulate(cfg, rec.snr_db, cfg.fading_interval, 0);
    double worst_row = 0.0;
    auto smn = run_smn(cfg, sim, 0, [&](const em::FitEvent& ev) {
      if (ev.posteriors) worst_row = std::max(worst_row, em::max_row_sum_error(*ev.posteriors));
    });
    const auto y = em::to_samples(sim.received.samples);
    const auto est =
        em::extract_fading_curve(smn.model, y, smn.decisions, sim.frame, sim.constellation.points, cfg.curve_grid_points);

    rec.positions = sim.frame.payload_positions;
    rec.payload_symbols = rec.positions.size();
    double sq = 0.0;
    for (auto p : rec.positions) {
      rec.true_gains.push_back(sim.received.true_gains[p]);
      rec.estimated_gains.push_back(est.sample_gains[p]);
      sq += std::norm(est.sample_gains[p] - sim.received.true_gains[p]);
    }
    rec.rmse = std::sqrt(sq / static_cast<double>(rec.payload_symbols));

    // Interior: drop the 10% extreme curve coordinates on each side.
    const auto lambda = em::curve_coordinates(smn.model, y, smn.decisions, {});
    std::vector<std::pair<double, std::size_t>> by_lambda;
    for (int k = 0; k < smn.model.curves(); ++k) {
      std::vector<Eigen::Index> cols;
      std::vector<std::size_t> pos;
      for (auto p : rec.positions)
        if (smn.decisions[p] == k) {
          cols.push_back(static_cast<Eigen::Index>(p));
          pos.push_back(p);
        }
      if (cols.empty()) continue;
      const em::Samples sub = y(Eigen::all, cols);
      const auto l = net::encode(smn.model, sub, k);
      for (std::size_t j = 0; j < pos.size(); ++j) by_lambda.emplace_back(l(static_cast<Eigen::Index>(j)), pos[j]);
    }
    std::sort(by_lambda.begin(), by_lambda.end());
    const std::size_t cut = by_lambda.size() / 10;
    double sq_in = 0.0;
    std::size_t n_in = 0;
    for (std::size_t j = cut; j + cut < by_lambda.size(); ++j, ++n_in) {
      const auto p = by_lambda[j].second;
      sq_in += std::norm(est.sample_gains[p] - sim.received.true_gains[p]);
    }
    rec.rmse_interior = n_in ? std::sqrt(sq_in / static_cast<double>(n_in)) : 0.0;
    rec.ser = compute_ser(smn.decisions, sim.frame.symbols, sim.frame.payload_positions).ser();
    rec.trace = smn.fit.trace;
    rec.max_row_sum_error = std::max(worst_row, em::max_row_sum_error(smn.fit.posteriors));
  });
  return out;
}

void write_ser_outputs(const ExperimentConfig& cfg, const std::vector<SerRecord>& records) {
  archive_config(cfg);
  auto os = open_output(fs::path(cfg.output_dir) / "ser.csv");
  write_ser_csv(os, records);
}

void write_snapshot_outputs(const ExperimentConfig& cfg, const SnapshotRun& run) {
  archive_config(cfg);
  const fs::path dir = fs::path(cfg.output_dir) / "snapshots";
  fs::create_directories(dir);
  const auto mask = run.sim.frame.pilot_mask();
  for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
    const auto& snap = run.snapshots[s];
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%02zu_", s);
    const std::string stem = prefix + snap.tag;
    {
      auto os = open_output(dir / (stem + "_points.csv"));
      os << "# schema=snapshot_points/1\n";
      os << "index,pilot_flag,true_symbol,I,Q,decision\n";
      for (std::size_t i = 0; i < snap.samples.size(); ++i)
        os << i << ',' << (mask[i] ? 1 : 0) << ',' << run.sim.frame.symbols[i] << ',' << num(snap.samples[i].real())
           << ',' << num(snap.samples[i].imag()) << ',' << (snap.decisions.empty() ? -1 : snap.decisions[i]) << '\n';
    }
    if (!snap.curves.empty()) {
      auto os = open_output(dir / (stem + "_curves.csv"));
      os << "# schema=snapshot_curves/1\n";
      os << "curve,lambda,I,Q\n";
      for (std::size_t k = 0; k < snap.curves.size(); ++k)
        for (std::size_t j = 0; j < snap.curves[k].size(); ++j)
          os << k << ',' << num(snap.lambda_grid(static_cast<Eigen::Index>(j))) << ','
             << num(snap.curves[k][j].real()) << ',' << num(snap.curves[k][j].imag()) << '\n';
    }
    if (snap.model) {
      auto os = open_output(dir / (stem + "_model.txt"));
      net::save_checkpoint(os, *snap.model);
    }
  }
  {
    auto os = open_output(fs::path(cfg.output_dir) / "trace.csv");
    em::write_trace_csv(os, run.fit.trace);
  }
  {
    auto os = open_output(fs::path(cfg.output_dir) / "posteriors.csv");
    em::write_posteriors_csv(os, run.fit.posteriors);
  }
  {
    auto os = open_output(fs::path(cfg.output_dir) / "frame.csv");
    link::write_csv(os, run.sim.frame, run.sim.received);
  }
  auto os = open_output(fs::path(cfg.output_dir) / "snapshot_summary.csv");
  os << "# schema=snapshot_summary/1\n";
  os << "pilots,payload_symbols,payload_ser,mean_max_posterior,sigma_clamps\n";
  os << run.sim.frame.pilot_positions.size() << ',' << run.sim.frame.payload_positions.size() << ','
     << num(run.payload_ser) << ',' << num(run.mean_max_posterior) << ',' << run.fit.trace.sigma_clamps << '\n';
}

void write_fading_outputs(const ExperimentConfig& cfg, const std::vector<FadingRecord>& records) {
  archive_config(cfg);
  {
    auto os = open_output(fs::path(cfg.output_dir) / "fading_samples.csv");
    os << "# schema=fading_samples/1\n";
    os << "snr_db,index,true_I,true_Q,est_I,est_Q,abs_error\n";
    for (const auto& r : records)
      for (std::size_t j = 0; j < r.positions.size(); ++j)
        os << num(r.snr_db) << ',' << r.positions[j] << ',' << num(r.true_gains[j].real()) << ','
           << num(r.true_gains[j].imag()) << ',' << num(r.estimated_gains[j].real()) << ','
           << num(r.estimated_gains[j].imag()) << ',' << num(std::abs(r.estimated_gains[j] - r.true_gains[j]))
           << '\n';
  }
  auto os = open_output(fs::path(cfg.output_dir) / "fading_summary.csv");
  os << "# schema=fading_summary/1\n";
  os << "snr_db,payload_symbols,rmse,rmse_interior,ser\n";
  for (const auto& r : records)
    os << num(r.snr_db) << ',' << r.payload_symbols << ',' << num(r.rmse) << ',' << num(r.rmse_interior) << ','
       << num(r.ser) << '\n';
}

PhysicsReport validate_physics(const physics::ChannelParams& params, std::size_t points, std::uint64_t seed) {
  PhysicsReport rep;
  rep.points = points;
  Rng rng = Rng::substream(seed, StreamRole::Physics);
  const double lo = std::log(params.density_min);
  const double hi = std::log(params.density_max);
  const double k0 = params.carrier_angular_freq / physics::PhysicalConstants::light_speed;
  for (std::size_t i = 0; i < points; ++i) {
    const double n = std::exp(lo + (hi - lo) * rng.uniform());
    const auto c = physics::attenuation_phase_coefficients(n, params);
    const std::complex<double> closed(c.phase, -c.attenuation);
    const std::complex<double> direct = k0 * std::sqrt(physics::dielectric_coefficient(n, params));
    rep.max_relative_error = std::max(rep.max_relative_error, std::abs(closed - direct) / std::abs(direct));
  }
  rep.attenuation_monotone = true;
  rep.gain_monotone = true;
  double prev_alpha = -1.0;
  double prev_gain = 2.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double n = params.density_min +
                     (params.density_max - params.density_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double a = physics::attenuation_phase_coefficients(n, params).attenuation;
    const double g = std::abs(physics::channel_gain(n, params));
    rep.attenuation_monotone = rep.attenuation_monotone && a >= prev_alpha;
    rep.gain_monotone = rep.gain_monotone && g <= prev_gain;
    prev_alpha = a;
    prev_gain = g;
  }
  return rep;
}

bool run_selftest(std::ostream& os) {
  bool all = true;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    os << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    all = all && ok;
  };

  // physics
  auto params = physics::reference_channel();
  params.sheath_thickness = physics::calibrate_sheath_thickness(params);
  const auto phys = validate_physics(params, 1000, 7);
  report("physics.consistency", phys.max_relative_error < 1e-10, "max rel err " + num(phys.max_relative_error));
  report("physics.monotone", phys.attenuation_monotone && phys.gain_monotone, "alpha up, |s| down");

  // constellation
  bool energy_ok = true;
  for (int m = 1; m <= 4; ++m)
    energy_ok = energy_ok && std::abs(link::build_constellation(m).average_energy() - 1.0) < 1e-12;
  report("link.unit_energy", energy_ok, "M = 1..4");

  // gradient check on a random model
  const auto qpsk = link::build_constellation(2);
  auto model = net::init_model<double>(qpsk.points, 11);
  Rng rng(12);
  em::Samples y(2, 16);
  for (Eigen::Index j = 0; j < y.cols(); ++j) y.col(j) << rng.gaussian(), rng.gaussian();
  Eigen::MatrixXd w(16, 4);
  for (Eigen::Index i = 0; i < 16; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) w(i, k) = rng.uniform() + 0.1;
    w.row(i) /= w.row(i).sum();
  }
  const auto g = net::gradients(model, y, w);
  auto p = net::pack(model);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = 1e-6;
    auto mp = model;
    auto v = p;
    v(j) += h;
    net::unpack(mp, v);
    const double up = net::weighted_loss(mp, y, w);
    v(j) -= 2 * h;
    net::unpack(mp, v);
    const double dn = net::weighted_loss(mp, y, w);
    const double fd = (up - dn) / (2 * h);
    worst = std::max(worst, std::abs(fd - g(j)) / std::max(1e-6, std::abs(fd) + std::abs(g(j))));
  }
  report("net.gradient_check", worst < 1e-4, "max rel err " + num(worst));

  // short EM run: lower bound monotone across E-steps, rows stochastic
  ExperimentConfig cfg;
  cfg.frame_length = 512;
  cfg.schedule = {200, 3, 20};
  const auto sim = simulate(cfg, 20.0, 32, 0);
  double worst_row = 0.0;
  auto smn = run_smn(cfg, sim, 0, [&](const em::FitEvent& ev) {
    if (ev.posteriors) worst_row = std::max(worst_row, em::max_row_sum_error(*ev.posteriors));
  });
  bool elbo_ok = true;
  const auto& rec = smn.fit.trace.records;
  for (std::size_t i = 1; i < rec.size(); ++i)
    if (rec[i].phase == "e_step" || rec[i].phase == "final_e_step")
      elbo_ok = elbo_ok && rec[i].elbo >= rec[i - 1].elbo - 1e-9;
  report("em.elbo_estep_monotone", elbo_ok, std::to_string(rec.size()) + " trace records");
  report("em.row_stochastic", worst_row < 1e-9, "max |row sum - 1| " + num(worst_row));

  // determinism
  const auto a = simulate(cfg, 10.0, 32, 3);
  const auto b = simulate(cfg, 10.0, 32, 3);
  report("link.deterministic", a.received.samples == b.received.samples && a.frame.symbols == b.frame.symbols,
         "seeded frame repeat");

  // QPSK theory vs Monte-Carlo, quick
  link::Frame f = link::build_frame(20000, 20000, 4, 5);
  std::vector<link::Complex> ones(f.length(), link::Complex(1.0, 0.0));
  const auto rx = link::transmit(f, qpsk, ones, link::snr_to_noise_variance(4.0), 6);
  const auto d = baselines::genie_ml(rx, qpsk).decisions;
  const auto c = compute_ser(d, f.symbols, f.payload_positions);
  const double theory = baselines::qpsk_theory_ser(4.0);
  const double se = std::sqrt(theory * (1 - theory) / static_cast<double>(c.symbols));
  report("baselines.qpsk_theory", std::abs(c.ser() - theory) < 4 * se,
         "mc " + num(c.ser()) + " vs theory " + num(theory));
  return all;
}

}  // namespace blackout::bench
