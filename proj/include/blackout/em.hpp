#pragma once

// EM training of the symmetric manifold network.
//
// The received samples are modelled as Gaussian around K curves, one per
// constellation point, with the likelihood of sample i under curve k
//
//   p(y_i | k) = exp(-||y_i - proj_k(y_i)||^2 / sigma^2) / (pi sigma^2).
//
// E-step: W_ik = softmax_k(-d_ik / sigma^2) (uniform prior), with pilot rows
// pinned to their known symbol.
// M-step: reset Adam, take `mstep_steps` full-batch steps on
// (1/m) sum_ik W_ik d_ik, then set sigma^2 to that weighted residual.
//
// fit() = pretrain on the pilots, then em_iterations x (E, M), then a final
// E-step so the returned posteriors match the returned model.

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "blackout/link.hpp"
#include "blackout/net.hpp"

namespace blackout::em {

using Model = net::SmnModel<double>;
using Samples = net::Samples<double>;
using PosteriorMatrix = Eigen::MatrixXd;  // m x K, row-stochastic
using Complex = std::complex<double>;

struct EmSchedule {
  int pretrain_steps = 2000;
  int em_iterations = 10;
  int mstep_steps = 100;
};

struct EmOptions {
  double sigma_floor = 1e-6;
  net::AdamConfig<double> adam{};
};

struct TraceRecord {
  std::string phase;  // "pretrain", "e_step", "m_step", "final_e_step"
  int iteration = 0;
  double elbo = 0.0;
  double noise_variance = 0.0;
};

struct ElboTrace {
  std::vector<TraceRecord> records;
  int sigma_clamps = 0;  // times sigma^2 hit the floor
};

/// Hook for snapshotting. `step` is the pretraining step (1-based) for
/// "pretrain_step" events and the EM iteration (1-based) otherwise.
struct FitEvent {
  std::string phase;  // "pretrain_step", "pretrain_done", "e_step", "m_step", "final_e_step"
  int step = 0;
  const Model& model;
  const PosteriorMatrix* posteriors = nullptr;
};
using FitObserver = std::function<void(const FitEvent&)>;

Samples to_samples(const std::vector<Complex>& values);

/// Pilot-only weight matrix: one-hot rows at the pilots, uniform elsewhere.
PosteriorMatrix pilot_prior(const link::Frame& frame, int curves);

/// Lower bound sum_i sum_k W_ik [ln p(y_i|k) + ln(1/K) - ln W_ik] including the
/// 1/(pi sigma^2) normaliser.
double evidence_lower_bound(const Model& model, const Samples& y, const PosteriorMatrix& w);

/// Adam on the pilots only with one-hot weights. Afterwards sets the model noise
/// variance to the pilot residual (floored). Returns the number of floor clamps (0/1).
int pretrain(Model& model, const Samples& y, const link::Frame& frame, const EmSchedule& schedule,
             const EmOptions& options = {}, const FitObserver& observer = {});

/// Posterior responsibilities. If the model noise variance is below the floor it
/// is clamped first and *clamped is set.
PosteriorMatrix e_step(Model& model, const Samples& y, const link::Frame& frame, const EmOptions& options = {},
                       bool* clamped = nullptr);

/// Returns the new (floored) noise variance, also stored in the model.
double m_step(Model& model, const Samples& y, const PosteriorMatrix& w, const EmSchedule& schedule,
              net::AdamState<double>& state, const EmOptions& options = {}, bool* clamped = nullptr);

struct FitResult {
  PosteriorMatrix posteriors;
  ElboTrace trace;
};

FitResult fit(Model& model, const link::ReceivedSequence& received, const link::Frame& frame,
              const EmSchedule& schedule, const EmOptions& options = {}, const FitObserver& observer = {});

/// Row argmax, ties to the lowest index.
std::vector<int> demodulate(const PosteriorMatrix& w);

/// max |row sum - 1| over all rows.
double max_row_sum_error(const PosteriorMatrix& w);

/// Mean over `rows` of max_k W_ik.
double mean_max_posterior(const PosteriorMatrix& w, const std::vector<std::size_t>& rows);

struct FadingEstimate {
  net::RowVector<double> lambda_grid;
  std::vector<std::vector<Complex>> curves;  // curves[k][j] = curve_k(lambda_grid[j])
  std::vector<Complex> sample_gains;         // s_hat_i = proj(y_i, k_i) / x_{k_i}, all positions
};

/// Encoder coordinate of each listed sample on its decided branch.
std::vector<double> curve_coordinates(const Model& model, const Samples& y, const std::vector<int>& decisions,
                                      const std::vector<std::size_t>& positions);

/// Curves sampled on a grid spanning the observed payload coordinates, plus
/// per-sample gain estimates using the decided symbols.
FadingEstimate extract_fading_curve(const Model& model, const Samples& y, const std::vector<int>& decisions,
                                    const link::Frame& frame, const std::vector<Complex>& points,
                                    int grid_points = 200);

/// Curve polylines on an explicit grid.
std::vector<std::vector<Complex>> sample_curves(const Model& model, const net::RowVector<double>& lambda_grid);

void write_trace_csv(std::ostream& os, const ElboTrace& trace);
void write_posteriors_csv(std::ostream& os, const PosteriorMatrix& w);

}  // namespace blackout::em
