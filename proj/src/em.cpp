#include "blackout/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "blackout/errors.hpp"

namespace blackout::em {

namespace {

std::string fmt(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

void pin_pilots(PosteriorMatrix& w, const link::Frame& frame) {
  for (auto p : frame.pilot_positions) {
    const auto row = static_cast<Eigen::Index>(p);
    w.row(row).setZero();
    w(row, frame.symbols[p]) = 1.0;
  }
}

double floored(double v, double floor, bool* clamped) {
  if (!(v >= floor)) {
    if (clamped) *clamped = true;
    return floor;
  }
  return v;
}

void check_frame(const Samples& y, const link::Frame& frame, int curves) {
  if (static_cast<std::size_t>(y.cols()) != frame.length())
    throw ContractError("sample count " + std::to_string(y.cols()) + " does not match frame length " +
                        std::to_string(frame.length()));
  for (auto p : frame.pilot_positions)
    if (frame.symbols[p] < 0 || frame.symbols[p] >= curves) throw ContractError("pilot symbol out of range");
}

}  // namespace

Samples to_samples(const std::vector<Complex>& values) {
  Samples y(2, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    y(0, static_cast<Eigen::Index>(i)) = values[i].real();
    y(1, static_cast<Eigen::Index>(i)) = values[i].imag();
  }
  return y;
}

PosteriorMatrix pilot_prior(const link::Frame& frame, int curves) {
  PosteriorMatrix w = PosteriorMatrix::Constant(static_cast<Eigen::Index>(frame.length()), curves, 1.0 / curves);
  pin_pilots(w, frame);
  return w;
}

double evidence_lower_bound(const Model& model, const Samples& y, const PosteriorMatrix& w) {
  net::check_weights_shape(model, y, w, "evidence_lower_bound");
  const double s2 = model.noise_variance;
  const double log_norm = -std::log(std::numbers::pi * s2);
  const double log_prior = -std::log(static_cast<double>(model.curves()));
  const Eigen::MatrixXd d = net::squared_distances(model, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
      const double q = w(i, k);
      if (q <= 0.0) continue;
      total += q * (log_norm - d(i, k) / s2 + log_prior - std::log(q));
    }
  }
  return total;
}

int pretrain(Model& model, const Samples& y, const link::Frame& frame, const EmSchedule& schedule,
             const EmOptions& options, const FitObserver& observer) {
  const int K = model.curves();
  check_frame(y, frame, K);
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (auto p : frame.pilot_positions) ++counts[static_cast<std::size_t>(frame.symbols[p])];
  for (int k = 0; k < K; ++k)
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw ConfigError("symbol " + std::to_string(k) + " has no pilot; its curve cannot be identified");

  const auto n = static_cast<Eigen::Index>(frame.pilot_positions.size());
  Samples yp(2, n);
  Eigen::MatrixXd wp = Eigen::MatrixXd::Zero(n, K);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto p = frame.pilot_positions[static_cast<std::size_t>(j)];
    yp.col(j) = y.col(static_cast<Eigen::Index>(p));
    wp(j, frame.symbols[p]) = 1.0;
  }

  net::AdamState<double> state(net::parameter_count(model), options.adam);
  for (int step = 1; step <= schedule.pretrain_steps; ++step) {
    const auto g = net::loss_and_gradient(model, yp, wp);
    net::adam_step(model, g.gradient, state);
    if (observer) observer(FitEvent{"pretrain_step", step, model, nullptr});
  }
  bool clamped = false;
  model.noise_variance = floored(net::weighted_loss(model, yp, wp), options.sigma_floor, &clamped);
  if (observer) observer(FitEvent{"pretrain_done", schedule.pretrain_steps, model, nullptr});
  return clamped ? 1 : 0;
}

PosteriorMatrix e_step(Model& model, const Samples& y, const link::Frame& frame, const EmOptions& options,
                       bool* clamped) {
  check_frame(y, frame, model.curves());
  model.noise_variance = floored(model.noise_variance, options.sigma_floor, clamped);
  const double s2 = model.noise_variance;
  PosteriorMatrix w = -net::squared_distances(model, y) / s2;
  // Log-sum-exp with max subtraction per row.
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    auto row = w.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  pin_pilots(w, frame);
  return w;
}

double m_step(Model& model, const Samples& y, const PosteriorMatrix& w, const EmSchedule& schedule,
              net::AdamState<double>& state, const EmOptions& options, bool* clamped) {
  net::check_weights_shape(model, y, w, "m_step");
  state = net::reset_optimizer(state);
  for (int step = 0; step < schedule.mstep_steps; ++step) {
    const auto g = net::loss_and_gradient(model, y, w);
    net::adam_step(model, g.gradient, state);
  }
  const double residual = net::weighted_loss(model, y, w);
  if (!std::isfinite(residual)) throw NumericalError("m_step: non-finite weighted residual after training");
  model.noise_variance = floored(residual, options.sigma_floor, clamped);
  return model.noise_variance;
}

FitResult fit(Model& model, const link::ReceivedSequence& received, const link::Frame& frame,
              const EmSchedule& schedule, const EmOptions& options, const FitObserver& observer) {
  if (received.length() != frame.length()) throw ContractError("fit: received sequence and frame lengths differ");
  const Samples y = to_samples(received.samples);
  FitResult out;
  auto& trace = out.trace;

  trace.sigma_clamps += pretrain(model, y, frame, schedule, options, observer);
  PosteriorMatrix w = pilot_prior(frame, model.curves());
  trace.records.push_back({"pretrain", 0, evidence_lower_bound(model, y, w), model.noise_variance});

  net::AdamState<double> state(net::parameter_count(model), options.adam);
  for (int it = 1; it <= schedule.em_iterations; ++it) {
    bool clamped = false;
    w = e_step(model, y, frame, options, &clamped);
    trace.records.push_back({"e_step", it, evidence_lower_bound(model, y, w), model.noise_variance});
    if (observer) observer(FitEvent{"e_step", it, model, &w});

    m_step(model, y, w, schedule, state, options, &clamped);
    trace.records.push_back({"m_step", it, evidence_lower_bound(model, y, w), model.noise_variance});
    if (observer) observer(FitEvent{"m_step", it, model, &w});
    trace.sigma_clamps += clamped ? 1 : 0;
  }

  bool clamped = false;
  w = e_step(model, y, frame, options, &clamped);
  trace.sigma_clamps += clamped ? 1 : 0;
  trace.records.push_back({"final_e_step", schedule.em_iterations, evidence_lower_bound(model, y, w),
                           model.noise_variance});
  if (observer) observer(FitEvent{"final_e_step", schedule.em_iterations, model, &w});

  for (const auto& r : trace.records)
    if (!std::isfinite(r.elbo)) throw NumericalError("fit: lower bound became non-finite in phase " + r.phase);
  out.posteriors = std::move(w);
  return out;
}

std::vector<int> demodulate(const PosteriorMatrix& w) {
  std::vector<int> out(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < w.cols(); ++k)
      if (w(i, k) > w(i, best)) best = static_cast<int>(k);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double max_row_sum_error(const PosteriorMatrix& w) {
  if (w.rows() == 0) return 0.0;
  return (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double mean_max_posterior(const PosteriorMatrix& w, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (auto r : rows) s += w.row(static_cast<Eigen::Index>(r)).maxCoeff();
  return s / static_cast<double>(rows.size());
}

std::vector<double> curve_coordinates(const Model& model, const Samples& y, const std::vector<int>& decisions,
                                      const std::vector<std::size_t>& positions) {
  std::vector<double> lambda;
  lambda.reserve(positions.size());
  for (int k = 0; k < model.curves(); ++k) {
    std::vector<Eigen::Index> cols;
    for (auto p : positions)
      if (decisions[p] == k) cols.push_back(static_cast<Eigen::Index>(p));
    if (cols.empty()) continue;
    const Samples sub = y(Eigen::all, cols);
    const auto l = net::encode(model, sub, k);
    for (Eigen::Index j = 0; j < l.size(); ++j) lambda.push_back(l(j));
  }
  return lambda;
}

std::vector<std::vector<Complex>> sample_curves(const Model& model, const net::RowVector<double>& lambda_grid) {
  std::vector<std::vector<Complex>> curves(static_cast<std::size_t>(model.curves()));
  for (int k = 0; k < model.curves(); ++k) {
    const Samples c = net::curve(model, lambda_grid, k);
    auto& out = curves[static_cast<std::size_t>(k)];
    out.reserve(static_cast<std::size_t>(c.cols()));
    for (Eigen::Index j = 0; j < c.cols(); ++j) out.emplace_back(c(0, j), c(1, j));
  }
  return curves;
}

FadingEstimate extract_fading_curve(const Model& model, const Samples& y, const std::vector<int>& decisions,
                                    const link::Frame& frame, const std::vector<Complex>& points,
                                    int grid_points) {
  if (frame.payload_positions.empty()) throw ContractError("extract_fading_curve: empty payload");
  if (decisions.size() != static_cast<std::size_t>(y.cols()))
    throw ContractError("extract_fading_curve: decisions and samples differ in length");
  if (grid_points < 1) throw ContractError("extract_fading_curve: grid needs at least one point");

  FadingEstimate est;
  const auto lambda = curve_coordinates(model, y, decisions, frame.payload_positions);
  const auto [lo, hi] = std::minmax_element(lambda.begin(), lambda.end());
  est.lambda_grid.resize(grid_points);
  for (int j = 0; j < grid_points; ++j)
    est.lambda_grid(j) = grid_points == 1 ? *lo : *lo + (*hi - *lo) * j / static_cast<double>(grid_points - 1);
  est.curves = sample_curves(model, est.lambda_grid);

  est.sample_gains.assign(decisions.size(), Complex(0.0, 0.0));
  for (int k = 0; k < model.curves(); ++k) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < decisions.size(); ++i)
      if (decisions[i] == k) cols.push_back(static_cast<Eigen::Index>(i));
    if (cols.empty()) continue;
    const Samples sub = y(Eigen::all, cols);
    const Samples proj = net::project(model, sub, k);
    const Complex x = points.at(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < cols.size(); ++j)
      est.sample_gains[static_cast<std::size_t>(cols[j])] =
          Complex(proj(0, static_cast<Eigen::Index>(j)), proj(1, static_cast<Eigen::Index>(j))) / x;
  }
  return est;
}

void write_trace_csv(std::ostream& os, const ElboTrace& trace) {
  os << "# schema=elbo_trace/1\n";
  os << "phase,iteration,elbo,noise_variance\n";
  for (const auto& r : trace.records)
    os << r.phase << ',' << r.iteration << ',' << fmt(r.elbo) << ',' << fmt(r.noise_variance) << '\n';
}

void write_posteriors_csv(std::ostream& os, const PosteriorMatrix& w) {
  os << "# schema=posteriors/1\n";
  os << "index";
  for (Eigen::Index k = 0; k < w.cols(); ++k) os << ",w" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    os << i;
    for (Eigen::Index k = 0; k < w.cols(); ++k) os << ',' << fmt(w(i, k));
    os << '\n';
  }
}

}  // namespace blackout::em
