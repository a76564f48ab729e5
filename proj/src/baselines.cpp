#include "blackout/baselines.hpp"

#include <cmath>
#include <limits>

#include "blackout/em.hpp"
#include "blackout/errors.hpp"

namespace blackout::baselines {

namespace {

int nearest(Complex y, Complex gain, const link::Constellation& c) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < c.order(); ++k) {
    const double d = std::norm(y - gain * c.points[static_cast<std::size_t>(k)]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace

BaselineResult genie_ml(const link::ReceivedSequence& received, const link::Constellation& constellation) {
  if (received.true_gains.size() != received.samples.size())
    throw ContractError("genie_ml: true gains unavailable");
  BaselineResult r{"genie", {}, received.true_gains};
  r.decisions.reserve(received.length());
  for (std::size_t i = 0; i < received.length(); ++i)
    r.decisions.push_back(nearest(received.samples[i], received.true_gains[i], constellation));
  return r;
}

std::vector<Complex> interpolate_pilot_gains(const link::ReceivedSequence& received, const link::Frame& frame,
                                             const link::Constellation& constellation) {
  const auto& pilots = frame.pilot_positions;
  if (pilots.size() < 2) throw ConfigError("pilot interpolation needs at least two pilots");
  if (received.length() != frame.length()) throw ContractError("pilot_interp_ml: length mismatch");
  std::vector<Complex> h_pilot(pilots.size());
  for (std::size_t j = 0; j < pilots.size(); ++j)
    h_pilot[j] = received.samples[pilots[j]] / constellation.points[static_cast<std::size_t>(frame.symbols[pilots[j]])];

  std::vector<Complex> h(frame.length());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < frame.length(); ++i) {
    if (i <= pilots.front()) {
      h[i] = h_pilot.front();
    } else if (i >= pilots.back()) {
      h[i] = h_pilot.back();
    } else {
      while (pilots[seg + 1] < i) ++seg;
      const double t = static_cast<double>(i - pilots[seg]) / static_cast<double>(pilots[seg + 1] - pilots[seg]);
      h[i] = (1.0 - t) * h_pilot[seg] + t * h_pilot[seg + 1];
    }
  }
  return h;
}

BaselineResult pilot_interp_ml(const link::ReceivedSequence& received, const link::Frame& frame,
                               const link::Constellation& constellation) {
  BaselineResult r{"pilot_interp", {}, interpolate_pilot_gains(received, frame, constellation)};
  r.decisions.reserve(received.length());
  for (std::size_t i = 0; i < received.length(); ++i)
    r.decisions.push_back(nearest(received.samples[i], r.channel_estimate[i], constellation));
  return r;
}

net::Matrix<double> DnnClassifier::probabilities(const net::Samples<double>& y) const {
  net::Matrix<double> logits = net::forward(layers, y).output();
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto col = logits.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return logits;
}

std::vector<int> DnnClassifier::classify(const net::Samples<double>& y) const {
  const auto p = probabilities(y);
  std::vector<int> out(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    Eigen::Index best = 0;
    p.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

DnnClassifier train_dnn(const net::Samples<double>& y, const std::vector<int>& labels, int classes,
                        const DnnConfig& config, double* loss) {
  if (static_cast<std::size_t>(y.cols()) != labels.size()) throw ContractError("train_dnn: label count mismatch");
  if (labels.empty()) throw ConfigError("train_dnn: no training samples");
  for (int l : labels)
    if (l < 0 || l >= classes) throw ContractError("train_dnn: label " + std::to_string(l) + " out of range");
  Rng rng(config.seed);
  std::vector<Eigen::Index> widths{2};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(classes);
  DnnClassifier clf{net::make_stack<double>(widths, net::Activation::Tanh, net::Activation::Linear, rng,
                                            config.init_stddev)};

  const auto n = y.cols();
  net::Matrix<double> onehot = net::Matrix<double>::Zero(classes, n);
  for (Eigen::Index j = 0; j < n; ++j) onehot(labels[static_cast<std::size_t>(j)], j) = 1.0;

  net::AdamConfig<double> adam;
  adam.learning_rate = config.learning_rate;
  net::AdamState<double> state(net::parameter_count(clf.layers), adam);
  double last = 0.0;
  for (int step = 0; step < config.steps; ++step) {
    const auto tape = net::forward(clf.layers, y);
    net::Matrix<double> p = tape.output();
    for (Eigen::Index j = 0; j < n; ++j) {
      auto col = p.col(j);
      col.array() -= col.maxCoeff();
      col = col.array().exp().matrix();
      col /= col.sum();
    }
    last = -(onehot.array() * (p.array().max(1e-300)).log()).sum() / static_cast<double>(n);
    net::Matrix<double> d_logits = (p - onehot) / static_cast<double>(n);
    auto grads = net::zeros_like(clf.layers);
    net::backward(clf.layers, tape, std::move(d_logits), grads);
    net::Vector<double> params = net::pack(clf.layers);
    net::adam_update(params, net::pack(grads), state);
    net::unpack(clf.layers, params);
  }
  if (loss) *loss = last;
  return clf;
}

BaselineResult supervised_dnn(const link::ReceivedSequence& received, const link::Frame& frame,
                              const link::Constellation& constellation, const DnnConfig& config) {
  if (frame.pilot_positions.empty()) throw ConfigError("supervised_dnn: frame has no pilots");
  const auto y = em::to_samples(received.samples);
  std::vector<Eigen::Index> cols;
  std::vector<int> labels;
  for (auto p : frame.pilot_positions) {
    cols.push_back(static_cast<Eigen::Index>(p));
    labels.push_back(frame.symbols[p]);
  }
  const net::Samples<double> train = y(Eigen::all, cols);
  const auto clf = train_dnn(train, labels, constellation.order(), config);
  return BaselineResult{"dnn", clf.classify(y), {}};
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qpsk_theory_ser(double es_n0_db) {
  const double q = q_function(std::sqrt(std::pow(10.0, es_n0_db / 10.0)));
  return 2.0 * q - q * q;
}

}  // namespace blackout::baselines
