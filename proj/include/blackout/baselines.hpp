#pragma once

// Reference receivers.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "blackout/link.hpp"
#include "blackout/net.hpp"

namespace blackout::baselines {

using Complex = std::complex<double>;

struct BaselineResult {
  std::string name;
  std::vector<int> decisions;                // one per frame position
  std::vector<Complex> channel_estimate;     // empty if the receiver has none
};

/// Nearest point of s_i * x_k with the true gain s_i.
BaselineResult genie_ml(const link::ReceivedSequence& received, const link::Constellation& constellation);

/// Least-squares gains y/x at the pilots, linear I/Q interpolation between them
/// (held constant before the first and after the last pilot), then ML against
/// h_i * x_k.
BaselineResult pilot_interp_ml(const link::ReceivedSequence& received, const link::Frame& frame,
                               const link::Constellation& constellation);

/// Interpolated channel estimate alone (exposed for tests).
std::vector<Complex> interpolate_pilot_gains(const link::ReceivedSequence& received, const link::Frame& frame,
                                             const link::Constellation& constellation);

struct DnnConfig {
  std::vector<Eigen::Index> hidden = {16, 16};
  int steps = 2000;
  double learning_rate = 1e-2;
  double init_stddev = 0.1;
  std::uint64_t seed = 1;
};

struct DnnClassifier {
  net::LayerStack<double> layers;  // tanh hidden, linear logits

  /// K x n class probabilities.
  net::Matrix<double> probabilities(const net::Samples<double>& y) const;
  std::vector<int> classify(const net::Samples<double>& y) const;
};

/// Full-batch Adam on softmax cross-entropy; returns the final mean loss via *loss if given.
DnnClassifier train_dnn(const net::Samples<double>& y, const std::vector<int>& labels, int classes,
                        const DnnConfig& config, double* loss = nullptr);

/// Classifier trained on the pilot (y, label) pairs only, applied everywhere.
BaselineResult supervised_dnn(const link::ReceivedSequence& received, const link::Frame& frame,
                              const link::Constellation& constellation, const DnnConfig& config = {});

/// Gaussian tail Q(x).
double q_function(double x);

/// Exact QPSK symbol error probability 2Q(sqrt g) - Q(sqrt g)^2 for Es/N0 = g.
double qpsk_theory_ser(double es_n0_db);

}  // namespace blackout::baselines
