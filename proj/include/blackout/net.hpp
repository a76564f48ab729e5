#pragma once

// Small dense networks and the symmetric manifold network (SMN).
//
// An SMN has one encoder per constellation point and a single decoder shared
// by every branch. Branch k maps a received sample y to a scalar curve
// coordinate lambda = encoder_k(y); the decoder turns lambda into a polar gain
// (rho, phi) with rho = sigmoid(.) in (0, 1) and phi unbounded; the projection
// of y onto curve k is
//
//   T_k * (rho cos phi, rho sin phi),   T_k = |x_k| * Rot(arg x_k),
//
// i.e. the base curve multiplied by the constellation point. The K curves are
// therefore rigid rotation-scalings of one another. T_k is never trained.
//
// Samples are stored column-wise: a batch is a 2 x m matrix.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "blackout/errors.hpp"
#include "blackout/rng.hpp"

namespace blackout::net {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Samples = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

enum class Activation { Tanh, Sigmoid, Linear };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "linear") return Activation::Linear;
  throw ConfigError("unknown activation '" + s + "'");
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> biases;   // out
  Activation activation = Activation::Linear;

  Eigen::Index inputs() const { return weights.cols(); }
  Eigen::Index outputs() const { return weights.rows(); }
  Eigen::Index parameter_count() const { return weights.size() + biases.size(); }
};

template <typename Scalar>
using LayerStack = std::vector<DenseLayer<Scalar>>;

template <typename Scalar>
DenseLayer<Scalar> make_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng, Scalar stddev) {
  DenseLayer<Scalar> l;
  l.activation = act;
  l.weights.resize(out, in);
  l.biases.resize(out);
  // Row-major draw order keeps the stream layout independent of Eigen storage.
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = stddev * Scalar(rng.gaussian());
  for (Eigen::Index r = 0; r < out; ++r) l.biases(r) = stddev * Scalar(rng.gaussian());
  return l;
}

/// Builds in -> hidden... -> out with `hidden_act` on hidden layers.
template <typename Scalar>
LayerStack<Scalar> make_stack(std::span<const Eigen::Index> widths, Activation hidden_act, Activation out_act,
                              Rng& rng, Scalar stddev) {
  LayerStack<Scalar> s;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    s.push_back(make_layer<Scalar>(widths[i], widths[i + 1], last ? out_act : hidden_act, rng, stddev));
  }
  return s;
}

template <typename Scalar>
void activate(Activation a, Matrix<Scalar>& z) {
  switch (a) {
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Sigmoid: z = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix(); break;
    case Activation::Linear: break;
  }
}

// d(activation)/dz expressed through the activation's output.
template <typename Scalar>
Matrix<Scalar> activation_slope(Activation a, const Matrix<Scalar>& out) {
  switch (a) {
    case Activation::Tanh: return (Scalar(1) - out.array().square()).matrix();
    case Activation::Sigmoid: return (out.array() * (Scalar(1) - out.array())).matrix();
    case Activation::Linear: break;
  }
  return Matrix<Scalar>::Ones(out.rows(), out.cols());
}

/// Activations of every layer; values[0] is the input batch.
template <typename Scalar>
struct Tape {
  std::vector<Matrix<Scalar>> values;
  const Matrix<Scalar>& output() const { return values.back(); }
};

template <typename Scalar, typename Derived>
Tape<Scalar> forward(const LayerStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& input) {
  Tape<Scalar> t;
  t.values.reserve(stack.size() + 1);
  t.values.emplace_back(input);
  for (const auto& l : stack) {
    Matrix<Scalar> z = l.weights * t.values.back();
    z.colwise() += l.biases;
    activate(l.activation, z);
    t.values.push_back(std::move(z));
  }
  return t;
}

/// Back-propagates dL/d(output) through the stack, accumulating into `grads`
/// (same shapes as the stack). Returns dL/d(input).
template <typename Scalar>
Matrix<Scalar> backward(const LayerStack<Scalar>& stack, const Tape<Scalar>& tape, Matrix<Scalar> upstream,
                        LayerStack<Scalar>& grads) {
  for (std::size_t i = stack.size(); i-- > 0;) {
    const auto& l = stack[i];
    upstream.array() *= activation_slope(l.activation, tape.values[i + 1]).array();
    grads[i].weights.noalias() += upstream * tape.values[i].transpose();
    grads[i].biases += upstream.rowwise().sum();
    upstream = l.weights.transpose() * upstream;
  }
  return upstream;
}

template <typename Scalar>
LayerStack<Scalar> zeros_like(const LayerStack<Scalar>& stack) {
  LayerStack<Scalar> z = stack;
  for (auto& l : z) {
    l.weights.setZero();
    l.biases.setZero();
  }
  return z;
}

template <typename Scalar>
Eigen::Index parameter_count(const LayerStack<Scalar>& stack) {
  Eigen::Index n = 0;
  for (const auto& l : stack) n += l.parameter_count();
  return n;
}

// Flat parameter layout: per layer, weights row-major then biases.
template <typename Scalar>
void pack_into(const LayerStack<Scalar>& stack, Vector<Scalar>& out, Eigen::Index& at) {
  for (const auto& l : stack) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out(at++) = l.weights(r, c);
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) out(at++) = l.biases(r);
  }
}

template <typename Scalar>
void unpack_from(LayerStack<Scalar>& stack, const Vector<Scalar>& in, Eigen::Index& at) {
  for (auto& l : stack) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = in(at++);
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) l.biases(r) = in(at++);
  }
}

template <typename Scalar>
Vector<Scalar> pack(const LayerStack<Scalar>& stack) {
  Vector<Scalar> v(parameter_count(stack));
  Eigen::Index at = 0;
  pack_into(stack, v, at);
  return v;
}

template <typename Scalar>
void unpack(LayerStack<Scalar>& stack, const Vector<Scalar>& v) {
  if (v.size() != parameter_count(stack)) throw ContractError("unpack: parameter vector size mismatch");
  Eigen::Index at = 0;
  unpack_from(stack, v, at);
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
struct AdamConfig {
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
};

template <typename Scalar>
struct AdamState {
  Vector<Scalar> first_moment;
  Vector<Scalar> second_moment;
  std::int64_t step_count = 0;
  Scalar learning_rate = Scalar(1e-3);
  AdamConfig<Scalar> config;

  AdamState() = default;
  AdamState(Eigen::Index parameters, const AdamConfig<Scalar>& cfg)
      : first_moment(Vector<Scalar>::Zero(parameters)),
        second_moment(Vector<Scalar>::Zero(parameters)),
        learning_rate(cfg.learning_rate),
        config(cfg) {}

  bool operator==(const AdamState& o) const {
    return first_moment == o.first_moment && second_moment == o.second_moment && step_count == o.step_count &&
           learning_rate == o.learning_rate && config.learning_rate == o.config.learning_rate &&
           config.beta1 == o.config.beta1 && config.beta2 == o.config.beta2 && config.epsilon == o.config.epsilon;
  }
};

/// Zeroes both moments and the step counter and restores the initial learning rate.
template <typename Scalar>
AdamState<Scalar> reset_optimizer(const AdamState<Scalar>& state) {
  return AdamState<Scalar>(state.first_moment.size(), state.config);
}

/// One bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_update(Vector<Scalar>& params, const Vector<Scalar>& grads, AdamState<Scalar>& s) {
  if (params.size() != grads.size() || params.size() != s.first_moment.size())
    throw ContractError("adam: parameter, gradient and state sizes differ");
  const auto& c = s.config;
  ++s.step_count;
  s.first_moment = c.beta1 * s.first_moment + (Scalar(1) - c.beta1) * grads;
  s.second_moment = c.beta2 * s.second_moment + (Scalar(1) - c.beta2) * grads.cwiseAbs2();
  const Scalar t = Scalar(s.step_count);
  const Scalar bc1 = Scalar(1) - std::pow(c.beta1, t);
  const Scalar bc2 = Scalar(1) - std::pow(c.beta2, t);
  params.array() -= s.learning_rate * (s.first_moment.array() / bc1) /
                    ((s.second_moment.array() / bc2).sqrt() + c.epsilon);
}

// ---------------------------------------------------------------------------
// Symmetric manifold network

struct SmnArchitecture {
  Eigen::Index encoder_hidden = 4;
  Eigen::Index decoder_hidden = 4;
  double init_stddev = 0.1;
};

template <typename Scalar>
struct SmnModel {
  std::vector<LayerStack<Scalar>> encoders;  // 2 -> hidden (tanh) -> 1 (linear)
  LayerStack<Scalar> decoder;                // 1 -> hidden (tanh) -> 2 (linear; head applied in decode)
  std::vector<Matrix2<Scalar>> transforms;   // fixed
  Scalar noise_variance = Scalar(1);

  int curves() const { return static_cast<int>(encoders.size()); }
};

/// T = rho * [[cos phi, -sin phi], [sin phi, cos phi]] for the point rho e^{j phi}.
template <typename Scalar>
Matrix2<Scalar> transform_for(std::complex<double> point) {
  const Scalar rho = Scalar(std::abs(point));
  const Scalar phi = Scalar(std::arg(point));
  Matrix2<Scalar> t;
  t << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return rho * t;
}

template <typename Scalar>
SmnModel<Scalar> init_model(std::span<const std::complex<double>> points, std::uint64_t seed,
                            const SmnArchitecture& arch = {}) {
  if (points.empty()) throw ConfigError("init_model: empty constellation");
  Rng rng(seed);
  const Scalar sd = Scalar(arch.init_stddev);
  SmnModel<Scalar> m;
  const Eigen::Index enc[] = {2, arch.encoder_hidden, 1};
  const Eigen::Index dec[] = {1, arch.decoder_hidden, 2};
  for (std::size_t k = 0; k < points.size(); ++k)
    m.encoders.push_back(make_stack<Scalar>(enc, Activation::Tanh, Activation::Linear, rng, sd));
  m.decoder = make_stack<Scalar>(dec, Activation::Tanh, Activation::Linear, rng, sd);
  for (const auto& p : points) m.transforms.push_back(transform_for<Scalar>(p));
  return m;
}

template <typename Scalar>
Eigen::Index parameter_count(const SmnModel<Scalar>& m) {
  Eigen::Index n = parameter_count(m.decoder);
  for (const auto& e : m.encoders) n += parameter_count(e);
  return n;
}

/// Flat layout: encoder 0, ..., encoder K-1, decoder. Transforms and the noise
/// variance are not trainable parameters.
template <typename Scalar>
Vector<Scalar> pack(const SmnModel<Scalar>& m) {
  Vector<Scalar> v(parameter_count(m));
  Eigen::Index at = 0;
  for (const auto& e : m.encoders) pack_into(e, v, at);
  pack_into(m.decoder, v, at);
  return v;
}

template <typename Scalar>
void unpack(SmnModel<Scalar>& m, const Vector<Scalar>& v) {
  if (v.size() != parameter_count(m)) throw ContractError("unpack: parameter vector size mismatch");
  Eigen::Index at = 0;
  for (auto& e : m.encoders) unpack_from(e, v, at);
  unpack_from(m.decoder, v, at);
}

/// Polar head: row 0 = rho = sigmoid(raw0), row 1 = phi = raw1.
template <typename Scalar>
Samples<Scalar> polar_head(const Matrix<Scalar>& raw) {
  Samples<Scalar> p(2, raw.cols());
  p.row(0) = (Scalar(1) / (Scalar(1) + (-raw.row(0).array()).exp())).matrix();
  p.row(1) = raw.row(1);
  return p;
}

template <typename Scalar>
Samples<Scalar> polar_to_cartesian(const Samples<Scalar>& polar) {
  Samples<Scalar> c(2, polar.cols());
  c.row(0) = (polar.row(0).array() * polar.row(1).array().cos()).matrix();
  c.row(1) = (polar.row(0).array() * polar.row(1).array().sin()).matrix();
  return c;
}

/// Curve coordinates lambda = encoder_k(y) for every column of `y`.
template <typename Scalar>
RowVector<Scalar> encode(const SmnModel<Scalar>& m, const Samples<Scalar>& y, int k) {
  return forward(m.encoders.at(static_cast<std::size_t>(k)), y).output();
}

/// Decoder output (rho, phi) for each lambda.
template <typename Scalar>
Samples<Scalar> decode(const SmnModel<Scalar>& m, const RowVector<Scalar>& lambda) {
  return polar_head<Scalar>(forward(m.decoder, lambda).output());
}

/// Points of curve k at the given coordinates: T_k * cart(decoder(lambda)).
template <typename Scalar>
Samples<Scalar> curve(const SmnModel<Scalar>& m, const RowVector<Scalar>& lambda, int k) {
  return m.transforms.at(static_cast<std::size_t>(k)) * polar_to_cartesian(decode(m, lambda));
}

/// Projection of every sample onto curve k.
template <typename Scalar>
Samples<Scalar> project(const SmnModel<Scalar>& m, const Samples<Scalar>& y, int k) {
  if (k < 0 || k >= m.curves()) throw ContractError("project: curve index out of range");
  return curve(m, encode(m, y, k), k);
}

/// m x K matrix of squared projection distances ||y_i - project(y_i, k)||^2.
template <typename Scalar>
Matrix<Scalar> squared_distances(const SmnModel<Scalar>& m, const Samples<Scalar>& y) {
  Matrix<Scalar> d(y.cols(), m.curves());
  for (int k = 0; k < m.curves(); ++k) d.col(k) = (y - project(m, y, k)).colwise().squaredNorm().transpose();
  return d;
}

template <typename Scalar>
void check_weights_shape(const SmnModel<Scalar>& m, const Samples<Scalar>& y, const Matrix<Scalar>& w,
                         const char* who) {
  if (w.rows() != y.cols() || w.cols() != m.curves())
    throw ContractError(std::string(who) + ": weight matrix is " + std::to_string(w.rows()) + "x" +
                        std::to_string(w.cols()) + ", expected " + std::to_string(y.cols()) + "x" +
                        std::to_string(m.curves()));
}

/// (1/m) sum_i sum_k W_ik ||y_i - project(y_i, k)||^2.
template <typename Scalar>
Scalar weighted_loss(const SmnModel<Scalar>& m, const Samples<Scalar>& y, const Matrix<Scalar>& w) {
  check_weights_shape(m, y, w, "weighted_loss");
  if (y.cols() == 0) return Scalar(0);
  return (squared_distances(m, y).array() * w.array()).sum() / Scalar(y.cols());
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  Vector<Scalar> gradient;  // pack() layout
};

/// Exact reverse-mode gradient of weighted_loss with respect to every encoder
/// and decoder parameter.
template <typename Scalar>
LossAndGradient<Scalar> loss_and_gradient(const SmnModel<Scalar>& m, const Samples<Scalar>& y,
                                          const Matrix<Scalar>& w) {
  check_weights_shape(m, y, w, "gradients");
  std::vector<LayerStack<Scalar>> enc_grads;
  for (const auto& e : m.encoders) enc_grads.push_back(zeros_like(e));
  LayerStack<Scalar> dec_grads = zeros_like(m.decoder);
  Scalar loss = Scalar(0);
  const Eigen::Index n = y.cols();

  if (n > 0) {
    const Scalar inv_n = Scalar(1) / Scalar(n);
    for (int k = 0; k < m.curves(); ++k) {
      const auto enc_tape = forward(m.encoders[static_cast<std::size_t>(k)], y);
      const auto dec_tape = forward(m.decoder, enc_tape.output());
      const Samples<Scalar> polar = polar_head<Scalar>(dec_tape.output());
      const Samples<Scalar> cart = polar_to_cartesian(polar);
      const Matrix2<Scalar>& t = m.transforms[static_cast<std::size_t>(k)];
      const Samples<Scalar> residual = y - t * cart;
      const RowVector<Scalar> wk = w.col(k).transpose();
      loss += (residual.colwise().squaredNorm().array() * wk.array()).sum() * inv_n;

      // dL/dp = -2/n W_ik (y - p);  dL/dcart = T^T dL/dp
      Samples<Scalar> d_proj = residual;
      d_proj.array().rowwise() *= (Scalar(-2) * inv_n) * wk.array();
      const Samples<Scalar> d_cart = t.transpose() * d_proj;
      const auto rho = polar.row(0).array();
      const auto c = polar.row(1).array().cos();
      const auto s = polar.row(1).array().sin();
      Matrix<Scalar> d_raw(2, n);
      const auto d_rho = d_cart.row(0).array() * c + d_cart.row(1).array() * s;
      d_raw.row(0) = (d_rho * rho * (Scalar(1) - rho)).matrix();
      d_raw.row(1) = (rho * (d_cart.row(1).array() * c - d_cart.row(0).array() * s)).matrix();

      Matrix<Scalar> d_lambda = backward(m.decoder, dec_tape, std::move(d_raw), dec_grads);
      backward(m.encoders[static_cast<std::size_t>(k)], enc_tape, std::move(d_lambda),
               enc_grads[static_cast<std::size_t>(k)]);
    }
  }

  LossAndGradient<Scalar> out{loss, Vector<Scalar>(parameter_count(m))};
  Eigen::Index at = 0;
  for (const auto& g : enc_grads) pack_into(g, out.gradient, at);
  pack_into(dec_grads, out.gradient, at);

  if (!std::isfinite(static_cast<double>(loss)) || !out.gradient.allFinite()) {
    std::ostringstream msg;
    msg << "non-finite loss or gradient: loss=" << loss << ", |grad|_max=" << out.gradient.cwiseAbs().maxCoeff()
        << ", samples=" << n << ", curves=" << m.curves();
    throw NumericalError(msg.str());
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> gradients(const SmnModel<Scalar>& m, const Samples<Scalar>& y, const Matrix<Scalar>& w) {
  return loss_and_gradient(m, y, w).gradient;
}

template <typename Scalar>
void adam_step(SmnModel<Scalar>& m, const Vector<Scalar>& grads, AdamState<Scalar>& state) {
  Vector<Scalar> p = pack(m);
  adam_update(p, grads, state);
  unpack(m, p);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   smn-checkpoint 1
//   curves <K>
//   noise_variance <v>
//   transform <t00> <t01> <t10> <t11>          (K lines)
//   stack encoder <k> <layers> / stack decoder <layers>
//   layer <rows> <cols> <activation>
//   <row-major weights> / <biases>
//
// Numbers are printed with 17 significant digits, so save -> load is exact.

namespace detail {

template <typename Scalar>
void write_stack(std::ostream& os, const LayerStack<Scalar>& s) {
  for (const auto& l : s) {
    os << "layer " << l.weights.rows() << ' ' << l.weights.cols() << ' ' << to_string(l.activation) << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) os << (c ? " " : "") << l.weights(r, c);
      os << '\n';
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) os << (r ? " " : "") << l.biases(r);
    os << '\n';
  }
}

inline void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) throw ConfigError("checkpoint: expected '" + word + "', got '" + tok + "'");
}

template <typename Scalar>
LayerStack<Scalar> read_stack(std::istream& is, std::size_t layers) {
  LayerStack<Scalar> s(layers);
  for (auto& l : s) {
    expect(is, "layer");
    Eigen::Index rows = 0, cols = 0;
    std::string act;
    if (!(is >> rows >> cols >> act) || rows <= 0 || cols <= 0) throw ConfigError("checkpoint: bad layer header");
    l.activation = activation_from_string(act);
    l.weights.resize(rows, cols);
    l.biases.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(is >> l.weights(r, c))) throw ConfigError("checkpoint: truncated weights");
    for (Eigen::Index r = 0; r < rows; ++r)
      if (!(is >> l.biases(r))) throw ConfigError("checkpoint: truncated biases");
  }
  return s;
}

}  // namespace detail

template <typename Scalar>
void save_checkpoint(std::ostream& os, const SmnModel<Scalar>& m) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "smn-checkpoint 1\n";
  os << "curves " << m.curves() << '\n';
  os << "noise_variance " << m.noise_variance << '\n';
  for (const auto& t : m.transforms) os << "transform " << t(0, 0) << ' ' << t(0, 1) << ' ' << t(1, 0) << ' ' << t(1, 1) << '\n';
  for (int k = 0; k < m.curves(); ++k) {
    os << "stack encoder " << k << ' ' << m.encoders[static_cast<std::size_t>(k)].size() << '\n';
    detail::write_stack(os, m.encoders[static_cast<std::size_t>(k)]);
  }
  os << "stack decoder " << m.decoder.size() << '\n';
  detail::write_stack(os, m.decoder);
  os.precision(old);
}

template <typename Scalar>
SmnModel<Scalar> load_checkpoint(std::istream& is) {
  detail::expect(is, "smn-checkpoint");
  int version = 0;
  if (!(is >> version) || version != 1) throw ConfigError("checkpoint: unsupported version");
  SmnModel<Scalar> m;
  int k = 0;
  detail::expect(is, "curves");
  if (!(is >> k) || k <= 0) throw ConfigError("checkpoint: bad curve count");
  detail::expect(is, "noise_variance");
  if (!(is >> m.noise_variance)) throw ConfigError("checkpoint: bad noise variance");
  m.transforms.resize(static_cast<std::size_t>(k));
  for (auto& t : m.transforms) {
    detail::expect(is, "transform");
    if (!(is >> t(0, 0) >> t(0, 1) >> t(1, 0) >> t(1, 1))) throw ConfigError("checkpoint: bad transform");
  }
  for (int i = 0; i < k; ++i) {
    detail::expect(is, "stack");
    detail::expect(is, "encoder");
    int idx = -1;
    std::size_t layers = 0;
    if (!(is >> idx >> layers) || idx != i) throw ConfigError("checkpoint: encoders out of order");
    m.encoders.push_back(detail::read_stack<Scalar>(is, layers));
  }
  detail::expect(is, "stack");
  detail::expect(is, "decoder");
  std::size_t layers = 0;
  if (!(is >> layers)) throw ConfigError("checkpoint: bad decoder header");
  m.decoder = detail::read_stack<Scalar>(is, layers);
  return m;
}

}  // namespace blackout::net
