#include <doctest.h>

#include <cmath>

#include "blackout/baselines.hpp"
#include "blackout/errors.hpp"
#include "blackout/link.hpp"
#include "blackout/rng.hpp"

using namespace blackout;
using namespace blackout::baselines;

TEST_CASE("Gaussian tail") {
  // erfc-based reference values
  CHECK(q_function(0.0) == doctest::Approx(0.5));
  CHECK(q_function(1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-14));
  CHECK(q_function(3.0) == doctest::Approx(0.0013498980316300946).epsilon(1e-13));
  CHECK(q_function(-1.0) == doctest::Approx(1.0 - 0.15865525393145705).epsilon(1e-14));
}

TEST_CASE("QPSK theory SER") {
  // 2Q(sqrt g) - Q(sqrt g)^2 evaluated at 30 digits.
  CHECK(qpsk_theory_ser(0.0) == doctest::Approx(0.29213901826285898).epsilon(1e-13));
  CHECK(qpsk_theory_ser(4.0) == doctest::Approx(0.10979888437897191).epsilon(1e-13));
  CHECK(qpsk_theory_ser(8.0) == doctest::Approx(0.011972720144284655).epsilon(1e-12));
  CHECK(qpsk_theory_ser(14.0) == doctest::Approx(5.3902955083510748e-7).epsilon(1e-10));
  double prev = 1.0;
  for (double snr = -10; snr <= 20; snr += 0.5) {
    const double p = qpsk_theory_ser(snr);
    CHECK(p < prev);
    CHECK(p > 0.0);
    prev = p;
  }
}

TEST_CASE("genie receiver is exact without noise and undoes the gain") {
  const auto c = link::build_constellation(2);
  const auto f = link::build_frame(500, 50, 4, 1);
  std::vector<link::Complex> g(500);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::polar(0.05 + 0.9 * i / 500.0, 2.0 * i / 500.0);
  const auto rx = link::transmit(f, c, g, 0.0, 2);
  const auto r = genie_ml(rx, c);
  CHECK(r.name == "genie");
  CHECK(r.decisions == f.symbols);
  CHECK(r.channel_estimate == g);
}

TEST_CASE("pilot interpolation") {
  const auto c = link::build_constellation(2);
  const auto f = link::build_frame(101, 10, 4, 3);
  std::vector<link::Complex> g(101);
  // A channel linear in time is reproduced exactly between pilots.
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = link::Complex(1.0 - 0.005 * i, 0.002 * i);
  const auto rx = link::transmit(f, c, g, 0.0, 4);
  const auto est = interpolate_pilot_gains(rx, f, c);
  for (std::size_t i = 0; i <= 100; ++i) CHECK(std::abs(est[i] - g[i]) < 1e-12);
  CHECK(pilot_interp_ml(rx, f, c).decisions == f.symbols);

  // Held constant past the last pilot.
  const auto f2 = link::build_frame(105, 10, 4, 3);
  g.resize(105, g.back());
  for (std::size_t i = 101; i < 105; ++i) g[i] = link::Complex(0.3, 0.1);
  const auto rx2 = link::transmit(f2, c, g, 0.0, 4);
  const auto est2 = interpolate_pilot_gains(rx2, f2, c);
  for (std::size_t i = 100; i < 105; ++i) CHECK(std::abs(est2[i] - g[100]) < 1e-12);

  const auto single = link::build_frame(10, 10, 4, 5);
  const auto rx3 = link::transmit(single, c, std::vector<link::Complex>(10, 1.0), 0.0, 6);
  CHECK_THROWS_AS(interpolate_pilot_gains(rx3, single, c), ConfigError);
}

TEST_CASE("DNN learns a separable static channel from labelled samples") {
  const auto c = link::build_constellation(2);
  const auto f = link::build_frame(2000, 8, 4, 7);
  std::vector<link::Complex> g(2000, std::polar(0.7, 0.6));
  const auto rx = link::transmit(f, c, g, link::snr_to_noise_variance(20.0), 8);
  DnnConfig cfg;
  cfg.seed = 9;
  const auto r = supervised_dnn(rx, f, c, cfg);
  int errors = 0;
  for (auto p : f.payload_positions) errors += r.decisions[p] != f.symbols[p];
  CHECK(errors == 0);
  CHECK(r.name == "dnn");
}

TEST_CASE("DNN probabilities are a distribution and training is seeded") {
  Rng rng(10);
  net::Samples<double> y(2, 60);
  std::vector<int> labels(60);
  for (Eigen::Index j = 0; j < 60; ++j) {
    labels[static_cast<std::size_t>(j)] = static_cast<int>(j % 3);
    y.col(j) << rng.gaussian() + 2.0 * (j % 3), rng.gaussian();
  }
  DnnConfig cfg;
  cfg.steps = 300;
  double loss_a = 0.0, loss_b = 0.0;
  const auto a = train_dnn(y, labels, 3, cfg, &loss_a);
  const auto b = train_dnn(y, labels, 3, cfg, &loss_b);
  CHECK(loss_a == loss_b);
  CHECK(loss_a < std::log(3.0));
  const auto p = a.probabilities(y);
  CHECK(p.rows() == 3);
  CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(a.classify(y) == b.classify(y));

  std::vector<int> bad(labels);
  bad[0] = 5;
  CHECK_THROWS(train_dnn(y, bad, 3, cfg));
}
