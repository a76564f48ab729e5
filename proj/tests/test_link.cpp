#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "blackout/errors.hpp"
#include "blackout/link.hpp"

using namespace blackout;
using namespace blackout::link;

TEST_CASE("constellations have unit energy and distinct points") {
  for (int m = 1; m <= 4; ++m) {
    const auto c = build_constellation(m);
    CHECK(c.order() == (1 << m));
    CHECK(c.average_energy() == doctest::Approx(1.0).epsilon(1e-14));
    for (int i = 0; i < c.order(); ++i)
      for (int j = i + 1; j < c.order(); ++j) CHECK(std::abs(c.points[i] - c.points[j]) > 0.1);
  }
  CHECK_THROWS_AS(build_constellation(0), ConfigError);
  CHECK_THROWS_AS(build_constellation(5), ConfigError);
}

TEST_CASE("QPSK points sit on the diagonals") {
  const auto c = build_constellation(2);
  for (const auto& p : c.points) {
    CHECK(std::abs(p) == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(p.real()) - std::abs(p.imag())) < 1e-15);
  }
  // Gray labelling: neighbours differ in one bit.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double d = std::abs(c.points[a] - c.points[b]);
      if (std::abs(d - std::sqrt(2.0)) < 1e-12) CHECK(__builtin_popcount(a ^ b) == 1);
    }
}

TEST_CASE("16-QAM Gray neighbours") {
  const auto c = build_constellation(4);
  const double dmin = 2.0 / std::sqrt(10.0);
  int pairs = 0;
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b)
      if (std::abs(std::abs(c.points[a] - c.points[b]) - dmin) < 1e-12) {
        ++pairs;
        CHECK(__builtin_popcount(a ^ b) == 1);
      }
  CHECK(pairs == 24);
}

TEST_CASE("frame layout") {
  const auto f = build_frame(4096, 256, 4, 1);
  CHECK(f.length() == 4096);
  CHECK(f.pilot_positions.size() == 16);
  CHECK(f.payload_positions.size() == 4080);
  CHECK(f.bandwidth_utilization() == doctest::Approx(0.99609375));
  for (std::size_t j = 0; j < f.pilot_positions.size(); ++j) {
    CHECK(f.pilot_positions[j] == 256 * j);
    CHECK(f.symbols[f.pilot_positions[j]] == static_cast<int>(j % 4));
  }
  const auto mask = f.pilot_mask();
  CHECK(std::count(mask.begin(), mask.end(), true) == 16);

  CHECK(build_frame(4096, 16, 4, 1).pilot_positions.size() == 256);
  CHECK(build_frame(4096, 16, 4, 1).bandwidth_utilization() == doctest::Approx(0.9375));
  CHECK_THROWS_AS(build_frame(100, 101, 4, 1), ConfigError);
  CHECK_THROWS_AS(build_frame(100, 0, 4, 1), ConfigError);
}

TEST_CASE("payload symbols are seeded and interval independent") {
  const auto a = build_frame(4096, 256, 4, 9);
  const auto b = build_frame(4096, 16, 4, 9);
  for (std::size_t i = 1; i < 4096; ++i)
    if (i % 16 != 0) CHECK(a.symbols[i] == b.symbols[i]);
  CHECK(build_frame(4096, 256, 4, 9).symbols == a.symbols);
  CHECK(build_frame(4096, 256, 4, 10).symbols != a.symbols);

  std::array<int, 4> counts{};
  for (auto p : a.payload_positions) ++counts[static_cast<std::size_t>(a.symbols[p])];
  for (int c : counts) CHECK(std::abs(c - 1020) < 4 * std::sqrt(1020.0));
}

TEST_CASE("noise variance from SNR") {
  CHECK(snr_to_noise_variance(0.0) == doctest::Approx(1.0));
  CHECK(snr_to_noise_variance(10.0) == doctest::Approx(0.1));
  CHECK(snr_to_noise_variance(20.0, 2.0) == doctest::Approx(0.02));
  CHECK(ebn0_to_esn0_db(10.0, 2) == doctest::Approx(10.0 + 10.0 * std::log10(2.0)));
}

TEST_CASE("transmit applies gains and noise of the requested power") {
  const auto c = build_constellation(2);
  const auto f = build_frame(100000, 100000, 4, 2);
  std::vector<Complex> gains(f.length(), Complex(0.5, -0.5));

  const auto clean = transmit(f, c, gains, 0.0, 3);
  for (std::size_t i = 0; i < f.length(); ++i)
    CHECK(std::abs(clean.samples[i] - gains[i] * c.points[f.symbols[i]]) == 0.0);

  const double var = 0.2;
  const auto rx = transmit(f, c, gains, var, 3);
  double power = 0.0, re = 0.0, im = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < f.length(); ++i) {
    const Complex n = rx.samples[i] - clean.samples[i];
    power += std::norm(n);
    re += n.real() * n.real();
    im += n.imag() * n.imag();
    cross += n.real() * n.imag();
  }
  const double m = static_cast<double>(f.length());
  // Standard error of the mean of |n|^2 is var / sqrt(m).
  CHECK(std::abs(power / m - var) < 4.0 * var / std::sqrt(m));
  CHECK(std::abs(re / m - var / 2) < 4.0 * var / std::sqrt(2 * m));
  CHECK(std::abs(im / m - var / 2) < 4.0 * var / std::sqrt(2 * m));
  CHECK(std::abs(cross / m) < 4.0 * (var / 2) / std::sqrt(m));
  CHECK(rx.noise_variance == var);
  CHECK(rx.true_gains == gains);

  gains.pop_back();
  CHECK_THROWS_AS(transmit(f, c, gains, var, 3), ContractError);
}

TEST_CASE("CSV round trip is exact") {
  const auto c = build_constellation(2);
  const auto f = build_frame(64, 8, 4, 4);
  std::vector<Complex> gains(f.length());
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = std::polar(1.0 / (1.0 + i), 0.1 * i);
  const auto rx = transmit(f, c, gains, 0.05, 5);

  std::stringstream ss;
  write_csv(ss, f, rx);
  const auto back = read_csv(ss);
  CHECK(back.frame.symbols == f.symbols);
  CHECK(back.frame.pilot_positions == f.pilot_positions);
  CHECK(back.frame.payload_positions == f.payload_positions);
  CHECK(back.received.samples == rx.samples);
  CHECK(back.received.true_gains == rx.true_gains);

  std::stringstream first, second;
  write_csv(first, f, rx);
  write_csv(second, back.frame, back.received);
  CHECK(first.str() == second.str());
}
