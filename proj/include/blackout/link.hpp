#pragma once

// M-ary constellations, pilot framing and the flat-fading AWGN channel
//   y_i = s_i * x_i + n_i.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace blackout::link {

using Complex = std::complex<double>;

struct Constellation {
  int bits_per_symbol = 0;
  std::vector<Complex> points;  // points[label]

  int order() const { return static_cast<int>(points.size()); }
  double average_energy() const;
};

/// Gray-labelled BPSK / QPSK / 8-PSK (M = 1, 2, 3) or square 16-QAM (M = 4),
/// scaled to unit average energy.
Constellation build_constellation(int bits_per_symbol);

struct Frame {
  std::vector<int> symbols;
  std::vector<std::size_t> pilot_positions;    // {0, interval, 2*interval, ...}
  std::vector<std::size_t> payload_positions;  // complement, ascending
  std::size_t pilot_interval = 1;

  std::size_t length() const { return symbols.size(); }
  std::vector<bool> pilot_mask() const;
  double bandwidth_utilization() const { return 1.0 - 1.0 / static_cast<double>(pilot_interval); }
};

/// Payload symbols are uniform over the alphabet; pilot j carries symbol j mod K so
/// every symbol receives labelled anchors.
Frame build_frame(std::size_t length, std::size_t interval, int order, std::uint64_t seed);

/// Total complex noise variance for a given Es/N0 in dB.
double snr_to_noise_variance(double snr_db, double symbol_energy = 1.0);

/// Es/N0 from Eb/N0 for a given number of bits per symbol.
inline double ebn0_to_esn0_db(double ebn0_db, int bits_per_symbol) {
  return ebn0_db + 10.0 * std::log10(static_cast<double>(bits_per_symbol));
}

struct ReceivedSequence {
  std::vector<Complex> samples;
  std::vector<Complex> true_gains;
  double noise_variance = 0.0;

  std::size_t length() const { return samples.size(); }
};

/// Applies per-sample gains and adds circular complex Gaussian noise (variance
/// noise_variance / 2 per quadrature).
ReceivedSequence transmit(const Frame& frame, const Constellation& constellation,
                          const std::vector<Complex>& gains, double noise_variance, std::uint64_t seed);

// CSV layout: index,pilot_flag,true_symbol,I,Q,gain_I,gain_Q
void write_csv(std::ostream& os, const Frame& frame, const ReceivedSequence& rx);

struct CsvFrame {
  Frame frame;
  ReceivedSequence received;
};
CsvFrame read_csv(std::istream& is);

}  // namespace blackout::link

