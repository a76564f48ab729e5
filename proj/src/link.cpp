#include "blackout/link.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "blackout/errors.hpp"
#include "blackout/rng.hpp"

namespace blackout::link {

namespace {

int gray(int i) { return i ^ (i >> 1); }

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

double Constellation::average_energy() const {
  double e = 0.0;
  for (const auto& p : points) e += std::norm(p);
  return points.empty() ? 0.0 : e / static_cast<double>(points.size());
}

Constellation build_constellation(int bits_per_symbol) {
  Constellation c;
  c.bits_per_symbol = bits_per_symbol;
  switch (bits_per_symbol) {
    case 1:
      c.points = {Complex(1.0, 0.0), Complex(-1.0, 0.0)};
      break;
    case 2: {
      const double a = std::numbers::sqrt2 / 2.0;
      // Bit 0 sets the sign of I, bit 1 the sign of Q; neighbours differ in one bit.
      c.points = {Complex(a, a), Complex(-a, a), Complex(a, -a), Complex(-a, -a)};
      break;
    }
    case 3: {
      c.points.resize(8);
      for (int i = 0; i < 8; ++i) c.points[gray(i)] = std::polar(1.0, 2.0 * std::numbers::pi * i / 8.0);
      break;
    }
    case 4: {
      c.points.resize(16);
      const double levels[4] = {-3.0, -1.0, 1.0, 3.0};
      const double scale = 1.0 / std::sqrt(10.0);
      for (int i = 0; i < 4; ++i)
        for (int q = 0; q < 4; ++q)
          c.points[(gray(i) << 2) | gray(q)] = Complex(levels[i] * scale, levels[q] * scale);
      break;
    }
    default:
      throw ConfigError("unsupported bits per symbol " + std::to_string(bits_per_symbol) +
                        " (supported: 1, 2, 3, 4)");
  }
  return c;
}

std::vector<bool> Frame::pilot_mask() const {
  std::vector<bool> mask(length(), false);
  for (auto p : pilot_positions) mask[p] = true;
  return mask;
}

Frame build_frame(std::size_t length, std::size_t interval, int order, std::uint64_t seed) {
  if (interval < 1) throw ConfigError("pilot interval must be >= 1");
  if (length < 1) throw ConfigError("frame length must be >= 1");
  if (interval > length)
    throw ConfigError("pilot interval " + std::to_string(interval) + " exceeds frame length " +
                      std::to_string(length));
  if (order < 1) throw ConfigError("constellation order must be >= 1");

  Frame f;
  f.pilot_interval = interval;
  f.symbols.resize(length);
  Rng rng(seed);
  std::size_t pilot_count = 0;
  for (std::size_t i = 0; i < length; ++i) {
    // Draw for every position so payload symbols do not depend on the interval.
    const int drawn = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(order)));
    if (i % interval == 0) {
      f.pilot_positions.push_back(i);
      f.symbols[i] = static_cast<int>(pilot_count++ % static_cast<std::size_t>(order));
    } else {
      f.payload_positions.push_back(i);
      f.symbols[i] = drawn;
    }
  }
  return f;
}

double snr_to_noise_variance(double snr_db, double symbol_energy) {
  if (!(symbol_energy > 0.0)) throw ConfigError("symbol energy must be > 0");
  return symbol_energy / std::pow(10.0, snr_db / 10.0);
}

ReceivedSequence transmit(const Frame& frame, const Constellation& constellation,
                          const std::vector<Complex>& gains, double noise_variance, std::uint64_t seed) {
  if (gains.size() != frame.length())
    throw ContractError("transmit: " + std::to_string(gains.size()) + " gains for a frame of length " +
                        std::to_string(frame.length()));
  if (noise_variance < 0.0) throw ContractError("transmit: negative noise variance");

  ReceivedSequence rx;
  rx.noise_variance = noise_variance;
  rx.true_gains = gains;
  rx.samples.resize(frame.length());
  Rng rng(seed);
  const double sd = std::sqrt(noise_variance / 2.0);
  for (std::size_t i = 0; i < frame.length(); ++i) {
    const int s = frame.symbols[i];
    if (s < 0 || s >= constellation.order()) throw ContractError("transmit: symbol index out of range");
    const double ni = rng.gaussian();
    const double nq = rng.gaussian();
    rx.samples[i] = gains[i] * constellation.points[static_cast<std::size_t>(s)] + Complex(sd * ni, sd * nq);
  }
  return rx;
}

void write_csv(std::ostream& os, const Frame& frame, const ReceivedSequence& rx) {
  if (rx.length() != frame.length() || rx.true_gains.size() != frame.length())
    throw ContractError("write_csv: frame and received sequence lengths differ");
  const auto mask = frame.pilot_mask();
  os << "index,pilot_flag,true_symbol,I,Q,gain_I,gain_Q\n";
  for (std::size_t i = 0; i < frame.length(); ++i) {
    os << i << ',' << (mask[i] ? 1 : 0) << ',' << frame.symbols[i] << ',' << format_double(rx.samples[i].real())
       << ',' << format_double(rx.samples[i].imag()) << ',' << format_double(rx.true_gains[i].real()) << ','
       << format_double(rx.true_gains[i].imag()) << '\n';
  }
}

CsvFrame read_csv(std::istream& is) {
  CsvFrame out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("index,pilot_flag", 0) != 0)
    throw ConfigError("frame csv: missing header row");
  std::size_t first_pilot_gap = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ConfigError("frame csv: expected 7 columns, got " + std::to_string(cells.size()));
    const std::size_t idx = std::stoul(cells[0]);
    if (idx != out.frame.symbols.size()) throw ConfigError("frame csv: indices must be consecutive from 0");
    const bool pilot = cells[1] == "1";
    out.frame.symbols.push_back(std::stoi(cells[2]));
    (pilot ? out.frame.pilot_positions : out.frame.payload_positions).push_back(idx);
    out.received.samples.emplace_back(std::stod(cells[3]), std::stod(cells[4]));
    out.received.true_gains.emplace_back(std::stod(cells[5]), std::stod(cells[6]));
  }
  if (out.frame.pilot_positions.size() >= 2)
    first_pilot_gap = out.frame.pilot_positions[1] - out.frame.pilot_positions[0];
  out.frame.pilot_interval = first_pilot_gap > 0 ? first_pilot_gap : out.frame.symbols.size();
  return out;
}

}  // namespace blackout::link
