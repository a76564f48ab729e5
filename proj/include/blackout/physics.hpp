#pragma once

// Cold collisional plasma slab: electron density -> complex channel gain.
//
// All quantities are SI. Densities are per cubic metre; the config layer is
// responsible for converting cm^-3 input (1 cm^-3 = 1e6 m^-3).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "blackout/errors.hpp"

namespace blackout::physics {

/// CODATA 2018 exact / recommended values.
struct PhysicalConstants {
  static constexpr double electron_charge = 1.602176634e-19;        // C
  static constexpr double vacuum_permittivity = 8.8541878128e-12;   // F/m
  static constexpr double electron_mass = 9.1093837015e-31;         // kg
  static constexpr double light_speed = 299792458.0;                // m/s
};

/// Form of the loss (imaginary) term of the relative permittivity.
///  AsPrinted: (nu^2 / omega) * omega_p^2 / (omega^2 + nu^2)
///  Drude:     (nu   / omega) * omega_p^2 / (omega^2 + nu^2)
enum class LossTerm { AsPrinted, Drude };

/// How "9 GHz"-style configuration values are read.
enum class FrequencyConvention { Ordinary, Angular };

struct ChannelParams {
  double carrier_angular_freq = 0.0;    // rad/s
  double collision_angular_freq = 0.0;  // rad/s
  double sheath_thickness = 0.0;        // m
  double density_min = 0.0;             // m^-3
  double density_max = 0.0;             // m^-3
  LossTerm loss_term = LossTerm::AsPrinted;

  void validate() const {
    if (!(carrier_angular_freq > 0.0)) throw ConfigError("carrier frequency must be > 0");
    if (!(collision_angular_freq >= 0.0)) throw ConfigError("collision frequency must be >= 0");
    if (!(sheath_thickness > 0.0)) throw ConfigError("sheath thickness must be > 0");
    if (!(density_min > 0.0) || !(density_min <= density_max))
      throw ConfigError("density range must satisfy 0 < n_min <= n_max");
  }
};

/// Reference channel: 9 GHz carrier, 20 GHz collisions, n_e in [1e16, 6e17] cm^-3.
/// The sheath thickness is left at zero; call calibrate_sheath_thickness().
inline ChannelParams reference_channel(FrequencyConvention convention = FrequencyConvention::Ordinary,
                                       LossTerm loss = LossTerm::AsPrinted) {
  const double scale = convention == FrequencyConvention::Ordinary ? 2.0 * std::numbers::pi : 1.0;
  ChannelParams p;
  p.carrier_angular_freq = scale * 9e9;
  p.collision_angular_freq = scale * 20e9;
  p.density_min = 1e16 * 1e6;
  p.density_max = 6e17 * 1e6;
  p.loss_term = loss;
  return p;
}

template <typename Scalar = double>
Scalar plasma_frequency(Scalar density) {
  using C = PhysicalConstants;
  if (density < Scalar(0)) throw DomainError("electron density must be non-negative");
  return std::sqrt(density * Scalar(C::electron_charge * C::electron_charge) /
                   Scalar(C::vacuum_permittivity * C::electron_mass));
}

namespace detail {

// omega_p^2 / (omega^2 + nu^2) and the coefficient of the loss term.
template <typename Scalar>
struct DielectricParts {
  Scalar real;  // 1 - ratio
  Scalar loss;  // >= 0; eps_r = real - j*loss
};

template <typename Scalar>
DielectricParts<Scalar> dielectric_parts(Scalar density, const ChannelParams& p) {
  const Scalar wp = plasma_frequency(density);
  const Scalar w = Scalar(p.carrier_angular_freq);
  const Scalar nu = Scalar(p.collision_angular_freq);
  const Scalar ratio = wp * wp / (w * w + nu * nu);
  const Scalar coeff = p.loss_term == LossTerm::AsPrinted ? nu * nu / w : nu / w;
  return {Scalar(1) - ratio, coeff * ratio};
}

}  // namespace detail

/// Relative permittivity eps_r = 1 - ratio - j * loss * ratio. Im(eps_r) <= 0.
template <typename Scalar = double>
std::complex<Scalar> dielectric_coefficient(Scalar density, const ChannelParams& params) {
  const auto parts = detail::dielectric_parts(density, params);
  return {parts.real, -parts.loss};
}

template <typename Scalar = double>
struct PropagationCoefficients {
  Scalar attenuation;  // alpha, Np/m
  Scalar phase;        // beta, rad/m
};

/// Closed-form alpha and beta with k = beta - j*alpha.
///
/// Written so neither branch subtracts nearly equal numbers: for a
/// weakly-lossy underdense plasma sqrt(A^2 + B^2) - A loses every digit, so
/// that difference is rewritten as B^2 / (sqrt(A^2 + B^2) + A).
template <typename Scalar = double>
PropagationCoefficients<Scalar> attenuation_phase_coefficients(Scalar density,
                                                               const ChannelParams& params) {
  const auto [a, b] = detail::dielectric_parts(density, params);
  const Scalar r = std::hypot(a, b);
  Scalar plus, minus;  // r + a, r - a
  if (a >= Scalar(0)) {
    plus = r + a;
    minus = plus > Scalar(0) ? b * b / plus : Scalar(0);
  } else {
    minus = r - a;
    plus = b * b / minus;
  }
  const Scalar k0 = Scalar(params.carrier_angular_freq) /
                    (std::numbers::sqrt2_v<Scalar> * Scalar(PhysicalConstants::light_speed));
  return {k0 * std::sqrt(minus), k0 * std::sqrt(plus)};
}

/// s = exp(-alpha z) exp(-j beta z).
template <typename Scalar = double>
std::complex<Scalar> channel_gain(Scalar density, const ChannelParams& params) {
  const auto c = attenuation_phase_coefficients(density, params);
  const Scalar z = Scalar(params.sheath_thickness);
  return std::polar(std::exp(-c.attenuation * z), -c.phase * z);
}

/// Sheath thickness z giving |s(n_max)| = deepest_gain. Since |s| = exp(-alpha z),
/// this is a closed form: z = ln(1/deepest_gain) / alpha(n_max).
inline double calibrate_sheath_thickness(const ChannelParams& params, double deepest_gain = 0.05) {
  if (!(deepest_gain > 0.0 && deepest_gain < 1.0))
    throw ConfigError("deepest gain must be in (0, 1)");
  const double alpha = attenuation_phase_coefficients(params.density_max, params).attenuation;
  if (!(alpha > 0.0)) throw ConfigError("channel has no attenuation at n_max; cannot calibrate");
  return -std::log(deepest_gain) / alpha;
}

// ---------------------------------------------------------------------------
// Electron-density trajectories.

enum class ProfileKind { Sinusoid, LinearSweep, Constant };

struct DensityTrajectory {
  ProfileKind kind = ProfileKind::Sinusoid;
  double oscillation_freq = 50e3;  // Hz
  double phase_offset = 0.0;       // rad
  std::size_t length = 4096;
  double symbol_rate = 10e6;       // Hz
  double level = 0.0;              // constant profile: fraction of the way from n_min to n_max
};

/// Sinusoid: midpoint + half-range * sin(2 pi f i / R + phase); sweeps the full range
/// once per period. Linear sweep: n_min to n_max inclusive. Constant: n_min + level * range.
inline std::vector<double> density_trajectory(const DensityTrajectory& traj, const ChannelParams& params) {
  if (traj.length < 1) throw ConfigError("trajectory length must be >= 1");
  const double lo = params.density_min;
  const double hi = params.density_max;
  if (!(lo > 0.0 && lo <= hi)) throw ConfigError("density range must satisfy 0 < n_min <= n_max");
  std::vector<double> out(traj.length);
  switch (traj.kind) {
    case ProfileKind::Constant: {
      if (!(traj.level >= 0.0 && traj.level <= 1.0)) throw ConfigError("constant level must be in [0, 1]");
      const double v = lo + traj.level * (hi - lo);
      std::fill(out.begin(), out.end(), v);
      break;
    }
    case ProfileKind::LinearSweep: {
      const double span = hi - lo;
      const double last = static_cast<double>(traj.length - 1);
      for (std::size_t i = 0; i < traj.length; ++i) out[i] = traj.length == 1 ? lo : lo + span * (static_cast<double>(i) / last);
      out.back() = traj.length == 1 ? lo : hi;
      break;
    }
    case ProfileKind::Sinusoid: {
      if (!(traj.oscillation_freq > 0.0)) throw ConfigError("sinusoid oscillation frequency must be > 0");
      if (!(traj.symbol_rate > 0.0)) throw ConfigError("symbol rate must be > 0");
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * (hi - lo);
      const double step = 2.0 * std::numbers::pi * traj.oscillation_freq / traj.symbol_rate;
      for (std::size_t i = 0; i < traj.length; ++i) {
        const double v = mid + half * std::sin(step * static_cast<double>(i) + traj.phase_offset);
        out[i] = std::clamp(v, lo, hi);
      }
      break;
    }
  }
  return out;
}

inline std::vector<std::complex<double>> channel_gains(const std::vector<double>& densities,
                                                       const ChannelParams& params) {
  std::vector<std::complex<double>> g;
  g.reserve(densities.size());
  for (double n : densities) g.push_back(channel_gain(n, params));
  return g;
}

}  // namespace blackout::physics
