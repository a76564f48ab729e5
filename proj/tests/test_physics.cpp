#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "blackout/errors.hpp"
#include "blackout/physics.hpp"
#include "blackout/rng.hpp"

using namespace blackout;
using namespace blackout::physics;

namespace {

// Reference values from a 30-digit evaluation of the cold-plasma formulas with
// CODATA 2018 constants, carrier 2*pi*9 GHz, collisions 2*pi*20 GHz.
constexpr double kPlasmaFreq1e22 = 5641460231180.6276;
constexpr double kPlasmaFreq6e23 = 43698563047308.029;
constexpr double kEpsReal6e23 = -100559.98051227033;
constexpr double kEpsImagPrinted6e23 = -28081923343567540.0;
constexpr double kEpsImagDrude6e23 = -223468.84558282295;
constexpr double kAlphaPrinted6e23 = 22351161767.428051;
constexpr double kBetaPrinted6e23 = 22351161767.348012;
constexpr double kAlphaDrude6e23 = 78411.77158935293;
constexpr double kBetaDrude6e23 = 50700.13005670722;
constexpr double kAlphaDrude1e22 = 10121.697575343116;
constexpr double kBetaDrude1e22 = 6546.1466780721788;
constexpr double kSheathPrinted = 1.3403027121031436e-10;

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_CASE("plasma frequency") {
  CHECK(close(plasma_frequency(1e22), kPlasmaFreq1e22, 1e-12));
  CHECK(close(plasma_frequency(6e23), kPlasmaFreq6e23, 1e-12));
  CHECK(plasma_frequency(0.0) == 0.0);
  CHECK_THROWS_AS(plasma_frequency(-1.0), DomainError);
  // sqrt scaling
  CHECK(close(plasma_frequency(4e22), 2.0 * plasma_frequency(1e22), 1e-14));
}

TEST_CASE("dielectric coefficient at the reference point") {
  const auto printed = reference_channel();
  const auto eps = dielectric_coefficient(6e23, printed);
  CHECK(close(eps.real(), kEpsReal6e23, 1e-12));
  CHECK(close(eps.imag(), kEpsImagPrinted6e23, 1e-12));

  const auto drude = reference_channel(FrequencyConvention::Ordinary, LossTerm::Drude);
  const auto eps_d = dielectric_coefficient(6e23, drude);
  CHECK(close(eps_d.real(), kEpsReal6e23, 1e-12));
  CHECK(close(eps_d.imag(), kEpsImagDrude6e23, 1e-12));

  // Vacuum limit.
  const auto vac = dielectric_coefficient(0.0, printed);
  CHECK(vac.real() == 1.0);
  CHECK(vac.imag() == 0.0);
}

TEST_CASE("attenuation and phase coefficients") {
  const auto printed = reference_channel();
  const auto c = attenuation_phase_coefficients(6e23, printed);
  CHECK(close(c.attenuation, kAlphaPrinted6e23, 1e-12));
  CHECK(close(c.phase, kBetaPrinted6e23, 1e-12));

  const auto drude = reference_channel(FrequencyConvention::Ordinary, LossTerm::Drude);
  CHECK(close(attenuation_phase_coefficients(6e23, drude).attenuation, kAlphaDrude6e23, 1e-12));
  CHECK(close(attenuation_phase_coefficients(6e23, drude).phase, kBetaDrude6e23, 1e-12));
  CHECK(close(attenuation_phase_coefficients(1e22, drude).attenuation, kAlphaDrude1e22, 1e-12));
  CHECK(close(attenuation_phase_coefficients(1e22, drude).phase, kBetaDrude1e22, 1e-12));

  const auto vac = attenuation_phase_coefficients(0.0, printed);
  CHECK(vac.attenuation == doctest::Approx(0.0));
  CHECK(close(vac.phase, printed.carrier_angular_freq / PhysicalConstants::light_speed, 1e-15));
}

TEST_CASE("closed form agrees with the principal complex square root") {
  for (auto loss : {LossTerm::AsPrinted, LossTerm::Drude}) {
    const auto p = reference_channel(FrequencyConvention::Ordinary, loss);
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const double n = std::exp(std::log(1e22) + (std::log(6e23) - std::log(1e22)) * rng.uniform());
      const auto c = attenuation_phase_coefficients(n, p);
      const auto direct = (p.carrier_angular_freq / PhysicalConstants::light_speed) * std::sqrt(dielectric_coefficient(n, p));
      const std::complex<double> closed(c.phase, -c.attenuation);
      CHECK(std::abs(closed - direct) / std::abs(direct) < 1e-12);
      CHECK(c.attenuation >= 0.0);
      CHECK(c.phase >= 0.0);
    }
  }
}

TEST_CASE("attenuation grows and gain shrinks with density") {
  auto p = reference_channel();
  p.sheath_thickness = calibrate_sheath_thickness(p);
  double prev_a = -1.0;
  double prev_g = 2.0;
  for (int i = 0; i <= 200; ++i) {
    const double n = 1e22 + (6e23 - 1e22) * i / 200.0;
    const double a = attenuation_phase_coefficients(n, p).attenuation;
    const double g = std::abs(channel_gain(n, p));
    CHECK(a >= prev_a);
    CHECK(g <= prev_g);
    CHECK(g <= 1.0);
    prev_a = a;
    prev_g = g;
  }
}

TEST_CASE("channel gain") {
  auto p = reference_channel();
  CHECK(std::abs(channel_gain(6e23, p) - std::complex<double>(1.0, 0.0)) == 0.0);  // zero thickness
  p.sheath_thickness = calibrate_sheath_thickness(p);
  CHECK(close(p.sheath_thickness, kSheathPrinted, 1e-12));
  CHECK(std::abs(channel_gain(6e23, p)) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(std::abs(channel_gain(0.0, p)) == doctest::Approx(1.0));
  // s = exp(-alpha z) exp(-j beta z)
  const auto c = attenuation_phase_coefficients(2e23, p);
  const auto expected = std::exp(std::complex<double>(-c.attenuation * p.sheath_thickness, -c.phase * p.sheath_thickness));
  CHECK(std::abs(channel_gain(2e23, p) - expected) < 1e-14);
  CHECK_THROWS_AS(calibrate_sheath_thickness(p, 1.5), ConfigError);
}

TEST_CASE("frequency convention") {
  const auto ordinary = reference_channel(FrequencyConvention::Ordinary);
  const auto angular = reference_channel(FrequencyConvention::Angular);
  CHECK(close(ordinary.carrier_angular_freq, 2.0 * std::numbers::pi * 9e9, 1e-15));
  CHECK(angular.carrier_angular_freq == 9e9);
  CHECK(angular.collision_angular_freq == 20e9);
}

TEST_CASE("density trajectories") {
  const auto p = reference_channel();
  DensityTrajectory t;
  t.length = 4096;
  const auto sine = density_trajectory(t, p);
  REQUIRE(sine.size() == 4096);
  for (double n : sine) {
    CHECK(n >= p.density_min);
    CHECK(n <= p.density_max);
  }
  CHECK(sine[0] == doctest::Approx(0.5 * (p.density_min + p.density_max)));
  // 50 kHz at 10 MHz: period of 200 symbols
  CHECK(sine[200] == doctest::Approx(sine[0]));
  CHECK(sine[50] == doctest::Approx(p.density_max));

  t.kind = ProfileKind::LinearSweep;
  const auto sweep = density_trajectory(t, p);
  CHECK(sweep.front() == p.density_min);
  CHECK(sweep.back() == p.density_max);

  t.kind = ProfileKind::Constant;
  t.level = 0.0;
  for (double n : density_trajectory(t, p)) CHECK(n == p.density_min);

  t.length = 0;
  CHECK_THROWS_AS(density_trajectory(t, p), ConfigError);
}
