#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "blackout/em.hpp"
#include "blackout/errors.hpp"
#include "blackout/link.hpp"
#include "blackout/physics.hpp"

using namespace blackout;
using namespace blackout::em;

namespace {

Model zero_model(const link::Constellation& c) {
  auto m = net::init_model<double>(c.points, 1);
  net::unpack(m, net::Vector<double>(net::Vector<double>::Zero(net::parameter_count(m))));
  return m;
}

struct Scenario {
  link::Constellation constellation;
  link::Frame frame;
  link::ReceivedSequence received;
};

// Static channel with a fixed rotation-attenuation.
Scenario static_scenario(double snr_db, std::size_t length, std::size_t interval, std::complex<double> gain,
                         std::uint64_t seed) {
  Scenario s;
  s.constellation = link::build_constellation(2);
  s.frame = link::build_frame(length, interval, 4, seed);
  std::vector<link::Complex> g(length, gain);
  s.received = link::transmit(s.frame, s.constellation, g, link::snr_to_noise_variance(snr_db), seed + 1);
  return s;
}

}  // namespace

TEST_CASE("e-step matches a hand-evaluated softmax") {
  // BPSK zero model projects every sample to +/-0.5. For y = 0.25:
  // d = (0.0625, 0.5625), sigma^2 = 0.5 -> W = (1, e^-1) / (1 + e^-1).
  const auto c = link::build_constellation(1);
  auto m = zero_model(c);
  m.noise_variance = 0.5;
  const auto f = link::build_frame(3, 3, 2, 1);
  Samples y(2, 3);
  y << 0.9, 0.25, 0.0, 0.0, 0.0, 0.0;
  const auto w = e_step(m, y, f);
  const double expected = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(w(1, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(w(1, 1) == doctest::Approx(1.0 - expected).epsilon(1e-14));
  CHECK(w(2, 0) == doctest::Approx(0.5));
  // Row 0 is a pilot carrying symbol 0.
  CHECK(w(0, 0) == 1.0);
  CHECK(w(0, 1) == 0.0);
}

TEST_CASE("e-step is stable for tiny noise variance and clamps at the floor") {
  const auto c = link::build_constellation(2);
  auto m = zero_model(c);
  m.noise_variance = 1e-12;
  const auto f = link::build_frame(50, 50, 4, 2);
  Samples y = Samples::Random(2, 50) * 3.0;
  bool clamped = false;
  const auto w = e_step(m, y, f, EmOptions{}, &clamped);
  CHECK(clamped);
  CHECK(m.noise_variance == 1e-6);
  CHECK(w.allFinite());
  CHECK(max_row_sum_error(w) < 1e-12);
  CHECK((w.array() >= 0.0).all());
}

TEST_CASE("pilot prior") {
  const auto f = link::build_frame(32, 8, 4, 3);
  const auto w = pilot_prior(f, 4);
  for (auto p : f.pilot_positions) CHECK(w(static_cast<Eigen::Index>(p), f.symbols[p]) == 1.0);
  for (auto p : f.payload_positions) CHECK(w(static_cast<Eigen::Index>(p), 2) == 0.25);
}

TEST_CASE("lower bound equals the log-evidence at the exact posterior") {
  // ln p(y) = sum_i ln sum_k (1/K) N(y_i; proj_k, sigma^2) when W is the posterior.
  const auto c = link::build_constellation(2);
  auto m = net::init_model<double>(c.points, 4);
  m.noise_variance = 0.3;
  const auto f = link::build_frame(40, 40, 4, 4);
  const Samples y = Samples::Random(2, 40);
  // Payload-only posterior: unpin the single pilot by comparing rows 1..39.
  const auto w = e_step(m, y, f);
  const auto d = net::squared_distances(m, y);
  double evidence = 0.0;
  double pilot_term = 0.0;
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += 0.25 * std::exp(-d(i, k) / 0.3) / (std::numbers::pi * 0.3);
    if (i == 0) {
      const int k = f.symbols[0];
      pilot_term = -d(0, k) / 0.3 - std::log(std::numbers::pi * 0.3) + std::log(0.25);
    } else {
      evidence += std::log(s);
    }
  }
  CHECK(evidence_lower_bound(m, y, w) == doctest::Approx(evidence + pilot_term).epsilon(1e-12));

  // Any other row-stochastic W gives a smaller bound.
  auto other = w;
  other.bottomRows(39).setConstant(0.25);
  CHECK(evidence_lower_bound(m, y, other) < evidence_lower_bound(m, y, w));
}

TEST_CASE("pretraining needs a pilot for every symbol") {
  const auto c = link::build_constellation(2);
  auto m = net::init_model<double>(c.points, 5);
  const auto f = link::build_frame(64, 32, 4, 5);  // pilots carry symbols 0 and 1 only
  const Samples y = Samples::Random(2, 64);
  CHECK_THROWS_AS(pretrain(m, y, f, EmSchedule{}), ConfigError);
}

TEST_CASE("fit on a static channel recovers the symbols without relabelling") {
  const auto s = static_scenario(25.0, 1024, 64, std::polar(0.8, -0.3), 6);
  auto m = net::init_model<double>(s.constellation.points, 7);
  double worst_row = 0.0;
  int events = 0;
  const auto res = fit(m, s.received, s.frame, EmSchedule{2000, 5, 100}, EmOptions{}, [&](const FitEvent& ev) {
    ++events;
    if (ev.posteriors) worst_row = std::max(worst_row, max_row_sum_error(*ev.posteriors));
  });
  const auto d = demodulate(res.posteriors);
  int errors = 0;
  for (auto p : s.frame.payload_positions) errors += d[p] != s.frame.symbols[p];
  CHECK(errors == 0);
  CHECK(worst_row < 1e-9);
  CHECK(events == 2000 + 1 + 2 * 5 + 1);
  CHECK(mean_max_posterior(res.posteriors, s.frame.payload_positions) > 0.99);

  // Lower bound never drops across an E-step.
  const auto& r = res.trace.records;
  REQUIRE(r.size() == 1 + 2 * 5 + 1);
  CHECK(r.front().phase == "pretrain");
  CHECK(r.back().phase == "final_e_step");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i].phase != "m_step") CHECK(r[i].elbo >= r[i - 1].elbo - 1e-9);
}

TEST_CASE("fit is deterministic") {
  const auto s = static_scenario(15.0, 256, 32, std::polar(0.6, 0.4), 8);
  auto a = net::init_model<double>(s.constellation.points, 9);
  auto b = net::init_model<double>(s.constellation.points, 9);
  const EmSchedule sched{100, 2, 20};
  const auto ra = fit(a, s.received, s.frame, sched);
  const auto rb = fit(b, s.received, s.frame, sched);
  CHECK(ra.posteriors == rb.posteriors);
  CHECK(net::pack(a) == net::pack(b));
  std::stringstream ta, tb;
  write_trace_csv(ta, ra.trace);
  write_trace_csv(tb, rb.trace);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("m-step lowers the weighted residual and resets the optimiser") {
  const auto s = static_scenario(15.0, 256, 32, std::polar(0.6, 0.4), 10);
  auto m = net::init_model<double>(s.constellation.points, 11);
  const Samples y = to_samples(s.received.samples);
  const auto w = pilot_prior(s.frame, 4);
  const double before = net::weighted_loss(m, y, w);
  net::AdamState<double> state(net::parameter_count(m), {});
  state.step_count = 999;
  const double after = m_step(m, y, w, EmSchedule{0, 1, 50}, state);
  CHECK(after < before);
  CHECK(state.step_count == 50);
  CHECK(m.noise_variance == after);
}

TEST_CASE("demodulate breaks ties toward the lowest index") {
  PosteriorMatrix w(3, 4);
  w << 0.25, 0.25, 0.25, 0.25, 0.1, 0.4, 0.4, 0.1, 0.0, 0.0, 0.0, 1.0;
  CHECK(demodulate(w) == std::vector<int>{0, 1, 3});
}

TEST_CASE("fading curve estimate divides the projection by the symbol") {
  const auto c = link::build_constellation(2);
  auto m = zero_model(c);
  const auto f = link::build_frame(8, 4, 4, 12);
  const Samples y = Samples::Random(2, 8);
  std::vector<int> decisions(f.symbols);
  const auto est = extract_fading_curve(m, y, decisions, f, c.points, 7);
  REQUIRE(est.sample_gains.size() == 8);
  for (const auto& g : est.sample_gains) CHECK(std::abs(g - std::complex<double>(0.5, 0.0)) < 1e-14);
  CHECK(est.curves.size() == 4);
  CHECK(est.lambda_grid.size() == 7);
}

TEST_CASE("trace and posterior CSV schemas") {
  ElboTrace t;
  t.records.push_back({"pretrain", 0, -1.5, 0.25});
  std::stringstream ss;
  write_trace_csv(ss, t);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "# schema=elbo_trace/1");

  PosteriorMatrix w = PosteriorMatrix::Constant(2, 4, 0.25);
  std::stringstream ps;
  write_posteriors_csv(ps, w);
  std::getline(ps, line);
  CHECK(line == "# schema=posteriors/1");
}
