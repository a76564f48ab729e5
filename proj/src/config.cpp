#include "blackout/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "blackout/errors.hpp"
#include "blackout/link.hpp"

namespace blackout::bench {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const auto n = to_int(key, v);
  if (n < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(n);
}

std::string num(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
  return s;
}

}  // namespace

double parse_density(const std::string& value) {
  std::string v = trim(value);
  double scale = 1.0;
  const auto ends_with = [&](const std::string& suffix) {
    return v.size() >= suffix.size() && v.compare(v.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("cm^-3")) {
    scale = 1e6;
    v = trim(v.substr(0, v.size() - 5));
  } else if (ends_with("m^-3")) {
    v = trim(v.substr(0, v.size() - 4));
  }
  return to_double("density", v) * scale;
}

physics::ChannelParams ExperimentConfig::channel() const {
  const double scale =
      frequency_convention == physics::FrequencyConvention::Ordinary ? 2.0 * std::numbers::pi : 1.0;
  physics::ChannelParams p;
  p.carrier_angular_freq = scale * carrier_frequency;
  p.collision_angular_freq = scale * collision_frequency;
  p.density_min = density_min;
  p.density_max = density_max;
  p.loss_term = loss_term;
  p.sheath_thickness = sheath_thickness > 0.0 ? sheath_thickness : physics::calibrate_sheath_thickness(p, fade_floor);
  p.validate();
  return p;
}

physics::DensityTrajectory ExperimentConfig::trajectory_spec(int trial) const {
  physics::DensityTrajectory t;
  t.kind = trajectory;
  t.oscillation_freq = oscillation_frequency;
  // Trials see the same oscillation at evenly spread starting phases.
  t.phase_offset = phase_offset + 2.0 * std::numbers::pi * trial / std::max(trials, 1);
  t.length = frame_length;
  t.symbol_rate = symbol_rate;
  t.level = constant_level;
  return t;
}

double ExperimentConfig::noise_variance(double snr) const {
  const double es_n0 = snr_convention == SnrConvention::EbN0 ? link::ebn0_to_esn0_db(snr, bits_per_symbol) : snr;
  return link::snr_to_noise_variance(es_n0, 1.0);
}

double ExperimentConfig::init_stddev_value() const {
  return init_value_is_variance ? std::sqrt(init_stddev) : init_stddev;
}

em::EmOptions ExperimentConfig::em_options() const {
  em::EmOptions o;
  o.sigma_floor = sigma_floor;
  o.adam.learning_rate = learning_rate;
  return o;
}

baselines::DnnConfig ExperimentConfig::dnn_config(std::uint64_t s) const {
  baselines::DnnConfig c;
  c.hidden = dnn_hidden;
  c.steps = dnn_steps;
  c.learning_rate = dnn_learning_rate;
  c.init_stddev = init_stddev_value();
  c.seed = s;
  return c;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  const auto profile = trajectory == physics::ProfileKind::Sinusoid      ? "sinusoid"
                       : trajectory == physics::ProfileKind::LinearSweep ? "linear_sweep"
                                                                         : "constant";
  os << "# blackout experiment config\n";
  os << "carrier_frequency = " << num(carrier_frequency) << '\n';
  os << "collision_frequency = " << num(collision_frequency) << '\n';
  os << "frequency_convention = "
     << (frequency_convention == physics::FrequencyConvention::Ordinary ? "ordinary" : "angular") << '\n';
  os << "loss_term = " << (loss_term == physics::LossTerm::AsPrinted ? "printed" : "drude") << '\n';
  os << "density_min = " << num(density_min) << " m^-3\n";
  os << "density_max = " << num(density_max) << " m^-3\n";
  os << "sheath_thickness = " << (sheath_thickness > 0.0 ? num(sheath_thickness) : std::string("auto")) << '\n';
  os << "fade_floor = " << num(fade_floor) << '\n';
  os << "trajectory = " << profile << '\n';
  os << "oscillation_frequency = " << num(oscillation_frequency) << '\n';
  os << "phase_offset = " << num(phase_offset) << '\n';
  os << "symbol_rate = " << num(symbol_rate) << '\n';
  os << "constant_level = " << num(constant_level) << '\n';
  os << "frame_length = " << frame_length << '\n';
  os << "bits_per_symbol = " << bits_per_symbol << '\n';
  os << "pilot_intervals = " << join(pilot_intervals, [](std::size_t v) { return std::to_string(v); }) << '\n';
  os << "snr_db = " << join(snr_db, num) << '\n';
  os << "snr_convention = " << (snr_convention == SnrConvention::EsN0 ? "es_n0" : "eb_n0") << '\n';
  os << "trials = " << trials << '\n';
  os << "seed = " << seed << '\n';
  os << "receivers = " << join(receivers, [](const std::string& s) { return s; }) << '\n';
  os << "pretrain_steps = " << schedule.pretrain_steps << '\n';
  os << "em_iterations = " << schedule.em_iterations << '\n';
  os << "mstep_steps = " << schedule.mstep_steps << '\n';
  os << "learning_rate = " << num(learning_rate) << '\n';
  os << "sigma_floor = " << num(sigma_floor) << '\n';
  os << "init_stddev = " << num(init_stddev) << '\n';
  os << "init_convention = " << (init_value_is_variance ? "variance" : "stddev") << '\n';
  os << "dnn_hidden = " << join(dnn_hidden, [](Eigen::Index v) { return std::to_string(v); }) << '\n';
  os << "dnn_steps = " << dnn_steps << '\n';
  os << "dnn_learning_rate = " << num(dnn_learning_rate) << '\n';
  os << "snapshot_snr_db = " << num(snapshot_snr_db) << '\n';
  os << "snapshot_interval = " << snapshot_interval << '\n';
  os << "fading_snr_db = " << join(fading_snr_db, num) << '\n';
  os << "fading_interval = " << fading_interval << '\n';
  os << "curve_grid_points = " << curve_grid_points << '\n';
  os << "threads = " << threads << '\n';
  os << "output_dir = " << output_dir << '\n';
  return os.str();
}

void apply_setting(ExperimentConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  const auto choice = [&](std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
      if (v == a) return;
    std::string msg = "config key '" + key + "': '" + v + "' is not one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg);
  };

  if (key == "carrier_frequency") c.carrier_frequency = to_double(key, v);
  else if (key == "collision_frequency") c.collision_frequency = to_double(key, v);
  else if (key == "frequency_convention") {
    choice({"ordinary", "angular"});
    c.frequency_convention = v == "ordinary" ? physics::FrequencyConvention::Ordinary : physics::FrequencyConvention::Angular;
  } else if (key == "loss_term") {
    choice({"printed", "drude"});
    c.loss_term = v == "printed" ? physics::LossTerm::AsPrinted : physics::LossTerm::Drude;
  } else if (key == "density_min") c.density_min = parse_density(v);
  else if (key == "density_max") c.density_max = parse_density(v);
  else if (key == "sheath_thickness") c.sheath_thickness = v == "auto" ? 0.0 : to_double(key, v);
  else if (key == "fade_floor") c.fade_floor = to_double(key, v);
  else if (key == "trajectory") {
    choice({"sinusoid", "linear_sweep", "constant"});
    c.trajectory = v == "sinusoid" ? physics::ProfileKind::Sinusoid
                   : v == "linear_sweep" ? physics::ProfileKind::LinearSweep
                                         : physics::ProfileKind::Constant;
  } else if (key == "oscillation_frequency") c.oscillation_frequency = to_double(key, v);
  else if (key == "phase_offset") c.phase_offset = to_double(key, v);
  else if (key == "symbol_rate") c.symbol_rate = to_double(key, v);
  else if (key == "constant_level") c.constant_level = to_double(key, v);
  else if (key == "frame_length") c.frame_length = to_count(key, v);
  else if (key == "bits_per_symbol") c.bits_per_symbol = static_cast<int>(to_int(key, v));
  else if (key == "pilot_intervals") {
    c.pilot_intervals.clear();
    for (const auto& s : split_list(v)) c.pilot_intervals.push_back(to_count(key, s));
  } else if (key == "snr_db") {
    c.snr_db.clear();
    for (const auto& s : split_list(v)) c.snr_db.push_back(to_double(key, s));
  } else if (key == "snr_convention") {
    choice({"es_n0", "eb_n0"});
    c.snr_convention = v == "es_n0" ? SnrConvention::EsN0 : SnrConvention::EbN0;
  } else if (key == "trials") c.trials = static_cast<int>(to_int(key, v));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_count(key, v));
  else if (key == "receivers") {
    c.receivers = split_list(v);
    for (const auto& r : c.receivers)
      if (r != "smn" && r != "dnn" && r != "pilot_interp" && r != "genie")
        throw ConfigError("unknown receiver '" + r + "' (smn, dnn, pilot_interp, genie)");
  } else if (key == "pretrain_steps") c.schedule.pretrain_steps = static_cast<int>(to_count(key, v));
  else if (key == "em_iterations") c.schedule.em_iterations = static_cast<int>(to_count(key, v));
  else if (key == "mstep_steps") c.schedule.mstep_steps = static_cast<int>(to_count(key, v));
  else if (key == "learning_rate") c.learning_rate = to_double(key, v);
  else if (key == "sigma_floor") c.sigma_floor = to_double(key, v);
  else if (key == "init_stddev") c.init_stddev = to_double(key, v);
  else if (key == "init_convention") {
    choice({"stddev", "variance"});
    c.init_value_is_variance = v == "variance";
  } else if (key == "dnn_hidden") {
    c.dnn_hidden.clear();
    for (const auto& s : split_list(v)) c.dnn_hidden.push_back(static_cast<Eigen::Index>(to_count(key, s)));
  } else if (key == "dnn_steps") c.dnn_steps = static_cast<int>(to_count(key, v));
  else if (key == "dnn_learning_rate") c.dnn_learning_rate = to_double(key, v);
  else if (key == "snapshot_snr_db") c.snapshot_snr_db = to_double(key, v);
  else if (key == "snapshot_interval") c.snapshot_interval = to_count(key, v);
  else if (key == "fading_snr_db") {
    c.fading_snr_db.clear();
    for (const auto& s : split_list(v)) c.fading_snr_db.push_back(to_double(key, s));
  } else if (key == "fading_interval") c.fading_interval = to_count(key, v);
  else if (key == "curve_grid_points") c.curve_grid_points = static_cast<int>(to_count(key, v));
  else if (key == "threads") c.threads = static_cast<int>(to_count(key, v));
  else if (key == "output_dir") c.output_dir = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_setting(c, t.substr(0, eq), t.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace blackout::bench
