#include "nvqhl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace nvqhl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string t = trim(v);
  auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const std::string t = trim(v);
  auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ConfigError(key + ": not an integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += f(v[i]);
  }
  return s;
}

struct Key {
  const char* name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

Key real(const char* name, double ExperimentConfig::*m) {
  return {name, [m](const ExperimentConfig& c) { return fmt(c.*m); },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); }};
}

Key integer(const char* name, int ExperimentConfig::*m) {
  return {name, [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*m = static_cast<int>(parse_int(k, v));
          }};
}

Key score_real(const char* name, double ScoreParams::*m) {
  return {name, [m](const ExperimentConfig& c) { return fmt(c.score.*m); },
          [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.score.*m = parse_double(k, v); }};
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back(integer("grid.height", &ExperimentConfig::height));
    k.push_back(integer("grid.width", &ExperimentConfig::width));
    k.push_back(integer("window.size", &ExperimentConfig::window_size));
    k.push_back(integer("run.frames", &ExperimentConfig::frames));
    k.push_back(integer("steps.k_b", &ExperimentConfig::k_b));
    k.push_back(integer("steps.k_j", &ExperimentConfig::k_j));
    k.push_back(integer("scan.stride_row", &ExperimentConfig::stride_row));
    k.push_back(integer("scan.stride_col", &ExperimentConfig::stride_col));
    k.push_back({"scan.directions", [](const ExperimentConfig& c) { return c.directions; },
                 [](ExperimentConfig& c, const std::string&, const std::string& v) { c.directions = trim(v); }});
    k.push_back(real("physics.gamma", &ExperimentConfig::gamma_abs));
    k.push_back(real("field.b_base", &ExperimentConfig::b_base));
    k.push_back(real("field.b_amp", &ExperimentConfig::b_amp));
    k.push_back(real("field.b_ref", &ExperimentConfig::b_ref));
    k.push_back(real("field.b_lo", &ExperimentConfig::b_lo));
    k.push_back(real("field.b_hi", &ExperimentConfig::b_hi));
    k.push_back(real("coupling.j_true", &ExperimentConfig::j_true));
    k.push_back(real("coupling.j_min", &ExperimentConfig::j_min));
    k.push_back(real("coupling.j_max", &ExperimentConfig::j_max));
    k.push_back(real("model.angular_factor", &ExperimentConfig::angular_factor));
    k.push_back(real("model.dipolar_exponent", &ExperimentConfig::dipolar_exponent));
    k.push_back(real("model.strain_std", &ExperimentConfig::strain_std_hz));
    k.push_back({"model.drive", [](const ExperimentConfig& c) { return to_string(c.drive); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   try {
                     c.drive = parse_drive_form(trim(v));
                   } catch (const std::exception& e) {
                     throw ConfigError(key + ": " + e.what());
                   }
                 }});
    k.push_back(real("noise.sigma_true", &ExperimentConfig::sigma_true));
    k.push_back(real("noise.sigma_dyn", &ExperimentConfig::sigma_dyn));
    k.push_back(real("noise.local_jitter", &ExperimentConfig::local_jitter));
    k.push_back(real("noise.j_jitter", &ExperimentConfig::j_jitter));
    k.push_back(real("rejuvenation.sigma_j", &ExperimentConfig::rejuv_sigma_j));
    k.push_back(real("resample.threshold", &ExperimentConfig::resample_threshold));
    k.push_back(integer("particles.local", &ExperimentConfig::n_local));
    k.push_back(integer("particles.global", &ExperimentConfig::n_global));
    k.push_back({"controls.b_times", [](const ExperimentConfig& c) { return join(c.b_times, fmt); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.b_times.clear();
                   for (const auto& s : split_list(v)) c.b_times.push_back(parse_double(key, s));
                 }});
    k.push_back({"controls.b_shots",
                 [](const ExperimentConfig& c) { return join(c.b_shots, [](int n) { return std::to_string(n); }); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.b_shots.clear();
                   for (const auto& s : split_list(v)) c.b_shots.push_back(static_cast<int>(parse_int(key, s)));
                 }});
    k.push_back({"controls.j_times", [](const ExperimentConfig& c) { return join(c.j_times, fmt); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.j_times.clear();
                   for (const auto& s : split_list(v)) c.j_times.push_back(parse_double(key, s));
                 }});
    k.push_back({"controls.j_shots",
                 [](const ExperimentConfig& c) { return join(c.j_shots, [](int n) { return std::to_string(n); }); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.j_shots.clear();
                   for (const auto& s : split_list(v)) c.j_shots.push_back(static_cast<int>(parse_int(key, s)));
                 }});
    k.push_back({"controls.omegas", [](const ExperimentConfig& c) { return join(c.omegas, fmt); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.omegas.clear();
                   for (const auto& s : split_list(v)) c.omegas.push_back(parse_double(key, s));
                 }});
    k.push_back({"init.b_phase", [](const ExperimentConfig& c) { return to_string(c.init_b); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   try {
                     c.init_b = parse_initial_state(trim(v));
                   } catch (const std::exception& e) {
                     throw ConfigError(key + ": " + e.what());
                   }
                 }});
    k.push_back({"init.j_phase", [](const ExperimentConfig& c) { return to_string(c.init_j); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   try {
                     c.init_j = parse_initial_state(trim(v));
                   } catch (const std::exception& e) {
                     throw ConfigError(key + ": " + e.what());
                   }
                 }});
    k.push_back(score_real("score.alpha_b", &ScoreParams::alpha_b));
    k.push_back(score_real("score.beta_b", &ScoreParams::beta_b));
    k.push_back(score_real("score.beta_bj", &ScoreParams::beta_bj));
    k.push_back(score_real("score.lambda_b", &ScoreParams::lambda_b));
    k.push_back(score_real("score.alpha_j", &ScoreParams::alpha_j));
    k.push_back(score_real("score.beta_jj", &ScoreParams::beta_jj));
    k.push_back(score_real("score.eta_bj", &ScoreParams::eta_bj));
    k.push_back(score_real("score.lambda_j", &ScoreParams::lambda_j));
    k.push_back(score_real("score.epsilon", &ScoreParams::epsilon));
    k.push_back({"score.k_top", [](const ExperimentConfig& c) { return std::to_string(c.score.k_top); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.score.k_top = static_cast<int>(parse_int(key, v));
                 }});
    k.push_back({"score.binomial_eig", [](const ExperimentConfig& c) { return std::string(c.score.binomial_eig ? "true" : "false"); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   c.score.binomial_eig = parse_bool(key, v);
                 }});
    k.push_back({"fd.delta_b", [](const ExperimentConfig& c) { return fmt(c.fd.delta_b); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.fd.delta_b = parse_double(key, v); }});
    k.push_back({"fd.delta_j", [](const ExperimentConfig& c) { return fmt(c.fd.delta_j); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.fd.delta_j = parse_double(key, v); }});
    k.push_back({"aggregation.profile", [](const ExperimentConfig& c) { return to_string(c.profile); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "uniform") c.profile = ProfileKind::Uniform;
                   else if (t == "triangular") c.profile = ProfileKind::Triangular;
                   else throw ConfigError(key + ": expected uniform or triangular, got '" + v + "'");
                 }});
    k.push_back({"metrics.threshold",
                 [](const ExperimentConfig& c) { return c.threshold ? fmt(*c.threshold) : std::string("auto"); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   if (trim(v) == "auto") c.threshold.reset();
                   else c.threshold = parse_double(key, v);
                 }});
    k.push_back(real("benchmark.t_ref", &ExperimentConfig::bench_t_ref));
    k.push_back(integer("benchmark.n_ref", &ExperimentConfig::bench_n_ref));
    k.push_back({"run.seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
                 [](ExperimentConfig& c, const std::string& key, const std::string& v) {
                   const std::string t = trim(v);
                   std::uint64_t s = 0;
                   auto r = std::from_chars(t.data(), t.data() + t.size(), s);
                   if (r.ec != std::errc() || r.ptr != t.data() + t.size())
                     throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
                   c.seed = s;
                 }});
    return k;
  }();
  return keys;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

std::string to_string(ProfileKind k) { return k == ProfileKind::Uniform ? "uniform" : "triangular"; }

std::vector<Direction> ExperimentConfig::direction_list() const {
  std::vector<Direction> out;
  for (char ch : directions) {
    Direction d;
    if (ch == 'H' || ch == 'h') d = Direction::H;
    else if (ch == 'V' || ch == 'v') d = Direction::V;
    else if (ch == '+' || ch == ',' || ch == ' ') continue;
    else throw ConfigError("scan.directions: unexpected character '" + std::string(1, ch) + "'");
    if (std::find(out.begin(), out.end(), d) != out.end())
      throw ConfigError("scan.directions: direction listed twice");
    out.push_back(d);
  }
  if (out.empty()) throw ConfigError("scan.directions: no direction given");
  return out;
}

NvWindowConfig ExperimentConfig::window_config(const std::vector<double>& strain_rad) const {
  NvWindowConfig w;
  w.num_sites = window_size;
  w.gamma_abs = gamma_abs;
  w.b_ref = b_ref;
  w.angular_factor = angular_factor;
  w.strain = strain_rad;
  w.dipolar_exponent = dipolar_exponent;
  w.drive_form = drive;
  w.b_lo = b_lo;
  w.b_hi = b_hi;
  return w;
}

void ExperimentConfig::validate() const {
  require(height >= 8 && width >= 8, "grid.height and grid.width must be >= 8");
  require(window_size >= 1 && window_size <= std::min(height, width), "window.size must be in [1, min(H, W)]");
  require(ipow3(window_size) <= kMaxDim, "window.size too large for dense simulation");
  require(frames >= 1, "run.frames must be >= 1");
  require(k_b >= 0 && k_j >= 0 && k_b + k_j >= 1, "steps.k_b and steps.k_j must be >= 0 with a positive sum");
  require(stride_row >= 1 && stride_col >= 1, "scan strides must be >= 1");
  direction_list();
  require(gamma_abs > 0.0, "physics.gamma must be positive");
  require(b_amp > 0.0 && b_base > 0.0, "field.b_base and field.b_amp must be positive");
  require(b_lo < b_hi, "field.b_lo must be below field.b_hi");
  require(b_lo <= b_base && b_base + b_amp <= b_hi, "field box must contain both field levels");
  require(j_min >= 0.0 && j_min < j_max, "coupling range must satisfy 0 <= j_min < j_max");
  require(j_true >= j_min && j_true <= j_max, "coupling.j_true must lie in the search range");
  require(angular_factor > 0.0, "model.angular_factor must be positive");
  require(dipolar_exponent > 0.0, "model.dipolar_exponent must be positive");
  require(strain_std_hz >= 0.0, "model.strain_std must be >= 0");
  require(sigma_true >= 0.0 && sigma_dyn >= 0.0 && local_jitter >= 0.0 && j_jitter >= 0.0 && rejuv_sigma_j >= 0.0,
          "noise scales must be >= 0");
  require(resample_threshold >= 0.0 && resample_threshold <= 1.0, "resample.threshold must be in [0, 1]");
  require(n_local >= 1 && n_global >= 1, "particle counts must be >= 1");
  require(!b_times.empty() && b_times.size() == b_shots.size(), "controls.b_times and controls.b_shots must match");
  require(!j_times.empty() && j_times.size() == j_shots.size(), "controls.j_times and controls.j_shots must match");
  require(!omegas.empty(), "controls.omegas must not be empty");
  for (double t : b_times) require(t >= 0.0, "evolution times must be >= 0");
  for (double t : j_times) require(t >= 0.0, "evolution times must be >= 0");
  for (int n : b_shots) require(n >= 1, "shot counts must be >= 1");
  for (int n : j_shots) require(n >= 1, "shot counts must be >= 1");
  for (double o : omegas) require(o >= 0.0, "drive amplitudes must be >= 0");
  require(bench_t_ref > 0.0 && bench_n_ref >= 1, "benchmark reference must be positive");
  try {
    score.validate();
    fd.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& k : registry())
    if (key == k.name) {
      k.set(*this, key, value);
      return;
    }
  throw ConfigError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : registry()) out.emplace_back(k.name, k.get(*this));
  return out;
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.height = 24;
  c.width = 24;
  c.window_size = 3;
  c.frames = 8;
  c.n_local = 64;
  c.n_global = 32;
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override needs key=value: " + a);
    cfg.set(trim(a.substr(0, eq)), a.substr(eq + 1));
  }
}

std::vector<CandidateSpec> candidate_set(const ExperimentConfig& cfg, Phase phase, int num_sites) {
  std::vector<CandidateSpec> out;
  const bool b_phase = phase == Phase::B;
  const auto& times = b_phase ? cfg.b_times : cfg.j_times;
  const auto& shots = b_phase ? cfg.b_shots : cfg.j_shots;
  const bool pairs = !b_phase && num_sites >= 2;
  const int n_obs = pairs ? num_sites - 1 : num_sites;
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (double omega : cfg.omegas)
      for (int q = 1; q <= n_obs; ++q) {
        CandidateSpec c;
        c.control.time_s = times[ti];
        c.control.omega_hz = omega;
        c.control.observable = pairs ? ObservableSpec::pair(q) : ObservableSpec::single(q);
        c.control.n_shots = shots[ti];
        c.control.phase = phase;
        c.init = b_phase ? cfg.init_b : cfg.init_j;
        out.push_back(c);
      }
  return out;
}

}  // namespace nvqhl
