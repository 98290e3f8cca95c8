#pragma once

// Experiment configuration: flat `section.key = value` text files, dotted
// overrides, validation, and the candidate control set derived from it.

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nvqhl/kernels.hpp"
#include "nvqhl/world.hpp"

namespace nvqhl {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class ProfileKind { Uniform, Triangular };
std::string to_string(ProfileKind k);

struct ExperimentConfig {
  // grid and schedule
  int height = 60;
  int width = 60;
  int window_size = 6;
  int frames = 16;
  int k_b = 6;
  int k_j = 6;
  int stride_row = 2;
  int stride_col = 2;
  std::string directions = "HV";  // processing order, e.g. "HV", "VH", "H"

  // physics
  double gamma_abs = 28.025e9;
  double b_base = 50e-6;
  double b_amp = 5e-6;
  double b_ref = 50e-6;
  double b_lo = 45e-6;
  double b_hi = 60e-6;
  double j_true = 5e3;
  double j_min = 0.0;
  double j_max = 10e3;
  double angular_factor = 2.0 * std::numbers::pi;
  double dipolar_exponent = 3.0;
  double strain_std_hz = 5e3;  // per-site transverse strain, Hz (scaled by angular_factor)
  DriveForm drive = DriveForm::EffectiveX;

  // noise and particle moves
  double sigma_true = 50e-9;
  double sigma_dyn = 20e-9;
  double local_jitter = 100e-9;  // frame-0 prior spread and per-window rejuvenation
  double j_jitter = 1e3;
  double rejuv_sigma_j = 100.0;
  double resample_threshold = 0.5;
  int n_local = 256;
  int n_global = 256;

  // controls
  std::vector<double> b_times = {4e-6, 8e-6, 11e-6};
  std::vector<int> b_shots = {10000, 3000, 300};
  std::vector<double> j_times = {100e-6, 157e-6};
  std::vector<int> j_shots = {300, 300};
  std::vector<double> omegas = {0.0, 5e3};
  InitialState init_b = InitialState::ProductRamsey;
  InitialState init_j = InitialState::BellPairs;

  ScoreParams score;
  FdSteps fd;
  ProfileKind profile = ProfileKind::Triangular;
  std::optional<double> threshold;  // Dice/IoU; default midpoint of the two levels

  // coupling benchmark
  double bench_t_ref = 157e-6;
  int bench_n_ref = 300;

  std::uint64_t seed = 20240521;

  double dice_threshold() const { return threshold.value_or(b_base + b_amp / 2.0); }
  std::vector<Direction> direction_list() const;
  NvWindowConfig window_config(const std::vector<double>& strain_rad) const;

  void validate() const;

  /// Applies one `key = value` assignment; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in declaration order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Full-scale values: 60 x 60 grid, M = 6, 16 frames, 256 x 256 particles.
ExperimentConfig default_config();
/// The reduced desk-scale experiment (24 x 24, M = 3, 8 frames, 64 x 32 particles).
ExperimentConfig desk_config();

ExperimentConfig load_config(const std::string& path, ExperimentConfig base = default_config());
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& assignments);

/// B-phase then J-phase candidates; J-phase falls back to single-site readout when M = 1.
std::vector<CandidateSpec> candidate_set(const ExperimentConfig& cfg, Phase phase, int num_sites);

}  // namespace nvqhl
