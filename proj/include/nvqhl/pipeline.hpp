#pragma once

// Sequential reconstruction loop: scan plan, per-window adaptive inference,
// aggregation into a global map, and frame-to-frame propagation.

#include <functional>
#include <string>
#include <vector>

#include "nvqhl/config.hpp"

namespace nvqhl {

struct ScanPlan {
  std::vector<Direction> directions;
  int stride_row = 2;
  int stride_col = 2;
  std::vector<WindowIndex> windows;  // all windows of the first direction, then the next
};

/// Rows (columns for V) 0, stride, ...; offsets 0, stride, ..., with W - M always included.
ScanPlan enumerate_windows(int height, int width, int window_size, int stride_row, int stride_col,
                           const std::vector<Direction>& directions);

/// Per-site coverage count of a plan.
Eigen::MatrixXi coverage(const ScanPlan& plan, int height, int width);

struct AggregationProfile {
  ProfileKind kind = ProfileKind::Triangular;
  std::vector<double> weights;  // per window position, max 1

  static AggregationProfile make(ProfileKind kind, int window_size);
};

struct StepRecord {
  int k = 0;  // 1-based
  Control control;
  InitialState init = InitialState::ProductRamsey;
  int z = 0;
  double eig = 0.0;
  double score = 0.0;
  FisherDiagnostics diagnostics;
};

struct WindowRecord {
  int window_id = 0;
  WindowIndex window;
  std::vector<StepRecord> steps;
  PosteriorSummary posterior;
  bool resampled_local = false;
  bool resampled_global = false;
  long clamped_entries = 0;
};

struct FrameState {
  FieldMap map_estimate;
  GlobalParticleSet global;
  std::vector<LocalParticleSet> local_sets;  // one per plan window, persistent across frames
};

/// Everything a window needs besides its particles.
struct WindowContext {
  const ExperimentConfig* cfg = nullptr;
  const WindowModel* model = nullptr;
  const TruthSequence* truth = nullptr;
  std::vector<CandidateSpec> candidates;  // B-phase entries first, then J-phase
  std::size_t n_b_candidates = 0;
  int frame = 0;
};

/// The local prior at frame 0: sitewise Bernoulli over the two levels plus Gaussian jitter.
LocalParticleSet initial_local_set(const ExperimentConfig& cfg, int window_id);
/// Evenly spaced J particles over the search range, uniform weights.
GlobalParticleSet initial_global_set(const ExperimentConfig& cfg);

/// Runs K adaptive steps on one window, then writes the local posterior
/// (resampled and rejuvenated) back and replaces the global marginal.
WindowRecord process_window(int window_id, const WindowIndex& window, FrameState& state,
                            const WindowContext& ctx);

/// Profile-weighted average of window estimates; uncovered sites keep `previous`.
FieldMap aggregate(const std::vector<WindowRecord>& records, const AggregationProfile& profile,
                   const FieldMap& previous);

/// Gaussian diffusion of every local and global particle with box / range clamping.
void propagate_frame(FrameState& state, double sigma_b_dyn, double sigma_j, const FieldBox& box,
                     const CouplingRange& range, Rng& rng);

struct FrameSummary {
  int frame = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double dice = 0.0;
  double iou = 0.0;
  double j_mean = 0.0;
  double j_std = 0.0;
  double j_bias = 0.0;
};

struct ControlLogEntry {
  int frame = 0;
  int window_id = 0;
  Direction direction = Direction::H;
  int k = 0;
  Phase phase = Phase::B;
  double time_s = 0.0;
  double omega_hz = 0.0;
  std::string observable;
  InitialState init = InitialState::ProductRamsey;
  double eig = 0.0;
  double score = 0.0;
  double f_b_sum = 0.0;
  double f_j = 0.0;
  double leakage = 0.0;
  int z = 0;
  int n_shots = 0;
};

struct RunResult {
  ExperimentConfig config;
  TruthSequence truth;
  std::vector<double> strain_rad;
  std::vector<FieldMap> reconstruction;
  std::vector<FrameSummary> summaries;
  std::vector<ControlLogEntry> log;
  long clamped_entries = 0;
  std::size_t windows_per_frame = 0;
  bool has_benchmark = false;
  CouplingBenchmark benchmark;
};

/// Per-site strain, drawn once per experiment for each window position.
std::vector<double> draw_strain(const ExperimentConfig& cfg);

using ProgressFn = std::function<void(int frame, const FrameSummary&)>;

RunResult run_experiment(const ExperimentConfig& cfg, const TruthSequence& truth,
                         const ProgressFn& progress = {});
RunResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

TruthSequence make_truth(const ExperimentConfig& cfg);

}  // namespace nvqhl
