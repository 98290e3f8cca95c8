#pragma once

// Simulated device: maze-like ground truth, Gaussian temporal drift, and
// binomial measurement sampling through the same likelihood the estimator uses.

#include <cstdint>
#include <utility>
#include <vector>

#include "nvqhl/inference.hpp"

namespace nvqhl {

/// Independent seeded substreams derived from one master seed.
enum class Stream : std::uint64_t {
  TruthGen = 1,
  TruthDrift = 2,
  Measurement = 3,
  ParticleInit = 4,
  Rejuvenation = 5,
  Propagation = 6,
  Strain = 7,
};

std::uint64_t mix_seed(std::uint64_t master, Stream s, std::uint64_t a = 0, std::uint64_t b = 0,
                       std::uint64_t c = 0);
Rng stream_rng(std::uint64_t master, Stream s, std::uint64_t a = 0, std::uint64_t b = 0,
               std::uint64_t c = 0);

struct FieldMap {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd values;  // tesla, (row, col)

  FieldMap() = default;
  FieldMap(int h, int w, double fill = 0.0);
  double operator()(int y, int x) const { return values(y, x); }
  double& operator()(int y, int x) { return values(y, x); }
  bool operator==(const FieldMap& o) const {
    return height == o.height && width == o.width && values == o.values;
  }
};

struct TruthSequence {
  std::vector<FieldMap> frames;
  std::vector<FieldMap> increments;  // frames[t+1] = frames[t] + increments[t]
  double j_true_hz = 5e3;
  std::uint64_t seed = 0;
  double sigma_true = 50e-9;
  double b_base = 50e-6;
  double b_amp = 5e-6;
};

enum class Direction { H, V };

struct WindowIndex {
  Direction direction = Direction::H;
  std::vector<std::pair<int, int>> sites;  // (row, col), ordered along the scan

  int size() const { return static_cast<int>(sites.size()); }
  /// Throws ArgumentError unless the sites are in-bounds and contiguous along one row / column.
  void validate(int height, int width) const;
};

/// Recursive-backtracker maze on a ceil(H/4) x ceil(W/4) cell grid, upscaled
/// with 2-pixel corridors. Corridors carry b_base + b_amp, walls b_base.
FieldMap generate_maze_field(int height, int width, double b_base, double b_amp, std::uint64_t seed);

FieldMap evolve_truth(const FieldMap& b, double sigma_true, Rng& rng);

TruthSequence generate_truth(int height, int width, int frames, double b_base, double b_amp,
                             double sigma_true, double j_true_hz, std::uint64_t seed);

LocalFieldVector extract_window(const FieldMap& b, const WindowIndex& w);

/// z ~ Binomial(n_shots, p(b_true, J_true; u)).
int measure(const TruthSequence& truth, int frame, const WindowIndex& w, const Control& u,
            InitialState init, const WindowModel& model, Rng& rng);

}  // namespace nvqhl
