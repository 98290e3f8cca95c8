#pragma once

// Particle representation of the joint (window field, coupling J) posterior:
// pair weights, Bernoulli-approximated expected information gain, two-phase
// control scoring, binomial Bayes updates, marginals and particle moves.

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvqhl/metrology.hpp"

namespace nvqhl {

using Rng = std::mt19937_64;

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FieldBox {
  double lo = 45e-6;
  double hi = 60e-6;
};

struct CouplingRange {
  double lo = 0.0;
  double hi = 10e3;
};

struct LocalParticleSet {
  Eigen::MatrixXd particles;  // one row per particle, one column per window site
  Eigen::VectorXd weights;

  Eigen::Index size() const { return particles.rows(); }
  int num_sites() const { return static_cast<int>(particles.cols()); }
};

struct GlobalParticleSet {
  Eigen::VectorXd particles;  // Hz
  Eigen::VectorXd weights;

  Eigen::Index size() const { return particles.size(); }
};

/// Joint weights rho(i, j), stored row-major: index i * n_global + j.
struct PairWeights {
  Eigen::Index n_local = 0;
  Eigen::Index n_global = 0;
  Eigen::VectorXd rho;

  double operator()(Eigen::Index i, Eigen::Index j) const { return rho(i * n_global + j); }
  static PairWeights product(const Eigen::VectorXd& w, const Eigen::VectorXd& v);
};

/// p(i, j) for one candidate control, same layout as PairWeights.
struct ProbabilityTable {
  Eigen::Index n_local = 0;
  Eigen::Index n_global = 0;
  Eigen::VectorXd p;
};

struct ScoreParams {
  double alpha_b = 1.0;
  double beta_b = 0.1;
  double beta_bj = 0.05;
  double lambda_b = 10.0;
  double alpha_j = 1.0;
  double beta_jj = 0.2;
  double eta_bj = 0.05;
  double lambda_j = 10.0;
  double epsilon = 1e-12;
  int k_top = 5;
  bool binomial_eig = false;

  void validate() const;
};

inline constexpr double kWeightTolerance = 1e-9;

double entropy(const Eigen::VectorXd& w);
double effective_sample_size(const Eigen::VectorXd& w);

double mixture_probability(const PairWeights& rho, const ProbabilityTable& table);

/// Single-shot Bernoulli EIG in nats.
double expected_information_gain(const PairWeights& rho, const ProbabilityTable& table);

/// Mutual information between the pair index and a Binomial(n_shots) count.
double expected_information_gain_binomial(const PairWeights& rho, const ProbabilityTable& table,
                                          int n_shots);

double phase_score(double eig, const FisherDiagnostics& fd, Phase phase, const ScoreParams& params);

struct Candidate {
  Control control;
  InitialState init = InitialState::ProductRamsey;
  const ProbabilityTable* table = nullptr;
};

struct Selection {
  std::size_t index = 0;  // into the candidate span
  double eig = 0.0;
  double score = 0.0;
  FisherDiagnostics diagnostics;
  std::vector<double> all_eig;
  std::vector<std::size_t> top;  // indices that reached the scoring stage
};

using DiagnosticsFn = std::function<FisherDiagnostics(const Candidate&)>;

/// Ranks every candidate by EIG, keeps the k_top best (ties by list order),
/// scores them with `diagnose` and returns the first argmax.
Selection select_control(std::span<const Candidate> candidates, const PairWeights& rho,
                         Phase phase, const ScoreParams& params, const DiagnosticsFn& diagnose);

/// rho'(i, j) ~ rho(i, j) p^z (1 - p)^(n - z), evaluated in log space.
PairWeights update_pair_weights(const PairWeights& rho, const ProbabilityTable& table, int z,
                                int n_shots);

struct Marginals {
  Eigen::VectorXd local;   // w_i
  Eigen::VectorXd global;  // v_j
};
Marginals marginals(const PairWeights& rho);

struct PosteriorSummary {
  LocalFieldVector b_mean;
  Eigen::VectorXd b_std;
  double j_mean = 0.0;
  double j_std = 0.0;
};
PosteriorSummary posterior_means(const LocalParticleSet& local, const GlobalParticleSet& global);

/// Systematic resampling to uniform weights when ESS < threshold_frac * N.
bool resample_if_degenerate(LocalParticleSet& set, double threshold_frac, Rng& rng);
bool resample_if_degenerate(GlobalParticleSet& set, double threshold_frac, Rng& rng);

/// Gaussian jitter with box / range projection; weights untouched.
void rejuvenate(LocalParticleSet& local, double sigma_local, const FieldBox& box,
                GlobalParticleSet& global, double sigma_j, const CouplingRange& range, Rng& rng);

void validate_weights(const Eigen::VectorXd& w, const char* what);

}  // namespace nvqhl
