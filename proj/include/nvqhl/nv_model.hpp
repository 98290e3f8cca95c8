#pragma once

// Local NV window model: spin-1 many-body Hamiltonian, initial states,
// Ramsey-type readout observables, success probabilities and leakage.

#include <numbers>
#include <string>
#include <vector>

#include "nvqhl/quantum_core.hpp"

namespace nvqhl {

enum class DriveForm { EffectiveX, SpinX };
enum class Phase { B, J };
enum class InitialState { ProductRamsey, BellPairs };

std::string to_string(DriveForm d);
std::string to_string(Phase p);
std::string to_string(InitialState s);
DriveForm parse_drive_form(const std::string& s);
InitialState parse_initial_state(const std::string& s);

struct ObservableSpec {
  enum class Kind { SingleSite, AdjacentPair };
  Kind kind = Kind::SingleSite;
  int site = 1;  // 1-based; a pair covers (site, site + 1)

  static ObservableSpec single(int q) { return {Kind::SingleSite, q}; }
  static ObservableSpec pair(int q) { return {Kind::AdjacentPair, q}; }
  std::string label() const;  // "Z3", "ZZ1" (log naming)
  bool operator==(const ObservableSpec&) const = default;
};

struct Control {
  double time_s = 0.0;
  double omega_hz = 0.0;
  ObservableSpec observable;
  int n_shots = 1;
  Phase phase = Phase::B;
};

using LocalFieldVector = Eigen::VectorXd;  // tesla, one entry per window site

struct NvWindowConfig {
  int num_sites = 6;
  double gamma_abs = 28.025e9;  // Hz/T
  double b_ref = 50e-6;         // T
  double angular_factor = 2.0 * std::numbers::pi;
  std::vector<double> strain;  // rad/s per site; empty means zero strain
  double dipolar_exponent = 3.0;
  DriveForm drive_form = DriveForm::EffectiveX;
  double b_lo = 45e-6;
  double b_hi = 60e-6;

  void validate() const;
};

inline constexpr double kProbabilityFloor = 1e-12;

struct Spectrum;

/// Nonzero entries of a real symmetric observable; the readout operators
/// here have at most one nonzero per row.
struct SparseObservable {
  std::vector<Eigen::Index> row, col;
  std::vector<double> val;

  static SparseObservable from(const RealOperator& o);
  double expectation(const StateVector& psi) const;
};

/// Operators and states shared by every evaluation on one window geometry.
/// Every window Hamiltonian in this model is real symmetric, so the hot
/// path works on real matrices.
class WindowModel {
 public:
  explicit WindowModel(NvWindowConfig cfg);

  const NvWindowConfig& config() const { return cfg_; }
  int num_sites() const { return cfg_.num_sites; }
  Eigen::Index dim() const { return dim_; }

  RealOperator hamiltonian(const LocalFieldVector& b, double j_hz, double omega_hz) const;
  /// Diagonalised Hamiltonian. Without drive the total-m parity is conserved
  /// and the two parity blocks are solved separately.
  Spectrum spectrum(const LocalFieldVector& b, double j_hz, double omega_hz) const;
  const std::vector<std::vector<Eigen::Index>>& parity_blocks() const { return parity_blocks_; }

  /// d H / d J in angular units: angular_factor * sum_{q<r} V_qr / |q-r|^p.
  RealOperator coupling_derivative() const { return cfg_.angular_factor * dipolar_; }
  /// Bare sum_{q<r} V_qr / |q-r|^p.
  const RealOperator& dipolar_sum() const { return dipolar_; }
  /// d H / d b_q in angular units (diagonal).
  Eigen::VectorXd field_derivative_diag(int site) const;

  const RealOperator& observable(const ObservableSpec& spec) const;
  const SparseObservable& sparse_observable(const ObservableSpec& spec) const;
  const Eigen::VectorXd& initial_state(InitialState s) const;
  const Eigen::VectorXd& sensing_projector() const { return sense_diag_; }

 private:
  NvWindowConfig cfg_;
  Eigen::Index dim_;
  std::vector<Eigen::VectorXd> p_plus_diag_, p_minus_diag_;
  RealOperator strain_;
  RealOperator drive_;
  RealOperator dipolar_;
  std::vector<RealOperator> single_obs_, pair_obs_;
  std::vector<SparseObservable> single_sparse_, pair_sparse_;
  Eigen::VectorXd ramsey_, bell_;
  Eigen::VectorXd sense_diag_;
  std::vector<std::vector<Eigen::Index>> parity_blocks_;
};

/// Real eigendecomposition of a window Hamiltonian with cached propagation.
struct Spectrum {
  Eigen::VectorXd values;
  RealOperator vectors;

  static Spectrum of(const RealOperator& h);
  /// Block-diagonal solve; `blocks` must partition the basis and h must not couple them.
  static Spectrum of_blocks(const RealOperator& h, const std::vector<std::vector<Eigen::Index>>& blocks);
  /// Eigenbasis coefficients of a real initial state.
  Eigen::VectorXd project(const Eigen::VectorXd& psi0) const { return vectors.transpose() * psi0; }
  StateVector evolve_coeffs(const Eigen::VectorXd& c, double t) const;
  StateVector evolve_state(const Eigen::VectorXd& psi0, double t) const { return evolve_coeffs(project(psi0), t); }
};

/// <psi|O|psi> for real symmetric O (no imaginary residue by construction).
double real_expectation(const StateVector& psi, const RealOperator& o);
double diag_expectation(const StateVector& psi, const Eigen::VectorXd& diag);

struct ProbabilityResult {
  double p = 0.5;    // clamped to [kProbabilityFloor, 1 - kProbabilityFloor]
  double raw = 0.5;  // (1 + mu) / 2 before clamping
  bool clamped() const { return p != raw; }
};

/// Maps an expectation value to the clamped success probability; throws
/// NumericError if the pre-clamp value leaves [-1e-9, 1 + 1e-9].
ProbabilityResult probability_from_expectation(double mu);

Operator build_hamiltonian(const NvWindowConfig& cfg, const LocalFieldVector& b, double j_hz,
                           double omega_hz);
StateVector initial_state(InitialState spec, int num_sites);
Operator observable_matrix(const ObservableSpec& spec, int num_sites);

StateVector evolved_state(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                          const Control& u, InitialState init);
ProbabilityResult evaluate_probability(const WindowModel& model, const LocalFieldVector& b,
                                       double j_hz, const Control& u, InitialState init);
double success_probability(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init);
double leakage(const WindowModel& model, const LocalFieldVector& b, double j_hz,
               const Control& u, InitialState init);

}  // namespace nvqhl
