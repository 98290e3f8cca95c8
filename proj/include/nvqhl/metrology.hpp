#pragma once

// Classical / quantum Fisher information, leakage, and the coupling
// benchmark (product-state vs ideal-state QFI for J).

#include <vector>

#include "nvqhl/nv_model.hpp"

namespace nvqhl {

struct FdSteps {
  double delta_b = 10e-9;  // T
  double delta_j = 1.0;    // Hz
  void validate() const;
};

struct FisherDiagnostics {
  std::vector<double> f_b_diag;    // per-site CFI, T^-2 (times shots)
  double f_b_sum = 0.0;
  double f_j = 0.0;                // Hz^-2 (times shots)
  std::vector<double> f_bj_cross;  // per-site F_{B_q J}
  double qfi_b_sum = 0.0;          // per shot
  double qfi_j = 0.0;
  std::vector<double> qfi_b_diag;
  double leakage = 0.0;
  bool saturated = false;          // p pinned at 0 or 1 at the evaluation point
  bool has_qfi = false;
};

/// CFI (and optionally QFI) from one set of central-difference evaluations.
/// Each call performs 2 * (M + 1) + 1 Hamiltonian diagonalisations.
FisherDiagnostics fisher_diagnostics(const WindowModel& model, const LocalFieldVector& b,
                                     double j_hz, const Control& u, InitialState init,
                                     const FdSteps& steps, bool with_qfi);

FisherDiagnostics cfi_diag(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init, const FdSteps& steps = {});
FisherDiagnostics qfi_diag(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init, const FdSteps& steps = {});

/// 4 Re[<d psi|d psi> - |<psi|d psi>|^2] from a centre state and its
/// +/- delta neighbours. Neighbours are phase-aligned to the centre first.
double pure_state_qfi(const StateVector& centre, StateVector plus, StateVector minus,
                      double delta);

struct CouplingBenchmark {
  int num_sites = 0;
  // zero-time coefficients of the bare dipolar sum G = sum V_qr / |q-r|^p
  double generator_variance = 0.0;  // Var_{ProductRamsey}(G)
  double spectral_gap = 0.0;        // lambda_max(G) - lambda_min(G)
  double qfi_prod_zero = 0.0;       // 4 Var(G)
  double qfi_opt_zero = 0.0;        // gap^2
  // the same in angular units (generator angular_factor * G)
  double qfi_prod_zero_angular = 0.0;
  double qfi_opt_zero_angular = 0.0;
  double optimal_state_qfi = 0.0;   // 4 Var of G on the extreme-eigenvector superposition
  double gain = 0.0;
  double eta_m = 0.0;
  double t_ref_s = 0.0;
  int n_ref = 0;
  double qfi_prod_t = 0.0;          // Hz^-2 per shot
  double qfi_opt_t_extrapolated = 0.0;
  double sql_bound_hz = 0.0;
  double ideal_bound_hz = 0.0;
};

struct BenchmarkBounds {
  double gain, eta_m, qfi_opt_t_extrapolated, sql_bound_hz, ideal_bound_hz;
};

/// The arithmetic shared by every benchmark report.
BenchmarkBounds benchmark_bounds(double qfi_prod_zero, double qfi_opt_zero, double qfi_prod_t,
                                 int n_ref, int num_sites);

CouplingBenchmark coupling_benchmark(const WindowModel& model, const LocalFieldVector& b,
                                     double j_hz, double t_ref_s, int n_ref,
                                     const FdSteps& steps = {});

/// 1 / (2 pi gamma T sqrt(M N)), tesla.
double sql_field_bound(double gamma_abs, double t_s, double n_shots, int num_sites);

}  // namespace nvqhl
