#include "nvqhl/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nvqhl {

void FdSteps::validate() const {
  if (!(delta_b > 0.0) || !(delta_j > 0.0)) throw ArgumentError("finite-difference steps must be positive");
}

namespace {

struct Evaluation {
  StateVector psi;
  double raw_p;
};

Evaluation evaluate(const WindowModel& model, const SparseObservable& obs, const LocalFieldVector& b,
                    double j_hz, const Control& u, InitialState init) {
  const Spectrum s = model.spectrum(b, j_hz, u.omega_hz);
  StateVector psi = s.evolve_state(model.initial_state(init), u.time_s);
  const double mu = obs.expectation(psi);
  return {std::move(psi), probability_from_expectation(mu).raw};
}

}  // namespace

double pure_state_qfi(const StateVector& centre, StateVector plus, StateVector minus,
                      double delta) {
  auto align = [&](StateVector& v) {
    const cplx ov = centre.dot(v);
    if (std::abs(ov) > 0.0) v *= std::conj(ov) / std::abs(ov);
  };
  align(plus);
  align(minus);
  const StateVector d = (plus - minus) / (2.0 * delta);
  const double q = 4.0 * (d.squaredNorm() - std::norm(centre.dot(d)));
  return std::max(q, 0.0);
}

FisherDiagnostics fisher_diagnostics(const WindowModel& model, const LocalFieldVector& b,
                                     double j_hz, const Control& u, InitialState init,
                                     const FdSteps& steps, bool with_qfi) {
  steps.validate();
  if (u.n_shots < 1) throw ArgumentError("control needs at least one shot");
  const int m = model.num_sites();
  const SparseObservable& obs = model.sparse_observable(u.observable);

  FisherDiagnostics fd;
  fd.f_b_diag.assign(m, 0.0);
  fd.f_bj_cross.assign(m, 0.0);
  fd.qfi_b_diag.assign(m, 0.0);
  fd.has_qfi = with_qfi;

  const Evaluation centre = evaluate(model, obs, b, j_hz, u, init);
  fd.leakage = std::clamp(1.0 - diag_expectation(centre.psi, model.sensing_projector()), 0.0, 1.0);

  std::vector<double> dp_db(m);
  for (int q = 0; q < m; ++q) {
    LocalFieldVector bp = b, bm = b;
    bp(q) += steps.delta_b;
    bm(q) -= steps.delta_b;
    const Evaluation ep = evaluate(model, obs, bp, j_hz, u, init);
    const Evaluation em = evaluate(model, obs, bm, j_hz, u, init);
    dp_db[q] = (ep.raw_p - em.raw_p) / (2.0 * steps.delta_b);
    if (with_qfi) fd.qfi_b_diag[q] = pure_state_qfi(centre.psi, ep.psi, em.psi, steps.delta_b);
  }
  const Evaluation jp = evaluate(model, obs, b, j_hz + steps.delta_j, u, init);
  const Evaluation jm = evaluate(model, obs, b, j_hz - steps.delta_j, u, init);
  const double dp_dj = (jp.raw_p - jm.raw_p) / (2.0 * steps.delta_j);
  if (with_qfi) {
    fd.qfi_j = pure_state_qfi(centre.psi, jp.psi, jm.psi, steps.delta_j);
    for (double v : fd.qfi_b_diag) fd.qfi_b_sum += v;
  }

  const double p = centre.raw_p;
  if (p <= kProbabilityFloor || p >= 1.0 - kProbabilityFloor) {
    fd.saturated = true;
    return fd;
  }
  const double scale = static_cast<double>(u.n_shots) / (p * (1.0 - p));
  for (int q = 0; q < m; ++q) {
    fd.f_b_diag[q] = scale * dp_db[q] * dp_db[q];
    fd.f_bj_cross[q] = scale * dp_db[q] * dp_dj;
    fd.f_b_sum += fd.f_b_diag[q];
  }
  fd.f_j = scale * dp_dj * dp_dj;
  return fd;
}

FisherDiagnostics cfi_diag(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init, const FdSteps& steps) {
  return fisher_diagnostics(model, b, j_hz, u, init, steps, false);
}

FisherDiagnostics qfi_diag(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init, const FdSteps& steps) {
  return fisher_diagnostics(model, b, j_hz, u, init, steps, true);
}

BenchmarkBounds benchmark_bounds(double qfi_prod_zero, double qfi_opt_zero, double qfi_prod_t,
                                 int n_ref, int num_sites) {
  if (!(qfi_prod_zero > 0.0) || !(qfi_prod_t > 0.0) || n_ref < 1 || num_sites < 1)
    throw ArgumentError("benchmark inputs must be positive");
  BenchmarkBounds out{};
  out.gain = qfi_opt_zero / qfi_prod_zero;
  out.eta_m = out.gain / num_sites;
  out.qfi_opt_t_extrapolated = qfi_prod_t * out.gain;
  out.sql_bound_hz = 1.0 / std::sqrt(n_ref * qfi_prod_t);
  out.ideal_bound_hz = 1.0 / std::sqrt(n_ref * out.qfi_opt_t_extrapolated);
  return out;
}

CouplingBenchmark coupling_benchmark(const WindowModel& model, const LocalFieldVector& b,
                                     double j_hz, double t_ref_s, int n_ref,
                                     const FdSteps& steps) {
  const int m = model.num_sites();
  if (m < 2) throw ArgumentError("coupling benchmark needs M >= 2 (no pair terms)");
  if (!(t_ref_s > 0.0) || n_ref < 1) throw ArgumentError("benchmark reference control must be positive");

  CouplingBenchmark out;
  out.num_sites = m;
  out.t_ref_s = t_ref_s;
  out.n_ref = n_ref;

  const RealOperator& g = model.dipolar_sum();
  const Eigen::VectorXd& psi = model.initial_state(InitialState::ProductRamsey);
  const Eigen::VectorXd g_psi = g * psi;
  const double mean = psi.dot(g_psi);
  out.generator_variance = g_psi.squaredNorm() - mean * mean;

  Eigen::SelfAdjointEigenSolver<RealOperator> solver(g);
  if (solver.info() != Eigen::Success) throw NumericError("coupling generator spectrum failed");
  const Eigen::Index n = solver.eigenvalues().size();
  out.spectral_gap = solver.eigenvalues()(n - 1) - solver.eigenvalues()(0);
  out.qfi_prod_zero = 4.0 * out.generator_variance;
  out.qfi_opt_zero = out.spectral_gap * out.spectral_gap;
  const double a2 = model.config().angular_factor * model.config().angular_factor;
  out.qfi_prod_zero_angular = a2 * out.qfi_prod_zero;
  out.qfi_opt_zero_angular = a2 * out.qfi_opt_zero;

  const Eigen::VectorXd opt =
      (solver.eigenvectors().col(0) + solver.eigenvectors().col(n - 1)) / std::sqrt(2.0);
  const Eigen::VectorXd g_opt = g * opt;
  const double opt_mean = opt.dot(g_opt);
  out.optimal_state_qfi = 4.0 * (g_opt.squaredNorm() - opt_mean * opt_mean);

  Control ref;
  ref.time_s = t_ref_s;
  ref.omega_hz = 0.0;
  ref.observable = ObservableSpec::pair(1);
  ref.n_shots = n_ref;
  ref.phase = Phase::J;
  out.qfi_prod_t = qfi_diag(model, b, j_hz, ref, InitialState::ProductRamsey, steps).qfi_j;

  if (out.qfi_prod_t > 0.0) {
    const BenchmarkBounds bb = benchmark_bounds(out.qfi_prod_zero, out.qfi_opt_zero, out.qfi_prod_t, n_ref, m);
    out.gain = bb.gain;
    out.eta_m = bb.eta_m;
    out.qfi_opt_t_extrapolated = bb.qfi_opt_t_extrapolated;
    out.sql_bound_hz = bb.sql_bound_hz;
    out.ideal_bound_hz = bb.ideal_bound_hz;
  } else {
    out.gain = out.qfi_opt_zero / out.qfi_prod_zero;
    out.eta_m = out.gain / m;
    out.sql_bound_hz = out.ideal_bound_hz = INFINITY;
  }
  return out;
}

double sql_field_bound(double gamma_abs, double t_s, double n_shots, int num_sites) {
  if (!(gamma_abs > 0.0) || !(t_s > 0.0) || !(n_shots > 0.0) || num_sites < 1)
    throw ArgumentError("sql_field_bound inputs must be positive");
  return 1.0 / (2.0 * std::numbers::pi * gamma_abs * t_s * std::sqrt(num_sites * n_shots));
}

}  // namespace nvqhl
