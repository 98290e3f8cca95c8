#include "nvqhl/selftest.hpp"

#include <cmath>
#include <sstream>

#include "nvqhl/pipeline.hpp"
#include "nvqhl/report.hpp"

namespace nvqhl {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult ramsey_fringe() {
  NvWindowConfig cfg;
  cfg.num_sites = 1;
  const WindowModel model(cfg);
  double worst = 0.0;
  for (int a = 0; a < 10; ++a)
    for (int c = 0; c < 10; ++c) {
      const double b = 45e-6 + 15e-6 * a / 9.0;
      const double t = 157e-6 * c / 9.0;
      Control u{t, 0.0, ObservableSpec::single(1), 1, Phase::B};
      const double p = success_probability(model, LocalFieldVector::Constant(1, b), 0.0, u, InitialState::ProductRamsey);
      const double ref = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * cfg.gamma_abs * (b - cfg.b_ref) * t));
      worst = std::max(worst, std::abs(p - std::clamp(ref, kProbabilityFloor, 1.0 - kProbabilityFloor)));
    }
  return {"single-site Ramsey fringe", worst <= 1e-9, "max |dp| = " + sci(worst)};
}

CheckResult unitarity() {
  NvWindowConfig cfg;
  cfg.num_sites = 2;
  cfg.strain = {2e4, -1.5e4};
  Rng rng(7);
  std::uniform_real_distribution<double> bu(45e-6, 60e-6), ju(0.0, 10e3), tu(0.0, 157e-6);
  double worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    LocalFieldVector b(2);
    b << bu(rng), bu(rng);
    const Operator h = build_hamiltonian(cfg, b, ju(rng), 5e3);
    const Operator u = evolve(hermitian_eigen(h), tu(rng));
    worst = std::max(worst, (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff());
  }
  return {"propagator unitarity", worst <= 1e-9, "max |U^dag U - I| = " + sci(worst)};
}

CheckResult bayes_update() {
  PairWeights rho{1, 2, Eigen::Vector2d(0.5, 0.5)};
  ProbabilityTable t{1, 2, Eigen::Vector2d(0.9, 0.1)};
  const PairWeights post = update_pair_weights(rho, t, 1, 1);
  const double err = std::max(std::abs(post.rho(0) - 0.9), std::abs(post.rho(1) - 0.1));
  return {"one-shot Bayes update", err <= 1e-12, "error = " + sci(err)};
}

CheckResult eig_bounds() {
  PairWeights rho{1, 2, Eigen::Vector2d(0.5, 0.5)};
  ProbabilityTable perfect{1, 2, Eigen::Vector2d(0.0, 1.0)};
  ProbabilityTable flat{1, 2, Eigen::Vector2d(0.3, 0.3)};
  const double e1 = expected_information_gain(rho, perfect);
  const double e0 = expected_information_gain(rho, flat);
  const bool ok = std::abs(e1 - std::log(2.0)) <= 1e-12 && std::abs(e0) <= 1e-12;
  return {"EIG perfect/flat tables", ok, "EIG = " + sci(e1) + ", " + sci(e0)};
}

CheckResult benchmark_arithmetic() {
  const BenchmarkBounds b = benchmark_bounds(59.47, 474.51, 6.199e-7, 300, 6);
  const bool ok = std::abs(b.sql_bound_hz - 73.3) <= 0.05 && std::abs(b.gain - 7.98) <= 0.005 &&
                  std::abs(b.eta_m - 1.33) <= 0.005 && std::abs(b.ideal_bound_hz - 26.0) <= 0.05;
  return {"coupling benchmark arithmetic", ok,
          "sql = " + format_number(b.sql_bound_hz) + " Hz, gain = " + format_number(b.gain)};
}

CheckResult scan_plan() {
  const ScanPlan p = enumerate_windows(60, 60, 6, 2, 2, {Direction::H, Direction::V});
  return {"full-scale scan plan size", p.windows.size() == 1680, std::to_string(p.windows.size()) + " windows"};
}

CheckResult maze_levels() {
  const FieldMap m = generate_maze_field(24, 24, 50e-6, 5e-6, 1);
  bool ok = true;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) ok = ok && (m(y, x) == 50e-6 || m(y, x) == 55e-6);
  return {"maze field levels", ok, ok ? "binary" : "unexpected value"};
}

CheckResult config_round_trip() {
  ExperimentConfig a = default_config();
  ExperimentConfig b = desk_config();
  for (const auto& [k, v] : a.entries()) b.set(k, v);
  const bool ok = a.entries() == b.entries();
  a.validate();
  return {"config key round trip", ok, std::to_string(a.entries().size()) + " keys"};
}

}  // namespace

std::vector<CheckResult> run_self_tests() {
  std::vector<CheckResult> out;
  for (auto fn : {ramsey_fringe, unitarity, bayes_update, eig_bounds, benchmark_arithmetic, scan_plan, maze_levels,
                  config_round_trip}) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

}  // namespace nvqhl
