#include <doctest.h>

#include <numbers>

#include "nvqhl/metrology.hpp"

using namespace nvqhl;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGamma = 28.025e9;

WindowModel one_site() {
  NvWindowConfig c;
  c.num_sites = 1;
  return WindowModel(c);
}

// field where 2 pi gamma (b - b_ref) T = pi / 2, so p = 1/2
double fringe_field(double t) { return 50e-6 + 0.25 / (kGamma * t); }

}  // namespace

TEST_SUITE("metrology") {

TEST_CASE("single-spin CFI at the fringe point") {
  const WindowModel model = one_site();
  const double t = 8e-6;
  const Control u{t, 0.0, ObservableSpec::single(1), 3000, Phase::B};
  const LocalFieldVector b = LocalFieldVector::Constant(1, fringe_field(t));
  const FisherDiagnostics fd = cfi_diag(model, b, 0.0, u, InitialState::ProductRamsey);
  // p = (1 + cos phi)/2, dp/dB = -sin(phi) pi gamma T, p(1-p) = 1/4 at phi = pi/2
  const double dp = kPi * kGamma * t;
  const double analytic = 3000 * dp * dp / 0.25;
  CHECK(fd.f_b_sum == doctest::Approx(analytic).epsilon(1e-3));
  CHECK(analytic == doctest::Approx(3000 * std::pow(2 * kPi * kGamma * t, 2)).epsilon(1e-12));
  CHECK(fd.f_j == 0.0);
  CHECK_FALSE(fd.saturated);
}

TEST_CASE("CFI is linear in shots") {
  NvWindowConfig c;
  c.num_sites = 2;
  c.strain = {1e4, -2e4};
  const WindowModel model(c);
  LocalFieldVector b(2);
  b << 51e-6, 54e-6;
  Control u{100e-6, 5e3, ObservableSpec::pair(1), 300, Phase::J};
  const FisherDiagnostics a = cfi_diag(model, b, 4e3, u, InitialState::BellPairs);
  u.n_shots = 600;
  const FisherDiagnostics d = cfi_diag(model, b, 4e3, u, InitialState::BellPairs);
  CHECK(d.f_j == 2.0 * a.f_j);
  for (int q = 0; q < 2; ++q) {
    CHECK(d.f_b_diag[q] == 2.0 * a.f_b_diag[q]);
    CHECK(a.f_b_diag[q] >= 0.0);
  }
  CHECK(a.f_j > 0.0);
}

TEST_CASE("single-spin QFI and Richardson halving") {
  const WindowModel model = one_site();
  for (double t : {4e-6, 8e-6, 11e-6}) {
    const Control u{t, 0.0, ObservableSpec::single(1), 1, Phase::B};
    const LocalFieldVector b = LocalFieldVector::Constant(1, 53e-6);
    const FisherDiagnostics fd = qfi_diag(model, b, 0.0, u, InitialState::ProductRamsey);
    const double analytic = std::pow(2 * kPi * kGamma * t, 2);
    CHECK(fd.qfi_b_sum == doctest::Approx(analytic).epsilon(1e-3));
    const FisherDiagnostics half = qfi_diag(model, b, 0.0, u, InitialState::ProductRamsey, FdSteps{5e-9, 0.5});
    CHECK(half.qfi_b_sum == doctest::Approx(fd.qfi_b_sum).epsilon(1e-3));
  }
}

TEST_CASE("QFI vanishes at T = 0 and dominates CFI per shot") {
  NvWindowConfig c;
  c.num_sites = 2;
  const WindowModel model(c);
  LocalFieldVector b(2);
  b << 50.2e-6, 55e-6;
  const Control zero{0.0, 0.0, ObservableSpec::pair(1), 10, Phase::J};
  const FisherDiagnostics z = qfi_diag(model, b, 5e3, zero, InitialState::BellPairs);
  CHECK(z.qfi_b_sum <= 1e-9);  // round-off only; QFI_B is ~1e13 at 4 us
  CHECK(z.qfi_j <= 1e-20);
  for (double t : {4e-6, 11e-6, 100e-6}) {
    const Control u{t, 0.0, ObservableSpec::single(1), 10, Phase::B};
    const FisherDiagnostics fd = qfi_diag(model, b, 5e3, u, InitialState::ProductRamsey);
    for (int q = 0; q < 2; ++q) CHECK(fd.qfi_b_diag[q] >= fd.f_b_diag[q] / 10 - 1e-6 * fd.qfi_b_diag[q]);
    CHECK(fd.qfi_j >= fd.f_j / 10 - 1e-6 * fd.qfi_j);
  }
}

TEST_CASE("phase alignment in state differencing") {
  StateVector c(2), p(2), m(2);
  c << 1, 0;
  p << std::exp(cplx(0, 0.3)), 0;
  m << std::exp(cplx(0, -1.1)), 0;
  // pure global phase: no information
  CHECK(pure_state_qfi(c, p, m, 1e-3) < 1e-12);
}

TEST_CASE("benchmark arithmetic") {
  const BenchmarkBounds b = benchmark_bounds(59.47, 474.51, 6.199e-7, 300, 6);
  CHECK(b.sql_bound_hz == doctest::Approx(73.3).epsilon(0.05 / 73.3));
  CHECK(b.gain == doctest::Approx(7.98).epsilon(0.005 / 7.98));
  CHECK(b.eta_m == doctest::Approx(1.33).epsilon(0.005 / 1.33));
  CHECK(b.ideal_bound_hz == doctest::Approx(26.0).epsilon(0.05 / 26.0));
  CHECK(b.sql_bound_hz * std::sqrt(300 * 6.199e-7) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(benchmark_bounds(0.0, 1.0, 1.0, 300, 6), ArgumentError);
}

TEST_CASE("coupling benchmark at small windows") {
  NvWindowConfig c;
  c.num_sites = 1;
  CHECK_THROWS_AS(coupling_benchmark(WindowModel(c), LocalFieldVector::Constant(1, 50e-6), 5e3, 157e-6, 300),
                  ArgumentError);
  for (int m : {2, 3, 4}) {
    c.num_sites = m;
    const WindowModel model(c);
    const CouplingBenchmark bm = coupling_benchmark(model, LocalFieldVector::Constant(m, 50e-6), 5e3, 157e-6, 300);
    CHECK(bm.gain >= 1.0);
    CHECK(bm.eta_m == doctest::Approx(bm.gain / m));
    // the superposition of extreme eigenvectors saturates the gap bound
    CHECK(bm.optimal_state_qfi == doctest::Approx(bm.qfi_opt_zero).epsilon(1e-10));
    CHECK(bm.qfi_prod_zero_angular / bm.qfi_prod_zero == doctest::Approx(4 * kPi * kPi));
    CHECK(bm.sql_bound_hz * std::sqrt(300 * bm.qfi_prod_t) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("two-site generator variance by hand") {
  // G = SxSx + SySy - 2 SzSz on the Ramsey product state (|+1>+|0>)/sqrt2 per site.
  // flip-flops swap |+1,0> and |0,+1> and send |0,0> to |+1,-1> + |-1,+1>, so
  // G|psi> = (|0,+1> + |+1,0> + |+1,-1> + |-1,+1> - 2|+1,+1>)/2: <G> = 0, |G psi|^2 = 2.
  NvWindowConfig c;
  c.num_sites = 2;
  const CouplingBenchmark bm =
      coupling_benchmark(WindowModel(c), LocalFieldVector::Constant(2, 50e-6), 5e3, 157e-6, 300);
  CHECK(bm.generator_variance == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("SQL field bound") {
  const double a = sql_field_bound(kGamma, 10e-6, 100, 1);
  CHECK(sql_field_bound(kGamma, 10e-6, 400, 1) == doctest::Approx(a / 2));
  CHECK(sql_field_bound(kGamma, 10e-6, 100, 4) == doctest::Approx(a / 2));
  const double qfi = std::pow(2 * kPi * kGamma * 10e-6, 2);
  CHECK(a == doctest::Approx(1.0 / std::sqrt(qfi * 100)));
  CHECK_THROWS_AS(sql_field_bound(kGamma, 0.0, 1, 1), ArgumentError);
}

}  // TEST_SUITE
