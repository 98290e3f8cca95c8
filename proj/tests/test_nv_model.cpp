#include <doctest.h>

#include <numbers>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "nvqhl/nv_model.hpp"

using namespace nvqhl;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGamma = 28.025e9;

// Spin-1 matrices typed out directly, basis (+1, 0, -1).
struct Mats {
  Eigen::MatrixXcd sx, sy, sz, id, xeff, pp, pm;
  Mats() {
    const double r = 1.0 / std::sqrt(2.0);
    const cplx i(0, 1);
    sx.resize(3, 3);
    sx << 0, r, 0, r, 0, r, 0, r, 0;
    sy.resize(3, 3);
    sy << 0, -i * r, 0, i * r, 0, -i * r, 0, i * r, 0;
    sz = Eigen::Vector3cd(1, 0, -1).asDiagonal();
    id = Eigen::MatrixXcd::Identity(3, 3);
    xeff = Eigen::MatrixXcd::Zero(3, 3);
    xeff(0, 1) = xeff(1, 0) = 1;
    pp = Eigen::Vector3cd(1, 0, 0).asDiagonal();
    pm = Eigen::Vector3cd(0, 0, 1).asDiagonal();
  }
};

Eigen::MatrixXcd chain(const std::vector<Eigen::MatrixXcd>& ops) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
  for (const auto& o : ops) {
    Eigen::MatrixXcd next = Eigen::kroneckerProduct(out, o).eval();
    out = next;
  }
  return out;
}

Eigen::MatrixXcd at(const Eigen::MatrixXcd& op, int q, int m) {
  std::vector<Eigen::MatrixXcd> ops(m, Mats().id);
  ops[q] = op;
  return chain(ops);
}

Eigen::MatrixXcd at2(const Eigen::MatrixXcd& a, int q, const Eigen::MatrixXcd& b, int r, int m) {
  std::vector<Eigen::MatrixXcd> ops(m, Mats().id);
  ops[q] = a;
  ops[r] = b;
  return chain(ops);
}

Eigen::MatrixXcd oracle_h(const NvWindowConfig& c, const LocalFieldVector& b, double j, double omega) {
  const Mats s;
  const int m = c.num_sites;
  const double a = 2 * kPi;
  const int dim = static_cast<int>(std::pow(3, m));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (int q = 0; q < m; ++q) {
    const double eps = c.strain.empty() ? 0.0 : c.strain[q];
    h += a * c.gamma_abs * (b(q) - c.b_ref) * at(s.pp, q, m);
    h += a * c.gamma_abs * (b(q) + c.b_ref) * at(s.pm, q, m);
    h += eps * at(s.sx * s.sx - s.sy * s.sy, q, m);
    h += a * omega * (c.drive_form == DriveForm::EffectiveX ? at(0.5 * s.xeff, q, m) : at(s.sx, q, m));
  }
  for (int q = 0; q < m; ++q)
    for (int r = q + 1; r < m; ++r) {
      const Eigen::MatrixXcd v = at2(s.sx, q, s.sx, r, m) + at2(s.sy, q, s.sy, r, m) - 2.0 * at2(s.sz, q, s.sz, r, m);
      h += a * j * v / std::pow(r - q, 3.0);
    }
  return h;
}

Eigen::VectorXcd oracle_state(InitialState init, int m) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::VectorXcd site(3), bell = Eigen::VectorXcd::Zero(9);
  site << r, r, 0;
  bell(0) = bell(4) = r;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(1);
  for (int q = 0; q < m;) {
    const bool pair = init == InitialState::BellPairs && q + 1 < m;
    Eigen::VectorXcd next = Eigen::kroneckerProduct(psi, pair ? bell : site).eval();
    psi = next;
    q += pair ? 2 : 1;
  }
  return psi;
}

double oracle_p(const NvWindowConfig& c, const LocalFieldVector& b, double j, const Control& u, InitialState init) {
  const Mats s;
  const int m = c.num_sites;
  const Eigen::MatrixXcd h = oracle_h(c, b, j, u.omega_hz);
  const Eigen::MatrixXcd ut = (cplx(0, -u.time_s) * h).exp();
  const Eigen::VectorXcd psi = ut * oracle_state(init, m);
  const int q = u.observable.site - 1;
  const Eigen::MatrixXcd o = u.observable.kind == ObservableSpec::Kind::SingleSite ? at(s.xeff, q, m)
                                                                                 : at2(s.xeff, q, s.xeff, q + 1, m);
  return std::clamp(0.5 * (1.0 + psi.dot(o * psi).real()), kProbabilityFloor, 1.0 - kProbabilityFloor);
}

NvWindowConfig single_site() {
  NvWindowConfig c;
  c.num_sites = 1;
  return c;
}

Control ctl(double t, double omega, ObservableSpec o, Phase ph = Phase::B) { return {t, omega, o, 1, ph}; }

}  // namespace

TEST_SUITE("nv_model") {

TEST_CASE("single-site Hamiltonian closed form") {
  const Operator h = build_hamiltonian(single_site(), LocalFieldVector::Constant(1, 50e-6), 0.0, 0.0);
  CHECK(std::abs(h(0, 0)) < 1e-9);
  CHECK(std::abs(h(1, 1)) == 0.0);
  CHECK(h(2, 2).real() == doctest::Approx(2 * kPi * kGamma * 2 * 50e-6).epsilon(1e-14));
  CHECK((h - Operator(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Hamiltonian matches explicit tensor construction") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> bu(45e-6, 60e-6), ju(0, 10e3);
  std::normal_distribution<double> eps(0.0, 2 * kPi * 5e3);
  for (int m = 1; m <= 3; ++m)
    for (DriveForm d : {DriveForm::EffectiveX, DriveForm::SpinX}) {
      NvWindowConfig c;
      c.num_sites = m;
      c.drive_form = d;
      for (int q = 0; q < m; ++q) c.strain.push_back(eps(rng));
      LocalFieldVector b(m);
      for (int q = 0; q < m; ++q) b(q) = bu(rng);
      const double j = ju(rng);
      const Operator h = build_hamiltonian(c, b, j, 5e3);
      const Eigen::MatrixXcd ref = oracle_h(c, b, j, 5e3);
      CHECK((h - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
      CHECK(hermiticity_residual(h) <= 1e-12 * h.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("dipolar tail ratio between distance 1 and 2") {
  NvWindowConfig c;
  c.num_sites = 3;
  const WindowModel model(c);
  // <+1,0,0| G |0,+1,0> and <+1,0,0| G |0,0,+1>: flip-flop terms Sx Sx + Sy Sy = (S+S- + S-S+)/2
  const RealOperator& g = model.dipolar_sum();
  const Eigen::Index a = 0 * 9 + 1 * 3 + 1, b = 1 * 9 + 0 * 3 + 1, cc = 1 * 9 + 1 * 3 + 0;
  CHECK(g(a, b) / g(a, cc) == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("initial states") {
  const StateVector r1 = initial_state(InitialState::ProductRamsey, 1);
  CHECK(std::abs(r1(0) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(r1(1) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(r1(2)) == 0.0);
  const StateVector b2 = initial_state(InitialState::BellPairs, 2);
  for (int k = 0; k < 9; ++k) CHECK(std::abs(b2(k)) == doctest::Approx(k == 0 || k == 4 ? 1.0 / std::sqrt(2.0) : 0.0));
  for (int m = 1; m <= 6; ++m)
    for (InitialState s : {InitialState::ProductRamsey, InitialState::BellPairs}) {
      const StateVector psi = initial_state(s, m);
      CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);
      CHECK((psi - oracle_state(s, m)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("observable spectra") {
  for (int m = 1; m <= 3; ++m)
    for (int q = 1; q <= m; ++q) {
      const Eigen::VectorXd ev = hermitian_eigen(observable_matrix(ObservableSpec::single(q), m)).eigenvalues;
      const long n = static_cast<long>(ipow3(m - 1));
      CHECK((ev.array() < -0.5).count() == n);
      CHECK((ev.array() > 0.5).count() == n);
      CHECK((ev.array().abs() < 1e-12).count() == n);
    }
  const Eigen::VectorXd ev = hermitian_eigen(observable_matrix(ObservableSpec::pair(2), 3)).eigenvalues;
  CHECK(ev.minCoeff() >= -1.0 - 1e-12);
  CHECK(ev.maxCoeff() <= 1.0 + 1e-12);
  CHECK(observable_matrix(ObservableSpec::single(1), 1).isApprox(spin1_site_ops().xeff));
  CHECK_THROWS_AS(observable_matrix(ObservableSpec::pair(3), 3), ArgumentError);
  CHECK_THROWS_AS(observable_matrix(ObservableSpec::single(4), 3), ArgumentError);
}

TEST_CASE("Ramsey closed form") {
  const WindowModel model(single_site());
  CHECK(success_probability(model, LocalFieldVector::Constant(1, 50e-6), 0.0, ctl(157e-6, 0, ObservableSpec::single(1)),
                            InitialState::ProductRamsey) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(success_probability(model, LocalFieldVector::Constant(1, 57e-6), 0.0, ctl(0.0, 0, ObservableSpec::single(1)),
                            InitialState::ProductRamsey) == doctest::Approx(1.0).epsilon(1e-12));
  const double t = 10e-6;
  const double db = 1.0 / (2.0 * kGamma * t);  // phase pi
  const double p = success_probability(model, LocalFieldVector::Constant(1, 50e-6 + db), 0.0,
                                       ctl(t, 0, ObservableSpec::single(1)), InitialState::ProductRamsey);
  CHECK(p <= 1e-9);
}

TEST_CASE("success probability matches matrix-exponential oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> bu(45e-6, 60e-6), ju(0, 10e3), tu(0, 157e-6);
  std::normal_distribution<double> eps(0.0, 2 * kPi * 5e3);
  double worst = 0.0;
  for (int n = 0; n < 30; ++n) {
    const int m = 1 + n % 3;
    NvWindowConfig c;
    c.num_sites = m;
    c.drive_form = n % 2 ? DriveForm::SpinX : DriveForm::EffectiveX;
    for (int q = 0; q < m; ++q) c.strain.push_back(eps(rng));
    const WindowModel model(c);
    LocalFieldVector b(m);
    for (int q = 0; q < m; ++q) b(q) = bu(rng);
    const double j = ju(rng);
    const double omega = n % 4 < 2 ? 0.0 : 5e3;
    const ObservableSpec o = m > 1 && n % 5 == 0 ? ObservableSpec::pair(1) : ObservableSpec::single(1 + n % m);
    const InitialState init = n % 3 == 0 ? InitialState::BellPairs : InitialState::ProductRamsey;
    const Control u = ctl(tu(rng), omega, o);
    worst = std::max(worst, std::abs(success_probability(model, b, j, u, init) - oracle_p(c, b, j, u, init)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("parity blocks are invariant without drive") {
  NvWindowConfig c;
  c.num_sites = 3;
  c.strain = {3e4, -2e4, 1e4};
  const WindowModel model(c);
  const auto& blocks = model.parity_blocks();
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].size() + blocks[1].size() == 27);
  std::vector<int> which(27, -1);
  for (int k = 0; k < 2; ++k)
    for (auto i : blocks[k]) which[i] = k;
  LocalFieldVector b(3);
  b << 47e-6, 52e-6, 58e-6;
  const RealOperator h = model.hamiltonian(b, 4e3, 0.0);
  for (int i = 0; i < 27; ++i)
    for (int j = 0; j < 27; ++j)
      if (which[i] != which[j]) CHECK(h(i, j) == 0.0);
  // the drive breaks the symmetry
  const RealOperator hd = model.hamiltonian(b, 4e3, 5e3);
  double cross = 0.0;
  for (int i = 0; i < 27; ++i)
    for (int j = 0; j < 27; ++j)
      if (which[i] != which[j]) cross += std::abs(hd(i, j));
  CHECK(cross > 0.0);

  const Spectrum blockwise = Spectrum::of_blocks(h, blocks);
  const Spectrum full = Spectrum::of(h);
  const Eigen::VectorXd psi0 = model.initial_state(InitialState::ProductRamsey);
  for (double t : {1e-6, 37e-6, 157e-6})
    CHECK((blockwise.evolve_state(psi0, t) - full.evolve_state(psi0, t)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_THROWS_AS(Spectrum::of_blocks(h, {blocks[0]}), ArgumentError);
}

TEST_CASE("sparse and dense expectations agree") {
  NvWindowConfig c;
  c.num_sites = 3;
  const WindowModel model(c);
  StateVector psi = StateVector::Random(27);
  psi.normalize();
  for (int q = 1; q <= 3; ++q) {
    const ObservableSpec o = ObservableSpec::single(q);
    CHECK(model.sparse_observable(o).expectation(psi) ==
          doctest::Approx(real_expectation(psi, model.observable(o))).epsilon(1e-13));
  }
  for (int q = 1; q <= 2; ++q) {
    const ObservableSpec o = ObservableSpec::pair(q);
    CHECK(model.sparse_observable(o).expectation(psi) ==
          doctest::Approx(expectation(psi, observable_matrix(o, 3))).epsilon(1e-13));
  }
}

TEST_CASE("leakage") {
  NvWindowConfig c;
  c.num_sites = 2;
  const WindowModel clean(c);
  LocalFieldVector b(2);
  b << 48e-6, 56e-6;
  for (InitialState s : {InitialState::ProductRamsey, InitialState::BellPairs}) {
    CHECK(leakage(clean, b, 0.0, ctl(157e-6, 0, ObservableSpec::pair(1)), s) <= 1e-12);
    CHECK(leakage(clean, b, 7e3, ctl(0.0, 0, ObservableSpec::pair(1)), s) <= 1e-12);
  }
  // dipolar flip-flops move |0,0> into |+1,-1>, |-1,+1>
  const double lj = leakage(clean, b, 5e3, ctl(157e-6, 0, ObservableSpec::pair(1), Phase::J), InitialState::BellPairs);
  CHECK(lj > 0.0);
  CHECK(lj < 1e-4);
  c.drive_form = DriveForm::SpinX;
  const WindowModel driven(c);
  CHECK(leakage(driven, b, 0.0, ctl(50e-6, 5e3, ObservableSpec::single(1)), InitialState::ProductRamsey) > 0.0);
}

TEST_CASE("global shift invariance in the sensing sector") {
  const WindowModel a(single_site());
  NvWindowConfig shifted = single_site();
  shifted.b_ref = 52e-6;
  shifted.b_lo = 40e-6;
  const WindowModel b(shifted);
  const Control u = ctl(8e-6, 0, ObservableSpec::single(1));
  for (double f : {46e-6, 50.5e-6, 58e-6})
    CHECK(std::abs(success_probability(a, LocalFieldVector::Constant(1, f), 0, u, InitialState::ProductRamsey) -
                   success_probability(b, LocalFieldVector::Constant(1, f + 2e-6), 0, u, InitialState::ProductRamsey)) <=
          1e-9);
}

TEST_CASE("probability clamp") {
  CHECK(probability_from_expectation(1.0).p == 1.0 - kProbabilityFloor);
  CHECK(probability_from_expectation(1.0).clamped());
  CHECK(probability_from_expectation(-1.0).p == kProbabilityFloor);
  CHECK_FALSE(probability_from_expectation(0.2).clamped());
  CHECK_THROWS_AS(probability_from_expectation(1.1), NumericError);
}

TEST_CASE("config validation and names") {
  NvWindowConfig c;
  c.num_sites = 0;
  CHECK_THROWS_AS(WindowModel{c}, ArgumentError);
  c.num_sites = 2;
  c.strain = {1.0};
  CHECK_THROWS_AS(WindowModel{c}, ArgumentError);
  CHECK(parse_drive_form(to_string(DriveForm::SpinX)) == DriveForm::SpinX);
  CHECK(parse_initial_state(to_string(InitialState::BellPairs)) == InitialState::BellPairs);
  CHECK_THROWS_AS(parse_drive_form("bogus"), ArgumentError);
  CHECK(ObservableSpec::single(3).label() == "Z3");
  CHECK(ObservableSpec::pair(1).label() == "ZZ1");
}

}  // TEST_SUITE
