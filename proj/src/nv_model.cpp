#include "nvqhl/nv_model.hpp"

#include <algorithm>
#include <cmath>

namespace nvqhl {

std::string to_string(DriveForm d) { return d == DriveForm::EffectiveX ? "EffectiveX" : "SpinX"; }
std::string to_string(Phase p) { return p == Phase::B ? "B" : "J"; }
std::string to_string(InitialState s) {
  return s == InitialState::ProductRamsey ? "ProductRamsey" : "BellPairs";
}

DriveForm parse_drive_form(const std::string& s) {
  if (s == "EffectiveX") return DriveForm::EffectiveX;
  if (s == "SpinX") return DriveForm::SpinX;
  throw ArgumentError("unknown drive form '" + s + "'");
}

InitialState parse_initial_state(const std::string& s) {
  if (s == "ProductRamsey") return InitialState::ProductRamsey;
  if (s == "BellPairs") return InitialState::BellPairs;
  throw ArgumentError("unknown initial state '" + s + "'");
}

std::string ObservableSpec::label() const {
  return (kind == Kind::SingleSite ? "Z" : "ZZ") + std::to_string(site);
}

void NvWindowConfig::validate() const {
  if (num_sites < 1 || ipow3(num_sites) > kMaxDim) throw ArgumentError("window size must be in [1, 8]");
  if (!(gamma_abs > 0.0)) throw ArgumentError("gamma_abs must be positive");
  if (!(dipolar_exponent > 0.0)) throw ArgumentError("dipolar exponent must be positive");
  if (!strain.empty() && static_cast<int>(strain.size()) != num_sites)
    throw ArgumentError("strain must have one entry per window site");
  if (!(b_lo < b_hi)) throw ArgumentError("admissible field box is empty");
}

namespace {

Eigen::VectorXd kron_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Eigen::VectorXd ramsey_site() {
  Eigen::VectorXd v(3);
  v << 1.0, 1.0, 0.0;
  return v / std::sqrt(2.0);
}

Eigen::VectorXd bell_pair() {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(9);
  v(0) = v(4) = 1.0 / std::sqrt(2.0);  // |+1,+1> and |0,0>
  return v;
}

Eigen::VectorXd product_state(int m, bool bell) {
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(1);
  int q = 0;
  while (q < m) {
    if (bell && q + 1 < m) {
      psi = kron_vec(psi, bell_pair());
      q += 2;
    } else {
      psi = kron_vec(psi, ramsey_site());
      q += 1;
    }
  }
  return psi;
}

}  // namespace

WindowModel::WindowModel(NvWindowConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.strain.empty()) cfg_.strain.assign(cfg_.num_sites, 0.0);
  const int m = cfg_.num_sites;
  dim_ = static_cast<Eigen::Index>(ipow3(m));
  const auto& ops = spin1_site_ops();

  strain_ = RealOperator::Zero(dim_, dim_);
  drive_ = RealOperator::Zero(dim_, dim_);
  dipolar_ = RealOperator::Zero(dim_, dim_);
  sense_diag_ = Eigen::VectorXd::Ones(dim_);
  const Operator strain_site = ops.sx * ops.sx - ops.sy * ops.sy;
  const Operator drive_site = cfg_.drive_form == DriveForm::EffectiveX ? Operator(0.5 * ops.xeff) : ops.sx;
  for (int q = 1; q <= m; ++q) {
    p_plus_diag_.push_back(kron_embed(ops.p_plus, q, m).real().diagonal());
    p_minus_diag_.push_back(kron_embed(ops.p_minus, q, m).real().diagonal());
    strain_ += cfg_.strain[q - 1] * kron_embed(strain_site, q, m).real();
    drive_ += kron_embed(drive_site, q, m).real();
    sense_diag_ = sense_diag_.cwiseProduct(Eigen::VectorXd::Ones(dim_) - p_minus_diag_.back());
    single_obs_.push_back(kron_embed(ops.xeff, q, m).real());
  }
  for (int q = 1; q < m; ++q) {
    pair_obs_.push_back(two_site_embed(ops.xeff, ops.xeff, q, q + 1, m).real());
    for (int r = q + 1; r <= m; ++r) {
      const Operator v = two_site_embed(ops.sx, ops.sx, q, r, m) +
                         two_site_embed(ops.sy, ops.sy, q, r, m) -
                         2.0 * two_site_embed(ops.sz, ops.sz, q, r, m);
      dipolar_ += v.real() / std::pow(static_cast<double>(r - q), cfg_.dipolar_exponent);
    }
  }
  for (const auto& o : single_obs_) single_sparse_.push_back(SparseObservable::from(o));
  for (const auto& o : pair_obs_) pair_sparse_.push_back(SparseObservable::from(o));
  parity_blocks_.resize(2);
  for (Eigen::Index k = 0; k < dim_; ++k) {
    int flips = 0;
    Eigen::Index r = k;
    for (int q = 0; q < m; ++q, r /= 3) flips += (r % 3) != 1;
    parity_blocks_[flips % 2].push_back(k);
  }
  if (parity_blocks_[1].empty()) parity_blocks_.pop_back();
  ramsey_ = product_state(m, false);
  bell_ = product_state(m, true);
}

RealOperator WindowModel::hamiltonian(const LocalFieldVector& b, double j_hz,
                                      double omega_hz) const {
  if (b.size() != cfg_.num_sites) throw ArgumentError("field vector length does not match window size");
  const double a = cfg_.angular_factor;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim_);
  for (int q = 0; q < cfg_.num_sites; ++q) {
    diag += (a * cfg_.gamma_abs * (b(q) - cfg_.b_ref)) * p_plus_diag_[q];
    diag += (a * cfg_.gamma_abs * (b(q) + cfg_.b_ref)) * p_minus_diag_[q];
  }
  RealOperator h = strain_;
  if (omega_hz != 0.0) h.noalias() += (a * omega_hz) * drive_;
  if (j_hz != 0.0) h.noalias() += (a * j_hz) * dipolar_;
  h.diagonal() += diag;
  return h;
}

Eigen::VectorXd WindowModel::field_derivative_diag(int site) const {
  if (site < 1 || site > cfg_.num_sites) throw ArgumentError("site out of range");
  const double a = cfg_.angular_factor * cfg_.gamma_abs;
  return a * (p_plus_diag_[site - 1] + p_minus_diag_[site - 1]);
}

const RealOperator& WindowModel::observable(const ObservableSpec& spec) const {
  if (spec.kind == ObservableSpec::Kind::SingleSite) {
    if (spec.site < 1 || spec.site > cfg_.num_sites) throw ArgumentError("observable site out of range");
    return single_obs_[spec.site - 1];
  }
  if (spec.site < 1 || spec.site + 1 > cfg_.num_sites) throw ArgumentError("observable pair out of range");
  return pair_obs_[spec.site - 1];
}

const SparseObservable& WindowModel::sparse_observable(const ObservableSpec& spec) const {
  observable(spec);
  return spec.kind == ObservableSpec::Kind::SingleSite ? single_sparse_[spec.site - 1] : pair_sparse_[spec.site - 1];
}

SparseObservable SparseObservable::from(const RealOperator& o) {
  SparseObservable s;
  for (Eigen::Index c = 0; c < o.cols(); ++c)
    for (Eigen::Index r = 0; r < o.rows(); ++r)
      if (o(r, c) != 0.0) {
        s.row.push_back(r);
        s.col.push_back(c);
        s.val.push_back(o(r, c));
      }
  return s;
}

double SparseObservable::expectation(const StateVector& psi) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < val.size(); ++k) {
    const cplx a = psi(row[k]), b = psi(col[k]);
    acc += val[k] * (a.real() * b.real() + a.imag() * b.imag());
  }
  return acc;
}

const Eigen::VectorXd& WindowModel::initial_state(InitialState s) const {
  return s == InitialState::ProductRamsey ? ramsey_ : bell_;
}

Spectrum Spectrum::of(const RealOperator& h) {
  Eigen::SelfAdjointEigenSolver<RealOperator> solver(h);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed on window Hamiltonian");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Spectrum Spectrum::of_blocks(const RealOperator& h, const std::vector<std::vector<Eigen::Index>>& blocks) {
  Spectrum s{Eigen::VectorXd(h.rows()), RealOperator::Zero(h.rows(), h.cols())};
  std::vector<int> label(h.rows(), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (auto i : blocks[b]) label[i] = static_cast<int>(b);
  for (Eigen::Index j = 0; j < h.cols(); ++j)
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      if (h(i, j) != 0.0 && label[i] != label[j]) throw ModelError("Hamiltonian couples spectrum blocks");
  Eigen::Index col = 0;
  for (const auto& idx : blocks) {
    Eigen::SelfAdjointEigenSolver<RealOperator> solver(h(idx, idx));
    if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed on window Hamiltonian block");
    const auto n = static_cast<Eigen::Index>(idx.size());
    s.values.segment(col, n) = solver.eigenvalues();
    for (Eigen::Index r = 0; r < n; ++r) s.vectors.row(idx[r]).segment(col, n) = solver.eigenvectors().row(r);
    col += n;
  }
  if (col != h.rows()) throw ArgumentError("spectrum blocks do not cover the basis");
  return s;
}

Spectrum WindowModel::spectrum(const LocalFieldVector& b, double j_hz, double omega_hz) const {
  const RealOperator h = hamiltonian(b, j_hz, omega_hz);
  return omega_hz == 0.0 ? Spectrum::of_blocks(h, parity_blocks_) : Spectrum::of(h);
}

StateVector Spectrum::evolve_coeffs(const Eigen::VectorXd& c, double t) const {
  if (!(t >= 0.0)) throw ArgumentError("evolution time must be non-negative");
  Eigen::VectorXd re(c.size()), im(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double ph = values(k) * t;
    re(k) = c(k) * std::cos(ph);
    im(k) = -c(k) * std::sin(ph);
  }
  StateVector out(c.size());
  out.real() = vectors * re;
  out.imag() = vectors * im;
  return out;
}

double real_expectation(const StateVector& psi, const RealOperator& o) {
  const Eigen::VectorXd re = psi.real();
  const Eigen::VectorXd im = psi.imag();
  return re.dot(o * re) + im.dot(o * im);
}

double diag_expectation(const StateVector& psi, const Eigen::VectorXd& diag) {
  return psi.cwiseAbs2().dot(diag);
}

ProbabilityResult probability_from_expectation(double mu) {
  const double raw = 0.5 * (1.0 + mu);
  if (!(raw >= -1e-9 && raw <= 1.0 + 1e-9))
    throw NumericError("success probability " + std::to_string(raw) + " outside [0, 1]");
  return {std::clamp(raw, kProbabilityFloor, 1.0 - kProbabilityFloor), raw};
}

Operator build_hamiltonian(const NvWindowConfig& cfg, const LocalFieldVector& b, double j_hz,
                           double omega_hz) {
  return WindowModel(cfg).hamiltonian(b, j_hz, omega_hz).cast<cplx>();
}

StateVector initial_state(InitialState spec, int num_sites) {
  if (num_sites < 1 || ipow3(num_sites) > kMaxDim) throw ArgumentError("window size must be in [1, 8]");
  return product_state(num_sites, spec == InitialState::BellPairs).cast<cplx>();
}

Operator observable_matrix(const ObservableSpec& spec, int num_sites) {
  const auto& ops = spin1_site_ops();
  if (spec.kind == ObservableSpec::Kind::SingleSite) return kron_embed(ops.xeff, spec.site, num_sites);
  if (spec.site < 1 || spec.site + 1 > num_sites) throw ArgumentError("observable pair out of range");
  return two_site_embed(ops.xeff, ops.xeff, spec.site, spec.site + 1, num_sites);
}

StateVector evolved_state(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                          const Control& u, InitialState init) {
  if (u.n_shots < 1) throw ArgumentError("control needs at least one shot");
  const Spectrum spec = model.spectrum(b, j_hz, u.omega_hz);
  return spec.evolve_state(model.initial_state(init), u.time_s);
}

ProbabilityResult evaluate_probability(const WindowModel& model, const LocalFieldVector& b,
                                       double j_hz, const Control& u, InitialState init) {
  const StateVector psi = evolved_state(model, b, j_hz, u, init);
  return probability_from_expectation(model.sparse_observable(u.observable).expectation(psi));
}

double success_probability(const WindowModel& model, const LocalFieldVector& b, double j_hz,
                           const Control& u, InitialState init) {
  return evaluate_probability(model, b, j_hz, u, init).p;
}

double leakage(const WindowModel& model, const LocalFieldVector& b, double j_hz,
               const Control& u, InitialState init) {
  const StateVector psi = evolved_state(model, b, j_hz, u, init);
  return std::clamp(1.0 - diag_expectation(psi, model.sensing_projector()), 0.0, 1.0);
}

}  // namespace nvqhl
