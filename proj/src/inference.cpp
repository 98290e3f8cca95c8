#include "nvqhl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nvqhl {

void ScoreParams::validate() const {
  if (!(epsilon > 0.0)) throw ArgumentError("score epsilon must be positive");
  if (k_top < 1) throw ArgumentError("k_top must be at least 1");
}

void validate_weights(const Eigen::VectorXd& w, const char* what) {
  if (w.size() == 0) throw ArgumentError(std::string(what) + ": empty weight vector");
  if (!(w.minCoeff() >= 0.0)) throw ArgumentError(std::string(what) + ": negative or NaN weight");
  if (std::abs(w.sum() - 1.0) > kWeightTolerance)
    throw ArgumentError(std::string(what) + ": weights do not sum to one");
}

PairWeights PairWeights::product(const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
  PairWeights out{w.size(), v.size(), Eigen::VectorXd(w.size() * v.size())};
  for (Eigen::Index i = 0; i < w.size(); ++i) out.rho.segment(i * v.size(), v.size()) = w(i) * v;
  out.rho /= out.rho.sum();
  return out;
}

double entropy(const Eigen::VectorXd& w) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    if (w(k) > 0.0) h -= w(k) * std::log(w(k));
  return h;
}

double effective_sample_size(const Eigen::VectorXd& w) {
  const double s2 = w.squaredNorm();
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

namespace {

void check_shapes(const PairWeights& rho, const ProbabilityTable& table) {
  if (rho.n_local != table.n_local || rho.n_global != table.n_global ||
      rho.rho.size() != table.p.size() || rho.rho.size() != rho.n_local * rho.n_global)
    throw ArgumentError("pair weights and probability table shapes differ");
}

}  // namespace

double mixture_probability(const PairWeights& rho, const ProbabilityTable& table) {
  check_shapes(rho, table);
  return std::clamp(rho.rho.dot(table.p), 0.0, 1.0);
}

double expected_information_gain(const PairWeights& rho, const ProbabilityTable& table) {
  check_shapes(rho, table);
  const double p_bar = mixture_probability(rho, table);
  if (p_bar <= 0.0 || p_bar >= 1.0) return 0.0;
  // H(rho+) and H(rho-) with rho+ = rho p / p_bar, rho- = rho (1 - p) / (1 - p_bar)
  double h_plus = 0.0, h_minus = 0.0;
  for (Eigen::Index k = 0; k < rho.rho.size(); ++k) {
    const double r = rho.rho(k);
    if (r <= 0.0) continue;
    const double a = r * table.p(k) / p_bar;
    const double b = r * (1.0 - table.p(k)) / (1.0 - p_bar);
    if (a > 0.0) h_plus -= a * std::log(a);
    if (b > 0.0) h_minus -= b * std::log(b);
  }
  const double eig = entropy(rho.rho) - p_bar * h_plus - (1.0 - p_bar) * h_minus;
  return std::max(eig, 0.0);
}

double expected_information_gain_binomial(const PairWeights& rho, const ProbabilityTable& table,
                                          int n_shots) {
  check_shapes(rho, table);
  if (n_shots < 1) throw ArgumentError("binomial EIG needs n_shots >= 1");
  const Eigen::Index n = rho.rho.size();
  std::vector<double> log_p(n), log_q(n), log_r(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    log_p[k] = std::log(table.p(k));
    log_q[k] = std::log1p(-table.p(k));
    log_r[k] = rho.rho(k) > 0.0 ? std::log(rho.rho(k)) : -INFINITY;
  }
  // I(pair; z) = sum_z sum_k rho_k L_k(z) [log L_k(z) - log P(z)]
  double info = 0.0;
  std::vector<double> lj(n);
  for (int z = 0; z <= n_shots; ++z) {
    const double log_binom = std::lgamma(n_shots + 1.0) - std::lgamma(z + 1.0) - std::lgamma(n_shots - z + 1.0);
    double mx = -INFINITY;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double ll = log_binom + z * log_p[k] + (n_shots - z) * log_q[k];
      lj[k] = ll;
      mx = std::max(mx, log_r[k] + ll);
    }
    if (!std::isfinite(mx)) continue;
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += std::exp(log_r[k] + lj[k] - mx);
    const double log_pz = mx + std::log(s);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (rho.rho(k) <= 0.0) continue;
      const double joint = std::exp(log_r[k] + lj[k]);
      if (joint > 0.0) info += joint * (lj[k] - log_pz);
    }
  }
  return std::max(info, 0.0);
}

double phase_score(double eig, const FisherDiagnostics& fd, Phase phase, const ScoreParams& params) {
  const double eps = params.epsilon;
  if (phase == Phase::B) {
    double logdet = 0.0;
    for (double f : fd.f_b_diag) logdet += std::log(f + eps);
    return params.alpha_b * eig + params.beta_b * logdet + params.beta_bj * std::log(fd.f_j + eps) -
           params.lambda_b * fd.leakage;
  }
  double cross = 0.0;
  for (double f : fd.f_bj_cross) cross += std::log(std::abs(f) + eps);
  return params.alpha_j * eig + params.beta_jj * std::log(fd.f_j + eps) + params.eta_bj * cross -
         params.lambda_j * fd.leakage;
}

Selection select_control(std::span<const Candidate> candidates, const PairWeights& rho,
                         Phase phase, const ScoreParams& params, const DiagnosticsFn& diagnose) {
  params.validate();
  if (candidates.empty()) throw ArgumentError("select_control: empty candidate set");
  Selection sel;
  sel.all_eig.resize(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Candidate& cand = candidates[c];
    if (cand.table == nullptr) throw ArgumentError("select_control: candidate without probability table");
    sel.all_eig[c] = params.binomial_eig
                         ? expected_information_gain_binomial(rho, *cand.table, cand.control.n_shots)
                         : expected_information_gain(rho, *cand.table);
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sel.all_eig[a] > sel.all_eig[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(params.k_top)));
  // scoring visits the retained candidates in list order so ties go to the earliest
  std::sort(order.begin(), order.end());
  sel.top = order;

  bool first = true;
  for (std::size_t c : order) {
    FisherDiagnostics fd = diagnose(candidates[c]);
    const double s = phase_score(sel.all_eig[c], fd, phase, params);
    if (first || s > sel.score) {
      first = false;
      sel.index = c;
      sel.score = s;
      sel.eig = sel.all_eig[c];
      sel.diagnostics = std::move(fd);
    }
  }
  return sel;
}

PairWeights update_pair_weights(const PairWeights& rho, const ProbabilityTable& table, int z,
                                int n_shots) {
  check_shapes(rho, table);
  if (n_shots < 1 || z < 0 || z > n_shots) throw ArgumentError("update_pair_weights: need 0 <= z <= n_shots");
  const Eigen::Index n = rho.rho.size();
  // extended precision: z * log p carries ~1e-11 absolute error in double at 1e4 shots
  std::vector<long double> log_w(n);
  long double mx = -INFINITY;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (rho.rho(k) <= 0.0) {
      log_w[k] = -INFINITY;
      continue;
    }
    const long double p = table.p(k);
    log_w[k] = std::log(static_cast<long double>(rho.rho(k))) + z * std::log(p) + (n_shots - z) * std::log1p(-p);
    mx = std::max(mx, log_w[k]);
  }
  if (!std::isfinite(mx)) throw DegeneracyError("pair-weight update: no finite posterior mass");
  std::vector<long double> w(n);
  long double norm = 0.0L;
  for (Eigen::Index k = 0; k < n; ++k) norm += w[k] = std::exp(log_w[k] - mx);
  if (!(norm > 0.0L) || !std::isfinite(norm)) throw DegeneracyError("pair-weight update: zero normaliser");
  PairWeights out{rho.n_local, rho.n_global, Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) out.rho(k) = static_cast<double>(w[k] / norm);
  return out;
}

Marginals marginals(const PairWeights& rho) {
  if (rho.rho.size() != rho.n_local * rho.n_global) throw ArgumentError("marginals: malformed pair weights");
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      rho.rho.data(), rho.n_local, rho.n_global);
  Marginals out{m.rowwise().sum(), m.colwise().sum().transpose()};
  out.local /= out.local.sum();
  out.global /= out.global.sum();
  return out;
}

PosteriorSummary posterior_means(const LocalParticleSet& local, const GlobalParticleSet& global) {
  validate_weights(local.weights, "local particle set");
  validate_weights(global.weights, "global particle set");
  PosteriorSummary s;
  s.b_mean = local.particles.transpose() * local.weights;
  const Eigen::MatrixXd centred = local.particles.rowwise() - s.b_mean.transpose();
  s.b_std = (centred.array().square().matrix().transpose() * local.weights).cwiseMax(0.0).cwiseSqrt();
  s.j_mean = global.particles.dot(global.weights);
  const double var = (global.particles.array() - s.j_mean).square().matrix().dot(global.weights);
  s.j_std = std::sqrt(std::max(var, 0.0));
  return s;
}

namespace {

// Systematic resampling: ancestor index for each of the N output slots.
std::vector<Eigen::Index> systematic_ancestors(const Eigen::VectorXd& w, Rng& rng) {
  const Eigen::Index n = w.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0 / static_cast<double>(n));
  const double u0 = unif(rng);
  std::vector<Eigen::Index> anc(n);
  double cum = w(0);
  Eigen::Index src = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = u0 + static_cast<double>(k) / static_cast<double>(n);
    while (u > cum && src < n - 1) cum += w(++src);
    anc[k] = src;
  }
  return anc;
}

}  // namespace

bool resample_if_degenerate(LocalParticleSet& set, double threshold_frac, Rng& rng) {
  validate_weights(set.weights, "local particle set");
  const auto n = set.size();
  if (effective_sample_size(set.weights) >= threshold_frac * static_cast<double>(n)) return false;
  const auto anc = systematic_ancestors(set.weights, rng);
  Eigen::MatrixXd next(n, set.particles.cols());
  for (Eigen::Index k = 0; k < n; ++k) next.row(k) = set.particles.row(anc[k]);
  set.particles = std::move(next);
  set.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return true;
}

bool resample_if_degenerate(GlobalParticleSet& set, double threshold_frac, Rng& rng) {
  validate_weights(set.weights, "global particle set");
  const auto n = set.size();
  if (effective_sample_size(set.weights) >= threshold_frac * static_cast<double>(n)) return false;
  const auto anc = systematic_ancestors(set.weights, rng);
  Eigen::VectorXd next(n);
  for (Eigen::Index k = 0; k < n; ++k) next(k) = set.particles(anc[k]);
  set.particles = std::move(next);
  set.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return true;
}

void rejuvenate(LocalParticleSet& local, double sigma_local, const FieldBox& box,
                GlobalParticleSet& global, double sigma_j, const CouplingRange& range, Rng& rng) {
  if (sigma_local < 0.0 || sigma_j < 0.0) throw ArgumentError("rejuvenation scales must be non-negative");
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (sigma_local > 0.0) {
    for (Eigen::Index i = 0; i < local.particles.rows(); ++i)
      for (Eigen::Index q = 0; q < local.particles.cols(); ++q)
        local.particles(i, q) = std::clamp(local.particles(i, q) + sigma_local * gauss(rng), box.lo, box.hi);
  }
  if (sigma_j > 0.0) {
    for (Eigen::Index j = 0; j < global.particles.size(); ++j)
      global.particles(j) = std::clamp(global.particles(j) + sigma_j * gauss(rng), range.lo, range.hi);
  }
}

}  // namespace nvqhl
