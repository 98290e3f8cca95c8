#include "nvqhl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvqhl/report.hpp"

namespace nvqhl {

namespace {

std::vector<int> offsets(int extent, int window_size, int stride) {
  std::vector<int> out;
  for (int o = 0; o <= extent - window_size; o += stride) out.push_back(o);
  if (out.back() != extent - window_size) out.push_back(extent - window_size);
  return out;
}

std::vector<int> lines(int extent, int stride) {
  std::vector<int> out;
  for (int r = 0; r < extent; r += stride) out.push_back(r);
  return out;
}

FieldBox box_of(const ExperimentConfig& cfg) { return {cfg.b_lo, cfg.b_hi}; }
CouplingRange range_of(const ExperimentConfig& cfg) { return {cfg.j_min, cfg.j_max}; }

std::string where(int frame, int window_id) {
  return "frame " + std::to_string(frame) + ", window " + std::to_string(window_id);
}

}  // namespace

ScanPlan enumerate_windows(int height, int width, int window_size, int stride_row, int stride_col,
                           const std::vector<Direction>& directions) {
  if (window_size < 1 || window_size > std::min(height, width))
    throw ArgumentError("window size must be in [1, min(H, W)]");
  if (stride_row < 1 || stride_col < 1) throw ArgumentError("strides must be positive");
  if (directions.empty()) throw ArgumentError("scan plan needs at least one direction");
  ScanPlan plan{directions, stride_row, stride_col, {}};
  for (Direction d : directions) {
    if (d == Direction::H) {
      for (int r : lines(height, stride_row))
        for (int c0 : offsets(width, window_size, stride_col)) {
          WindowIndex w{Direction::H, {}};
          for (int q = 0; q < window_size; ++q) w.sites.emplace_back(r, c0 + q);
          plan.windows.push_back(std::move(w));
        }
    } else {
      for (int c : lines(width, stride_col))
        for (int r0 : offsets(height, window_size, stride_row)) {
          WindowIndex w{Direction::V, {}};
          for (int q = 0; q < window_size; ++q) w.sites.emplace_back(r0 + q, c);
          plan.windows.push_back(std::move(w));
        }
    }
  }
  return plan;
}

Eigen::MatrixXi coverage(const ScanPlan& plan, int height, int width) {
  Eigen::MatrixXi c = Eigen::MatrixXi::Zero(height, width);
  for (const auto& w : plan.windows)
    for (const auto& [y, x] : w.sites) c(y, x) += 1;
  return c;
}

AggregationProfile AggregationProfile::make(ProfileKind kind, int window_size) {
  if (window_size < 1) throw ArgumentError("profile needs a positive window size");
  AggregationProfile p{kind, std::vector<double>(window_size, 1.0)};
  if (kind == ProfileKind::Triangular) {
    double mx = 0.0;
    for (int k = 1; k <= window_size; ++k) {
      p.weights[k - 1] = std::min(k, window_size + 1 - k);
      mx = std::max(mx, p.weights[k - 1]);
    }
    for (double& w : p.weights) w /= mx;
  }
  return p;
}

LocalParticleSet initial_local_set(const ExperimentConfig& cfg, int window_id) {
  Rng rng = stream_rng(cfg.seed, Stream::ParticleInit, static_cast<std::uint64_t>(window_id));
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> jitter(0.0, 1.0);
  LocalParticleSet set;
  set.particles.resize(cfg.n_local, cfg.window_size);
  for (int i = 0; i < cfg.n_local; ++i)
    for (int q = 0; q < cfg.window_size; ++q) {
      const double level = coin(rng) ? cfg.b_base + cfg.b_amp : cfg.b_base;
      set.particles(i, q) = std::clamp(level + cfg.local_jitter * jitter(rng), cfg.b_lo, cfg.b_hi);
    }
  set.weights = Eigen::VectorXd::Constant(cfg.n_local, 1.0 / cfg.n_local);
  return set;
}

GlobalParticleSet initial_global_set(const ExperimentConfig& cfg) {
  GlobalParticleSet set;
  set.particles.resize(cfg.n_global);
  const double step = (cfg.j_max - cfg.j_min) / cfg.n_global;
  for (int j = 0; j < cfg.n_global; ++j) set.particles(j) = cfg.j_min + (j + 0.5) * step;
  set.weights = Eigen::VectorXd::Constant(cfg.n_global, 1.0 / cfg.n_global);
  return set;
}

WindowRecord process_window(int window_id, const WindowIndex& window, FrameState& state,
                            const WindowContext& ctx) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const WindowModel& model = *ctx.model;
  LocalParticleSet& local = state.local_sets.at(window_id);
  GlobalParticleSet& global = state.global;
  if (local.num_sites() != model.num_sites() || window.size() != model.num_sites())
    throw ArgumentError("window size does not match the model");

  WindowRecord rec;
  rec.window_id = window_id;
  rec.window = window;

  // particles are fixed inside a window, so every table is built once
  const TableBatch batch = probability_tables(model, local.particles, global.particles, ctx.candidates);
  rec.clamped_entries = batch.clamped_entries;
  std::vector<Candidate> all(ctx.candidates.size());
  for (std::size_t c = 0; c < all.size(); ++c)
    all[c] = {ctx.candidates[c].control, ctx.candidates[c].init, &batch.tables[c]};
  const std::span<const Candidate> b_cands(all.data(), ctx.n_b_candidates);
  const std::span<const Candidate> j_cands(all.data() + ctx.n_b_candidates, all.size() - ctx.n_b_candidates);

  PairWeights rho = PairWeights::product(local.weights, global.weights);
  const int K = cfg.k_b + cfg.k_j;
  for (int k = 1; k <= K; ++k) {
    const Phase phase = k <= cfg.k_b ? Phase::B : Phase::J;
    const auto& cands = phase == Phase::B ? b_cands : j_cands;

    const Marginals m = marginals(rho);
    LocalFieldVector b_point = local.particles.transpose() * m.local;
    for (auto& v : b_point) v = std::clamp(v, cfg.b_lo, cfg.b_hi);
    const double j_point = global.particles.dot(m.global);
    const DiagnosticsFn diagnose = [&](const Candidate& c) {
      return fisher_diagnostics(model, b_point, j_point, c.control, c.init, cfg.fd, false);
    };

    const Selection sel = select_control(cands, rho, phase, cfg.score, diagnose);
    const Candidate& chosen = cands[sel.index];
    Rng meas = stream_rng(cfg.seed, Stream::Measurement, static_cast<std::uint64_t>(ctx.frame),
                          static_cast<std::uint64_t>(window_id), static_cast<std::uint64_t>(k));
    const int z = measure(*ctx.truth, ctx.frame, window, chosen.control, chosen.init, model, meas);
    try {
      rho = update_pair_weights(rho, *chosen.table, z, chosen.control.n_shots);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError(where(ctx.frame, window_id) + ", step " + std::to_string(k) + ": " + e.what());
    }
    rec.steps.push_back({k, chosen.control, chosen.init, z, sel.eig, sel.score, sel.diagnostics});
  }

  const Marginals m = marginals(rho);
  local.weights = m.local;
  global.weights = m.global;
  rec.posterior = posterior_means(local, global);

  Rng rejuv = stream_rng(cfg.seed, Stream::Rejuvenation, static_cast<std::uint64_t>(ctx.frame),
                         static_cast<std::uint64_t>(window_id));
  rec.resampled_local = resample_if_degenerate(local, cfg.resample_threshold, rejuv);
  rec.resampled_global = resample_if_degenerate(global, cfg.resample_threshold, rejuv);
  rejuvenate(local, cfg.local_jitter, box_of(cfg), global, cfg.rejuv_sigma_j, range_of(cfg), rejuv);
  return rec;
}

FieldMap aggregate(const std::vector<WindowRecord>& records, const AggregationProfile& profile,
                   const FieldMap& previous) {
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(previous.height, previous.width);
  Eigen::MatrixXd den = Eigen::MatrixXd::Zero(previous.height, previous.width);
  for (const auto& r : records) {
    if (r.window.size() != static_cast<int>(profile.weights.size()) || r.posterior.b_mean.size() != r.window.size())
      throw ArgumentError("aggregate: record does not match the profile");
    for (int q = 0; q < r.window.size(); ++q) {
      const auto [y, x] = r.window.sites[q];
      num(y, x) += profile.weights[q] * r.posterior.b_mean(q);
      den(y, x) += profile.weights[q];
    }
  }
  FieldMap out = previous;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (den(y, x) > 0.0) out(y, x) = num(y, x) / den(y, x);
  return out;
}

void propagate_frame(FrameState& state, double sigma_b_dyn, double sigma_j, const FieldBox& box,
                     const CouplingRange& range, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (sigma_b_dyn > 0.0)
    for (auto& set : state.local_sets)
      for (Eigen::Index i = 0; i < set.particles.rows(); ++i)
        for (Eigen::Index q = 0; q < set.particles.cols(); ++q)
          set.particles(i, q) = std::clamp(set.particles(i, q) + sigma_b_dyn * gauss(rng), box.lo, box.hi);
  if (sigma_j > 0.0)
    for (auto& j : state.global.particles) j = std::clamp(j + sigma_j * gauss(rng), range.lo, range.hi);
}

std::vector<double> draw_strain(const ExperimentConfig& cfg) {
  Rng rng = stream_rng(cfg.seed, Stream::Strain);
  std::normal_distribution<double> gauss(0.0, cfg.angular_factor * cfg.strain_std_hz);
  std::vector<double> out(cfg.window_size);
  for (double& e : out) e = cfg.strain_std_hz > 0.0 ? gauss(rng) : 0.0;
  return out;
}

TruthSequence make_truth(const ExperimentConfig& cfg) {
  return generate_truth(cfg.height, cfg.width, cfg.frames, cfg.b_base, cfg.b_amp, cfg.sigma_true, cfg.j_true,
                        cfg.seed);
}

RunResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  return run_experiment(cfg, make_truth(cfg), progress);
}

RunResult run_experiment(const ExperimentConfig& cfg, const TruthSequence& truth, const ProgressFn& progress) {
  cfg.validate();
  if (static_cast<int>(truth.frames.size()) < cfg.frames) throw ArgumentError("truth has fewer frames than the run");
  if (truth.frames[0].height != cfg.height || truth.frames[0].width != cfg.width)
    throw ArgumentError("truth shape does not match the configured grid");

  RunResult res;
  res.config = cfg;
  res.truth = truth;
  res.strain_rad = draw_strain(cfg);
  const WindowModel model(cfg.window_config(res.strain_rad));
  const ScanPlan plan = enumerate_windows(cfg.height, cfg.width, cfg.window_size, cfg.stride_row, cfg.stride_col,
                                          cfg.direction_list());
  res.windows_per_frame = plan.windows.size();
  const AggregationProfile profile = AggregationProfile::make(cfg.profile, cfg.window_size);

  WindowContext ctx;
  ctx.cfg = &cfg;
  ctx.model = &model;
  ctx.truth = &truth;
  ctx.candidates = candidate_set(cfg, Phase::B, cfg.window_size);
  ctx.n_b_candidates = ctx.candidates.size();
  const auto j_set = candidate_set(cfg, Phase::J, cfg.window_size);
  ctx.candidates.insert(ctx.candidates.end(), j_set.begin(), j_set.end());

  FrameState state;
  state.map_estimate = FieldMap(cfg.height, cfg.width, cfg.b_base + cfg.b_amp / 2.0);
  state.global = initial_global_set(cfg);
  for (std::size_t s = 0; s < plan.windows.size(); ++s)
    state.local_sets.push_back(initial_local_set(cfg, static_cast<int>(s)));

  for (int t = 0; t < cfg.frames; ++t) {
    ctx.frame = t;
    std::vector<WindowRecord> records;
    records.reserve(plan.windows.size());
    for (std::size_t s = 0; s < plan.windows.size(); ++s) {
      try {
        records.push_back(process_window(static_cast<int>(s), plan.windows[s], state, ctx));
      } catch (const DegeneracyError&) {
        throw;
      } catch (const std::exception& e) {
        throw NumericError(where(t, static_cast<int>(s)) + ": " + e.what());
      }
    }
    state.map_estimate = aggregate(records, profile, state.map_estimate);
    res.reconstruction.push_back(state.map_estimate);

    for (const auto& r : records) res.clamped_entries += r.clamped_entries;
    for (const auto& r : records)
      for (const auto& st : r.steps) {
        ControlLogEntry e;
        e.frame = t;
        e.window_id = r.window_id;
        e.direction = r.window.direction;
        e.k = st.k;
        e.phase = st.control.phase;
        e.time_s = st.control.time_s;
        e.omega_hz = st.control.omega_hz;
        e.observable = st.control.observable.label();
        e.init = st.init;
        e.eig = st.eig;
        e.score = st.score;
        e.f_b_sum = st.diagnostics.f_b_sum;
        e.f_j = st.diagnostics.f_j;
        e.leakage = st.diagnostics.leakage;
        e.z = st.z;
        e.n_shots = st.control.n_shots;
        res.log.push_back(std::move(e));
      }

    FrameSummary fs;
    fs.frame = t;
    const FieldMap& truth_t = truth.frames[t];
    fs.rmse = rmse(state.map_estimate, truth_t);
    fs.mae = mae(state.map_estimate, truth_t);
    const Overlap ov = dice_iou(state.map_estimate, truth_t, cfg.dice_threshold());
    fs.dice = ov.dice;
    fs.iou = ov.iou;
    const Eigen::VectorXd& v = state.global.weights;
    fs.j_mean = state.global.particles.dot(v);
    fs.j_std = std::sqrt(std::max(0.0, (state.global.particles.array() - fs.j_mean).square().matrix().dot(v)));
    fs.j_bias = fs.j_mean - truth.j_true_hz;
    res.summaries.push_back(fs);
    if (progress) progress(t, fs);

    if (t + 1 == cfg.frames && cfg.window_size >= 2 && !records.empty()) {
      res.benchmark = coupling_benchmark(model, records.back().posterior.b_mean, fs.j_mean, cfg.bench_t_ref,
                                         cfg.bench_n_ref, cfg.fd);
      res.has_benchmark = true;
    }
    if (t + 1 < cfg.frames) {
      Rng prop = stream_rng(cfg.seed, Stream::Propagation, static_cast<std::uint64_t>(t));
      propagate_frame(state, cfg.sigma_dyn, cfg.j_jitter, box_of(cfg), range_of(cfg), prop);
    }
  }
  return res;
}

}  // namespace nvqhl
