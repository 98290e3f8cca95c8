#include "nvqhl/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nvqhl {

int configured_threads() {
  const char* env = std::getenv("NVQHL_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    const int n = std::stoi(env);
    if (n < 0) throw ArgumentError("NVQHL_THREADS must be >= 0");
    return n;
  } catch (const std::logic_error&) {
    throw ArgumentError(std::string("NVQHL_THREADS is not an integer: ") + env);
  }
}

int apply_thread_setting() {
#ifdef _OPENMP
  const int n = configured_threads();
  if (n > 0) omp_set_num_threads(n);
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

TableBatch empty_batch(const Eigen::MatrixXd& local, const Eigen::VectorXd& global, std::size_t n) {
  TableBatch batch;
  batch.tables.resize(n);
  for (auto& t : batch.tables) {
    t.n_local = local.rows();
    t.n_global = global.size();
    t.p.resize(local.rows() * global.size());
  }
  return batch;
}

// Candidates sharing (omega) share a spectrum; candidates sharing
// (omega, time, init) share an evolved state.
struct StateGroup {
  double time_s;
  InitialState init;
  std::vector<std::size_t> members;
};

struct DriveGroup {
  double omega_hz;
  std::vector<StateGroup> states;
};

std::vector<DriveGroup> group_candidates(std::span<const CandidateSpec> candidates) {
  std::vector<DriveGroup> groups;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& u = candidates[c].control;
    auto g = std::find_if(groups.begin(), groups.end(), [&](const DriveGroup& d) { return d.omega_hz == u.omega_hz; });
    if (g == groups.end()) {
      groups.push_back({u.omega_hz, {}});
      g = groups.end() - 1;
    }
    auto s = std::find_if(g->states.begin(), g->states.end(), [&](const StateGroup& sg) {
      return sg.time_s == u.time_s && sg.init == candidates[c].init;
    });
    if (s == g->states.end()) {
      g->states.push_back({u.time_s, candidates[c].init, {}});
      s = g->states.end() - 1;
    }
    s->members.push_back(c);
  }
  return groups;
}

}  // namespace

TableBatch probability_tables_reference(const WindowModel& model, const Eigen::MatrixXd& local,
                                        const Eigen::VectorXd& global,
                                        std::span<const CandidateSpec> candidates) {
  TableBatch batch = empty_batch(local, global, candidates.size());
  const Eigen::Index n_global = global.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (Eigen::Index i = 0; i < local.rows(); ++i) {
      const LocalFieldVector b = local.row(i).transpose();
      for (Eigen::Index j = 0; j < n_global; ++j) {
        const ProbabilityResult r =
            evaluate_probability(model, b, global(j), candidates[c].control, candidates[c].init);
        batch.tables[c].p(i * n_global + j) = r.p;
        if (r.clamped()) ++batch.clamped_entries;
      }
    }
  }
  return batch;
}

TableBatch probability_tables(const WindowModel& model, const Eigen::MatrixXd& local,
                              const Eigen::VectorXd& global,
                              std::span<const CandidateSpec> candidates) {
  TableBatch batch = empty_batch(local, global, candidates.size());
  if (local.cols() != model.num_sites()) throw ArgumentError("particle width does not match window size");
  for (const auto& c : candidates) {
    if (c.control.n_shots < 1) throw ArgumentError("control needs at least one shot");
    model.observable(c.control.observable);  // validates the site range
  }
  const std::vector<DriveGroup> groups = group_candidates(candidates);
  const Eigen::Index n_global = global.size();
  const long n_pairs = static_cast<long>(local.rows() * n_global);
  long clamped = 0;
  bool failed = false;
  std::string failure;

#pragma omp parallel for schedule(dynamic, 8) reduction(+ : clamped)
  for (long k = 0; k < n_pairs; ++k) {
    const Eigen::Index i = k / n_global;
    const Eigen::Index j = k % n_global;
    try {
      const LocalFieldVector b = local.row(i).transpose();
      for (const DriveGroup& g : groups) {
        const Spectrum spec = model.spectrum(b, global(j), g.omega_hz);
        Eigen::VectorXd coeffs[2];
        bool have[2] = {false, false};
        for (const StateGroup& sg : g.states) {
          const int s = sg.init == InitialState::ProductRamsey ? 0 : 1;
          if (!have[s]) {
            coeffs[s] = spec.project(model.initial_state(sg.init));
            have[s] = true;
          }
          const StateVector psi = spec.evolve_coeffs(coeffs[s], sg.time_s);
          for (std::size_t c : sg.members) {
            const ProbabilityResult r =
                probability_from_expectation(model.sparse_observable(candidates[c].control.observable).expectation(psi));
            batch.tables[c].p(k) = r.p;
            if (r.clamped()) ++clamped;
          }
        }
      }
    } catch (const std::exception& e) {
#pragma omp critical(nvqhl_kernel_error)
      {
        if (!failed) failure = e.what();
        failed = true;
      }
    }
  }
  if (failed) throw NumericError("probability kernel: " + failure);
  batch.clamped_entries = clamped;
  return batch;
}

}  // namespace nvqhl
