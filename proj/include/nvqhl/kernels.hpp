#pragma once

// Likelihood-grid kernels: p(i, j; u) over every (local particle, J particle)
// pair and every candidate control. The OpenMP kernel shares one Hamiltonian
// diagonalisation across all candidates with the same drive amplitude; the
// serial reference evaluates each entry independently through nv_model.

#include <span>
#include <vector>

#include "nvqhl/inference.hpp"

namespace nvqhl {

struct CandidateSpec {
  Control control;
  InitialState init = InitialState::ProductRamsey;
};

struct TableBatch {
  std::vector<ProbabilityTable> tables;  // one per candidate, same order
  long clamped_entries = 0;
};

/// Worker count from NVQHL_THREADS (0 or unset = OpenMP default).
int configured_threads();
/// Applies NVQHL_THREADS to the OpenMP runtime; returns the resulting count.
int apply_thread_setting();

TableBatch probability_tables_reference(const WindowModel& model, const Eigen::MatrixXd& local,
                                        const Eigen::VectorXd& global,
                                        std::span<const CandidateSpec> candidates);

TableBatch probability_tables(const WindowModel& model, const Eigen::MatrixXd& local,
                              const Eigen::VectorXd& global,
                              std::span<const CandidateSpec> candidates);

}  // namespace nvqhl
