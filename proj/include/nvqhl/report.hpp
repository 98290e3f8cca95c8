#pragma once

// Metrics and output artifacts: frame_summary.csv, controls.jsonl, field
// dumps, benchmark.json and run_meta.json. Numbers are written in shortest
// round-trip form so every dump reloads bit-exactly.

#include <filesystem>
#include <string>
#include <vector>

#include "nvqhl/pipeline.hpp"

namespace nvqhl {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double rmse(const FieldMap& est, const FieldMap& truth);
double mae(const FieldMap& est, const FieldMap& truth);

struct Overlap {
  double dice = 1.0;
  double iou = 1.0;
  bool empty = false;  // both supports empty
};
Overlap dice_iou(const FieldMap& est, const FieldMap& truth, double threshold);

std::string format_number(double v);

/// H lines of W comma-separated values; optional `# key=value` header lines.
std::string field_csv(const FieldMap& map, const std::vector<std::string>& header = {});
FieldMap parse_field_csv(const std::string& text);
FieldMap read_field_csv(const std::filesystem::path& path);

std::string frame_summary_csv(const std::vector<FrameSummary>& rows);
std::string controls_jsonl(const std::vector<ControlLogEntry>& log);
std::string benchmark_json(const CouplingBenchmark& b);
std::string run_meta_json(const RunResult& r);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// Writes the truth frames (truth_{t}.csv with a metadata header) into `dir`.
std::vector<std::filesystem::path> write_truth(const std::filesystem::path& dir, const TruthSequence& truth);

/// Writes the whole artifact set; on failure removes whatever this call created and rethrows.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const RunResult& r);

}  // namespace nvqhl
