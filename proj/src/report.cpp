#include "nvqhl/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nvqhl {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void same_shape(const FieldMap& a, const FieldMap& b) {
  if (a.height != b.height || a.width != b.width) throw ArgumentError("field maps differ in shape");
}

}  // namespace

double rmse(const FieldMap& est, const FieldMap& truth) {
  same_shape(est, truth);
  return std::sqrt((est.values - truth.values).array().square().mean());
}

double mae(const FieldMap& est, const FieldMap& truth) {
  same_shape(est, truth);
  return (est.values - truth.values).array().abs().mean();
}

Overlap dice_iou(const FieldMap& est, const FieldMap& truth, double threshold) {
  same_shape(est, truth);
  long a = 0, b = 0, both = 0;
  for (int y = 0; y < est.height; ++y)
    for (int x = 0; x < est.width; ++x) {
      const bool in_a = est(y, x) > threshold;
      const bool in_b = truth(y, x) > threshold;
      a += in_a;
      b += in_b;
      both += in_a && in_b;
    }
  Overlap o;
  if (a + b == 0) {
    o.empty = true;
    return o;
  }
  o.dice = 2.0 * both / static_cast<double>(a + b);
  o.iou = both / static_cast<double>(a + b - both);
  return o;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw NumericError("refusing to write a non-finite number");
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string field_csv(const FieldMap& map, const std::vector<std::string>& header) {
  std::string out;
  for (const auto& h : header) out += "# " + h + "\n";
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (x) out += ',';
      out += format_number(map(y, x));
    }
    out += '\n';
  }
  return out;
}

FieldMap parse_field_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc()) throw IoError("field csv: bad number in line '" + line + "'");
      row.push_back(v);
      p = r.ptr;
      if (p < end) {
        if (*p != ',') throw IoError("field csv: expected ',' in line '" + line + "'");
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) throw IoError("field csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows[0].empty()) throw IoError("field csv: no data");
  FieldMap m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m(y, x) = rows[y][x];
  return m;
}

FieldMap read_field_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_field_csv(ss.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string frame_summary_csv(const std::vector<FrameSummary>& rows) {
  std::string out = "frame,rmse_T,mae_T,dice,iou,J_mean_Hz,J_std_Hz,J_bias_Hz\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame);
    for (double v : {r.rmse, r.mae, r.dice, r.iou, r.j_mean, r.j_std, r.j_bias}) out += "," + format_number(v);
    out += '\n';
  }
  return out;
}

std::string controls_jsonl(const std::vector<ControlLogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    ordered_json j;
    j["frame"] = e.frame;
    j["window"] = e.window_id;
    j["direction"] = e.direction == Direction::H ? "H" : "V";
    j["k"] = e.k;
    j["phase"] = to_string(e.phase);
    j["T_us"] = e.time_s * 1e6;
    j["omega_Hz"] = e.omega_hz;
    j["observable"] = e.observable;
    j["init"] = to_string(e.init);
    j["eig"] = e.eig;
    j["score"] = e.score;
    j["F_B_sum"] = e.f_b_sum;
    j["F_J"] = e.f_j;
    j["leakage"] = e.leakage;
    j["z"] = e.z;
    j["n_shots"] = e.n_shots;
    out += j.dump() + '\n';
  }
  return out;
}

namespace {

ordered_json benchmark_object(const CouplingBenchmark& b) {
  ordered_json j;
  j["num_sites"] = b.num_sites;
  j["generator_variance"] = b.generator_variance;
  j["spectral_gap"] = b.spectral_gap;
  j["qfi_prod_zero"] = b.qfi_prod_zero;
  j["qfi_opt_zero"] = b.qfi_opt_zero;
  j["qfi_prod_zero_angular"] = b.qfi_prod_zero_angular;
  j["qfi_opt_zero_angular"] = b.qfi_opt_zero_angular;
  j["optimal_state_qfi"] = b.optimal_state_qfi;
  j["gain"] = b.gain;
  j["eta_m"] = b.eta_m;
  j["t_ref_s"] = b.t_ref_s;
  j["n_ref"] = b.n_ref;
  j["qfi_prod_t"] = b.qfi_prod_t;
  j["qfi_opt_t_extrapolated"] = b.qfi_opt_t_extrapolated;
  j["sql_bound_hz"] = b.sql_bound_hz;
  j["ideal_bound_hz"] = b.ideal_bound_hz;
  return j;
}

}  // namespace

std::string benchmark_json(const CouplingBenchmark& b) { return benchmark_object(b).dump(2) + '\n'; }

std::string run_meta_json(const RunResult& r) {
  ordered_json j;
  ordered_json cfg;
  for (const auto& [k, v] : r.config.entries()) cfg[k] = v;
  j["config"] = cfg;
  ordered_json seeds;
  seeds["master"] = r.config.seed;
  const std::pair<const char*, Stream> streams[] = {
      {"truth_generation", Stream::TruthGen}, {"truth_drift", Stream::TruthDrift},
      {"measurement", Stream::Measurement},   {"particle_init", Stream::ParticleInit},
      {"rejuvenation", Stream::Rejuvenation}, {"propagation", Stream::Propagation},
      {"strain", Stream::Strain}};
  for (const auto& [name, s] : streams) seeds[name] = mix_seed(r.config.seed, s);
  j["seeds"] = seeds;
  j["strain_rad_s"] = r.strain_rad;
  j["windows_per_frame"] = r.windows_per_frame;
  j["clamped_probability_entries"] = r.clamped_entries;
  j["dice_threshold_T"] = r.config.dice_threshold();
  j["code_version"] = NVQHL_VERSION;
  return j.dump(2) + '\n';
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

namespace {

std::vector<std::string> truth_header(const TruthSequence& truth, int t) {
  return {"frame=" + std::to_string(t), "seed=" + std::to_string(truth.seed),
          "J_true_Hz=" + format_number(truth.j_true_hz), "sigma_true_T=" + format_number(truth.sigma_true),
          "B_base_T=" + format_number(truth.b_base), "B_amp_T=" + format_number(truth.b_amp)};
}

// Removes everything written so far if an exception escapes.
class Transaction {
 public:
  void add(const fs::path& p, const std::string& text) {
    write_atomic(p, text);
    written_.push_back(p);
  }
  std::vector<fs::path> commit() {
    done_ = true;
    return written_;
  }
  ~Transaction() {
    if (done_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

 private:
  std::vector<fs::path> written_;
  bool done_ = false;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<fs::path> write_truth(const fs::path& dir, const TruthSequence& truth) {
  ensure_dir(dir);
  Transaction tx;
  for (std::size_t t = 0; t < truth.frames.size(); ++t)
    tx.add(dir / ("truth_" + std::to_string(t) + ".csv"),
           field_csv(truth.frames[t], truth_header(truth, static_cast<int>(t))));
  return tx.commit();
}

std::vector<fs::path> write_outputs(const fs::path& dir, const RunResult& r) {
  ensure_dir(dir);
  Transaction tx;
  tx.add(dir / "frame_summary.csv", frame_summary_csv(r.summaries));
  tx.add(dir / "controls.jsonl", controls_jsonl(r.log));
  for (std::size_t t = 0; t < r.reconstruction.size(); ++t) {
    tx.add(dir / ("field_" + std::to_string(t) + ".csv"), field_csv(r.reconstruction[t]));
    tx.add(dir / ("truth_" + std::to_string(t) + ".csv"),
           field_csv(r.truth.frames[t], truth_header(r.truth, static_cast<int>(t))));
  }
  if (r.has_benchmark) tx.add(dir / "benchmark.json", benchmark_json(r.benchmark));
  tx.add(dir / "run_meta.json", run_meta_json(r));
  return tx.commit();
}

}  // namespace nvqhl
