#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "nvqhl/kernels.hpp"
#include "nvqhl/pipeline.hpp"
#include "nvqhl/report.hpp"
#include "nvqhl/selftest.hpp"

namespace fs = std::filesystem;
using namespace nvqhl;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset = "full";
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<std::string> directions;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
  cmd->add_option("--config", o.config_path, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "base values before --config: full or desk")
      ->check(CLI::IsMember({"full", "desk"}));
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--frames", o.frames, "number of frames");
  cmd->add_option("--directions", o.directions, "scan directions in processing order, e.g. HV, H, V");
  cmd->add_option("--set", o.overrides, "override a config key, key=value (repeatable)");
  if (with_out) cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_flag("--quiet", o.quiet, "no per-frame progress");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.preset == "desk" ? desk_config() : default_config();
  if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
  apply_overrides(cfg, o.overrides);
  if (o.seed) cfg.seed = *o.seed;
  if (o.frames) cfg.frames = *o.frames;
  if (o.directions) cfg.directions = *o.directions;
  cfg.validate();
  return cfg;
}

ProgressFn progress_printer(bool quiet, const std::string& tag) {
  if (quiet) return {};
  return [tag](int t, const FrameSummary& s) {
    std::fprintf(stderr, "%sframe %d  rmse %.4g T  dice %.4f  J %.1f +/- %.1f Hz\n", tag.c_str(), t, s.rmse, s.dice,
                 s.j_mean, s.j_std);
  };
}

int cmd_generate_truth(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const auto files = write_truth(o.out_dir, make_truth(cfg));
  std::cout << "wrote " << files.size() << " truth frames to " << o.out_dir << "\n";
  return 0;
}

int cmd_run(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const int threads = apply_thread_setting();
  const auto start = std::chrono::steady_clock::now();
  if (!o.quiet) std::fprintf(stderr, "threads %d\n", threads);
  const RunResult r = run_experiment(cfg, progress_printer(o.quiet, ""));
  const auto files = write_outputs(o.out_dir, r);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& last = r.summaries.back();
  std::cout << "final rmse " << format_number(last.rmse) << " T, dice " << format_number(last.dice) << ", J "
            << format_number(last.j_mean) << " Hz (" << files.size() << " files in " << o.out_dir << ", "
            << static_cast<int>(secs) << " s)\n";
  return 0;
}

int cmd_compare_scans(const CommonOptions& o, int n_seeds) {
  const ExperimentConfig base = resolve(o);
  apply_thread_setting();
  const fs::path dir = o.out_dir;
  std::string csv = "seed,scan,frame,rmse_T,mae_T,dice,iou\n";
  std::string final_csv = "seed,scan,final_rmse_T,final_mae_T,final_dice\n";
  int wins = 0;
  for (int s = 0; s < n_seeds; ++s) {
    ExperimentConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(s);
    const TruthSequence truth = make_truth(cfg);
    double best_single = 1e300, hv = 0.0;
    for (const std::string scan : {"H", "V", "HV"}) {
      cfg.directions = scan;
      const RunResult r = run_experiment(cfg, truth, progress_printer(o.quiet, "seed " + std::to_string(cfg.seed) + " " + scan + ": "));
      write_outputs(dir / ("seed_" + std::to_string(cfg.seed)) / scan, r);
      for (const auto& f : r.summaries)
        csv += std::to_string(cfg.seed) + "," + scan + "," + std::to_string(f.frame) + "," + format_number(f.rmse) +
               "," + format_number(f.mae) + "," + format_number(f.dice) + "," + format_number(f.iou) + "\n";
      const auto& last = r.summaries.back();
      final_csv += std::to_string(cfg.seed) + "," + scan + "," + format_number(last.rmse) + "," +
                   format_number(last.mae) + "," + format_number(last.dice) + "\n";
      if (scan == "HV") hv = last.rmse;
      else best_single = std::min(best_single, last.rmse);
    }
    if (hv <= best_single) ++wins;
  }
  write_atomic(dir / "compare_scans.csv", csv);
  write_atomic(dir / "compare_scans_final.csv", final_csv);
  std::cout << "H+V lowest final RMSE in " << wins << " of " << n_seeds << " seeds\n";
  return 0;
}

int cmd_benchmark(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  if (cfg.window_size < 2) throw ConfigError("benchmark-metrology needs window.size >= 2");
  const WindowModel model(cfg.window_config(draw_strain(cfg)));
  const LocalFieldVector b = LocalFieldVector::Constant(cfg.window_size, cfg.b_base);
  const CouplingBenchmark bm = coupling_benchmark(model, b, cfg.j_true, cfg.bench_t_ref, cfg.bench_n_ref, cfg.fd);
  fs::create_directories(o.out_dir);
  write_atomic(fs::path(o.out_dir) / "benchmark.json", benchmark_json(bm));
  std::cout << benchmark_json(bm);
  return 0;
}

int cmd_show_config(const CommonOptions& o) {
  for (const auto& [k, v] : resolve(o).entries()) std::cout << k << " = " << v << "\n";
  return 0;
}

int cmd_validate() {
  int failed = 0;
  for (const auto& c : run_self_tests()) {
    std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
    failed += !c.pass;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Bayesian NV field-map reconstruction"};
  app.require_subcommand(1);

  CommonOptions truth_opts, run_opts, cmp_opts, bench_opts, show_opts;
  int n_seeds = 5;
  auto* gen = app.add_subcommand("generate-truth", "write the ground-truth frames");
  add_common(gen, truth_opts);
  auto* run = app.add_subcommand("run", "full reconstruction experiment");
  add_common(run, run_opts);
  auto* cmp = app.add_subcommand("compare-scans", "H, V and H+V runs on a shared truth, over several seeds");
  add_common(cmp, cmp_opts);
  cmp->add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  auto* bench = app.add_subcommand("benchmark-metrology", "coupling QFI benchmark for one window");
  add_common(bench, bench_opts);
  auto* show = app.add_subcommand("show-config", "print the resolved configuration as a config file");
  add_common(show, show_opts, false);
  auto* val = app.add_subcommand("validate", "invariant self-tests");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate_truth(truth_opts);
    if (run->parsed()) return cmd_run(run_opts);
    if (cmp->parsed()) return cmd_compare_scans(cmp_opts, n_seeds);
    if (bench->parsed()) return cmd_benchmark(bench_opts);
    if (show->parsed()) return cmd_show_config(show_opts);
    if (val->parsed()) return cmd_validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
