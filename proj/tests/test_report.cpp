#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "nvqhl/report.hpp"

using namespace nvqhl;
namespace fs = std::filesystem;

namespace {

FieldMap support(int h, int w, const std::vector<int>& on) {
  FieldMap m(h, w, 0.0);
  for (int k : on) m(k / w, k % w) = 1.0;
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nvqhl_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("error metrics") {
  const FieldMap t = generate_maze_field(12, 12, 50e-6, 5e-6, 2);
  CHECK(rmse(t, t) == 0.0);
  FieldMap off = t;
  off.values.array() += 3e-7;
  CHECK(rmse(off, t) == doctest::Approx(3e-7));
  CHECK(mae(off, t) == doctest::Approx(3e-7));
  CHECK_THROWS_AS(rmse(FieldMap(2, 3), FieldMap(3, 2)), ArgumentError);
}

TEST_CASE("Dice and IoU") {
  std::vector<int> a, b;
  for (int k = 0; k < 100; ++k) a.push_back(k);
  for (int k = 20; k < 120; ++k) b.push_back(k);
  const Overlap o = dice_iou(support(20, 20, a), support(20, 20, b), 0.5);
  CHECK(o.dice == doctest::Approx(0.8));
  CHECK(o.iou == doctest::Approx(80.0 / 120.0));
  const Overlap same = dice_iou(support(4, 4, {1, 2}), support(4, 4, {1, 2}), 0.5);
  CHECK(same.dice == 1.0);
  CHECK(same.iou == 1.0);
  const Overlap apart = dice_iou(support(4, 4, {1}), support(4, 4, {2}), 0.5);
  CHECK(apart.dice == 0.0);
  CHECK(apart.iou == 0.0);
  const Overlap none = dice_iou(FieldMap(3, 3), FieldMap(3, 3), 0.5);
  CHECK(none.empty);
  CHECK(none.dice == 1.0);

  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.4);
  for (int n = 0; n < 50; ++n) {
    FieldMap x(5, 5), y(5, 5);
    for (int k = 0; k < 25; ++k) {
      x.values(k) = coin(rng);
      y.values(k) = coin(rng);
    }
    const Overlap r = dice_iou(x, y, 0.5);
    CHECK(r.dice >= r.iou - 1e-15);
    CHECK(r.dice == doctest::Approx(2 * r.iou / (1 + r.iou)));
  }
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e-4, 1e-4);
  for (int n = 0; n < 200; ++n) {
    const double v = u(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK_THROWS_AS(format_number(NAN), NumericError);
}

TEST_CASE("field CSV round-trip is bit exact") {
  FieldMap m = generate_maze_field(8, 11, 50e-6, 5e-6, 4);
  Rng rng(2);
  m = evolve_truth(m, 50e-9, rng);
  const std::string text = field_csv(m, {"frame=3", "unit=T"});
  CHECK(text.rfind("# frame=3\n# unit=T\n", 0) == 0);
  CHECK(parse_field_csv(text) == m);
  CHECK_THROWS(parse_field_csv("1,2\n3\n"));
}

TEST_CASE("frame summary and control log formats") {
  std::vector<FrameSummary> rows{{0, 1e-6, 5e-7, 0.85, 0.74, 4900, 80, -100}};
  const std::string csv = frame_summary_csv(rows);
  CHECK(csv.substr(0, csv.find('\n')) == "frame,rmse_T,mae_T,dice,iou,J_mean_Hz,J_std_Hz,J_bias_Hz");
  CHECK(csv.find("0,1e-06,5e-07,0.85,0.74,4900,80,-100") != std::string::npos);

  ControlLogEntry e;
  e.frame = 2;
  e.window_id = 17;
  e.direction = Direction::V;
  e.k = 7;
  e.phase = Phase::J;
  e.time_s = 157e-6;
  e.omega_hz = 5e3;
  e.observable = "ZZ1";
  e.init = InitialState::BellPairs;
  e.eig = 0.01;
  e.leakage = 2e-6;
  e.z = 120;
  e.n_shots = 300;
  const std::string line = controls_jsonl({e});
  CHECK(std::count(line.begin(), line.end(), '\n') == 1);
  const auto j = nlohmann::json::parse(line);
  CHECK(j["frame"] == 2);
  CHECK(j["direction"] == "V");
  CHECK(j["phase"] == "J");
  CHECK(j["T_us"].get<double>() == doctest::Approx(157.0));
  CHECK(j["init"] == "BellPairs");
  CHECK(j["z"] == 120);
  CHECK(j["leakage"].get<double>() == 2e-6);
}

TEST_CASE("benchmark json") {
  NvWindowConfig c;
  c.num_sites = 2;
  const CouplingBenchmark bm = coupling_benchmark(WindowModel(c), LocalFieldVector::Constant(2, 50e-6), 5e3, 157e-6, 300);
  const auto j = nlohmann::json::parse(benchmark_json(bm));
  CHECK(j["gain"].get<double>() == bm.gain);
  CHECK(j.contains("sql_bound_hz"));
  CHECK(j.contains("qfi_prod_zero_angular"));
}

TEST_CASE("atomic writes and the output set") {
  const fs::path dir = scratch("out");
  fs::create_directories(dir);
  CHECK_THROWS_AS(write_atomic(dir / "no" / "such" / "a.txt", "x"), IoError);
  write_atomic(dir / "a.txt", "hello\n");
  CHECK(slurp(dir / "a.txt") == "hello\n");
  write_atomic(dir / "a.txt", "again\n");
  CHECK(slurp(dir / "a.txt") == "again\n");
  for (const auto& f : fs::directory_iterator(dir)) CHECK(f.path().filename() == "a.txt");

  ExperimentConfig cfg = desk_config();
  cfg.height = cfg.width = 8;
  cfg.window_size = 2;
  cfg.frames = 2;
  cfg.k_b = cfg.k_j = 1;
  cfg.n_local = 8;
  cfg.n_global = 4;
  const RunResult r = run_experiment(cfg);
  const auto files = write_outputs(dir / "run", r);
  for (const char* name : {"frame_summary.csv", "controls.jsonl", "field_0.csv", "field_1.csv", "truth_0.csv",
                           "truth_1.csv", "benchmark.json", "run_meta.json"})
    CHECK(fs::exists(dir / "run" / name));
  CHECK(files.size() == 8);
  CHECK(read_field_csv(dir / "run" / "field_1.csv") == r.reconstruction[1]);
  CHECK(read_field_csv(dir / "run" / "truth_0.csv") == r.truth.frames[0]);
  const auto meta = nlohmann::json::parse(slurp(dir / "run" / "run_meta.json"));
  CHECK(meta.contains("config"));
  CHECK(meta["windows_per_frame"] == r.windows_per_frame);
  CHECK_THROWS_AS(read_field_csv(dir / "missing.csv"), IoError);
  fs::remove_all(dir);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("defaults and presets") {
  const ExperimentConfig d = default_config();
  CHECK(d.height == 60);
  CHECK(d.window_size == 6);
  CHECK(d.frames == 16);
  CHECK(d.dice_threshold() == doctest::Approx(52.5e-6));
  CHECK_NOTHROW(d.validate());
  const ExperimentConfig desk = desk_config();
  CHECK(desk.height == 24);
  CHECK(desk.window_size == 3);
  CHECK(desk.frames == 8);
  CHECK(desk.n_local == 64);
  CHECK(desk.n_global == 32);
}

TEST_CASE("every key round-trips through set") {
  const ExperimentConfig a = default_config();
  ExperimentConfig b = desk_config();
  for (const auto& [k, v] : a.entries()) b.set(k, v);
  CHECK(a.entries() == b.entries());
}

TEST_CASE("bad keys and values") {
  ExperimentConfig c = default_config();
  CHECK_THROWS_AS(c.set("grid.depth", "3"), ConfigError);
  CHECK_THROWS_AS(c.set("grid.height", "abc"), ConfigError);
  CHECK_THROWS_AS(c.set("model.drive", "Sideways"), ConfigError);
  c.set("controls.b_times", "1e-6, 2e-6");
  CHECK(c.b_times == std::vector<double>{1e-6, 2e-6});
  CHECK_THROWS_AS(c.validate(), ConfigError);  // shots list no longer matches
  c = default_config();
  c.set("metrics.threshold", "5.1e-5");
  CHECK(c.dice_threshold() == 5.1e-5);
  c.set("metrics.threshold", "auto");
  CHECK_FALSE(c.threshold.has_value());
  c.window_size = 61;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config files and overrides") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "a.cfg");
    out << "# desk run\ngrid.height = 30  # rows\n\nscan.directions = V\n";
  }
  const ExperimentConfig c = load_config((dir / "a.cfg").string(), desk_config());
  CHECK(c.height == 30);
  CHECK(c.width == 24);
  CHECK(c.directions == "V");
  {
    std::ofstream out(dir / "b.cfg");
    out << "grid.height = 30\nnonsense\n";
  }
  try {
    load_config((dir / "b.cfg").string());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config((dir / "none.cfg").string()), ConfigError);
  ExperimentConfig o = default_config();
  apply_overrides(o, {"run.seed=7", "particles.local = 32"});
  CHECK(o.seed == 7);
  CHECK(o.n_local == 32);
  CHECK_THROWS_AS(apply_overrides(o, {"run.seed"}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("candidate sets") {
  const ExperimentConfig c = default_config();
  const auto b = candidate_set(c, Phase::B, 6);
  CHECK(b.size() == 3 * 2 * 6);
  CHECK(b[0].control.time_s == 4e-6);
  CHECK(b[0].control.n_shots == 10000);
  CHECK(b.back().control.n_shots == 300);
  CHECK(b[0].init == InitialState::ProductRamsey);
  const auto j = candidate_set(c, Phase::J, 6);
  CHECK(j.size() == 2 * 2 * 5);
  for (const auto& x : j) {
    CHECK(x.control.observable.kind == ObservableSpec::Kind::AdjacentPair);
    CHECK(x.init == InitialState::BellPairs);
    CHECK(x.control.phase == Phase::J);
  }
  const auto j1 = candidate_set(c, Phase::J, 1);
  CHECK(j1.size() == 4);
  CHECK(j1[0].control.observable == ObservableSpec::single(1));
}

}  // TEST_SUITE
