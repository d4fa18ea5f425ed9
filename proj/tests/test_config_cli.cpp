#include <filesystem>
#include <fstream>

#include <cstdlib>

#include "doctest.h"
#include "jdatt/cli.hpp"
#include "jdatt/config.hpp"
#include "jdatt/evalkit.hpp"

namespace fs = std::filesystem;
using namespace jdatt;
using config::ConfigError;
using config::RunConfig;

namespace {
fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("jdatt_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Desk defaults shrunk to seconds-scale for CLI round trips.
RunConfig tiny_config(const std::string& root) {
  RunConfig cfg = RunConfig::from_text("");
  cfg.data.root = root;
  cfg.data.train_sequences = 3;
  cfg.data.val_sequences = 2;
  cfg.data.frames = 2;
  cfg.data.canvas = 32;
  cfg.models.restoration_teacher = {8, 1};
  cfg.models.restoration_large = {6, 1};
  cfg.models.restoration_medium = {5, 1};
  cfg.models.restoration_small = {4, 1};
  cfg.models.detector_teacher = {8, 1};
  cfg.models.detector_large = {6, 1};
  cfg.models.detector_medium = {5, 1};
  cfg.models.detector_small = {4, 1};
  cfg.distill.tap_tags = {"rest.stage2", "det.backbone"};
  cfg.train.epochs = 2;
  cfg.train.teacher_epochs = 1;
  cfg.train.warmup_epochs = 0;
  cfg.train.grad_accum_steps = 2;
  cfg.train.windows_per_sequence = 1;
  cfg.eval.latency_warmup = 1;
  cfg.eval.latency_runs = 5;
  return cfg;
}
}  // namespace

TEST_SUITE("config") {

TEST_CASE("toml subset parses sections, types, arrays, comments") {
  const auto table = config::parse_toml("master_seed = 7\n"
                                        "[data]\n"
                                        "root = \"x/y\"  # comment\n"
                                        "frames = 4\n"
                                        "motion_amplitude = 1.5\n"
                                        "[losses]\n"
                                        "tap_tags = [\"a\", \"b\"]\n"
                                        "kl_positives_only = true\n");
  CHECK(table.at("").at("master_seed").i == 7);
  CHECK(table.at("data").at("root").s == "x/y");
  CHECK(table.at("data").at("motion_amplitude").d == 1.5);
  CHECK(table.at("losses").at("tap_tags").arr.size() == 2);
  CHECK(table.at("losses").at("kl_positives_only").b);
}

TEST_CASE("unknown keys are rejected with the key name") {
  CHECK_THROWS_WITH_AS(RunConfig::from_text("[data]\nbogus_key = 1\n"), doctest::Contains("bogus_key"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(RunConfig::from_text("typo_top = 1\n"), doctest::Contains("typo_top"), ConfigError);
}

TEST_CASE("malformed lines and duplicate keys error") {
  CHECK_THROWS_AS(config::parse_toml("not a kv line\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_toml("[data]\nframes = 1\nframes = 2\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("[data]\nframes = \"four\"\n"), ConfigError);
}

TEST_CASE("presets resolve and explicit keys override them") {
  const RunConfig cfg = RunConfig::from_text("[sim]\npreset = \"hard\"\nblur_sigma = 0.2\n");
  CHECK(cfg.sim.tilt_strength == sim::preset_params("hard").tilt_strength);
  CHECK(cfg.sim.blur_sigma == 0.2);
}

TEST_CASE("apply_override has highest precedence") {
  RunConfig cfg = RunConfig::from_text("[train]\nepochs = 4\n");
  cfg.apply_override("train.epochs", "9");
  CHECK(cfg.train.epochs == 9);
  CHECK_THROWS_AS(cfg.apply_override("train.nope", "1"), ConfigError);
}

TEST_CASE("config echo reparses to the same resolved config") {
  RunConfig cfg = RunConfig::from_text("[sim]\npreset = \"easy\"\n[train]\nepochs = 7\n");
  const std::string echoed = cfg.to_toml();
  const RunConfig back = RunConfig::from_text(echoed);
  CHECK(back.train.epochs == 7);
  CHECK(back.sim.blur_sigma == cfg.sim.blur_sigma);
  CHECK(back.to_toml() == echoed);
}

TEST_CASE("ladder validation rejects non-shrinking student stacks") {
  RunConfig cfg = RunConfig::from_text("");
  cfg.models.restoration_small = cfg.models.restoration_teacher;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("gen-data writes a deterministic dataset and refuses to clobber") {
  const auto root = temp_dir("gen");
  RunConfig cfg = tiny_config((root / "d1").string());
  const auto r1 = cli::cmd_gen_data(cfg, "", false);
  CHECK(r1.train_sequences == 3);
  CHECK(fs::exists(fs::path(r1.out_dir) / "train" / "seq_0000" / "frame_0000.png"));
  CHECK(fs::exists(fs::path(r1.out_dir) / "train" / "seq_0000" / "clean_0000.png"));
  CHECK(fs::exists(fs::path(r1.out_dir) / "config.toml"));

  // identical seed -> byte-identical dataset
  cfg.data.root = (root / "d2").string();
  cli::cmd_gen_data(cfg, "", false);
  CHECK(evalkit::dataset_digest((root / "d1").string()) == evalkit::dataset_digest((root / "d2").string()));

  CHECK_THROWS_WITH_AS(cli::cmd_gen_data(cfg, "", false), doctest::Contains("--force"), std::runtime_error);
  CHECK_NOTHROW(cli::cmd_gen_data(cfg, "", true));

  // loadable and sorted
  const auto train = load_dataset((root / "d1" / "train").string());
  CHECK(train.size() == 3);
  CHECK(train[0].degraded.sequence_id == "seq_0000");
}

TEST_CASE("full pipeline: teachers, distill both modes, eval, bench, report") {
  const auto root = temp_dir("pipeline");
  RunConfig cfg = tiny_config((root / "data").string());
  cli::cmd_gen_data(cfg, "", false);

  const auto teachers = cli::cmd_train_teacher(cfg, "", (root / "teachers").string(), "both");
  CHECK(fs::exists(teachers.restoration_ckpt));
  CHECK(fs::exists(teachers.detector_ckpt));
  CHECK(fs::exists(fs::path(teachers.run_dir) / "teacher_restoration_log.jsonl"));

  // frozen-teacher invariant at the file level
  const uint64_t rd = file_digest(teachers.restoration_ckpt);
  const uint64_t dd = file_digest(teachers.detector_ckpt);

  const auto joint =
      cli::cmd_distill(cfg, "", teachers.run_dir, (root / "joint").string(), "joint", "small");
  const auto sep =
      cli::cmd_distill(cfg, "", teachers.run_dir, (root / "separate").string(), "separate", "small");
  CHECK(fs::exists(joint.student_restoration_ckpt));
  CHECK(fs::exists(fs::path(joint.run_dir) / "distill_log.jsonl"));
  CHECK(file_digest(teachers.restoration_ckpt) == rd);
  CHECK(file_digest(teachers.detector_ckpt) == dd);

  // eval produces the report files; rerunning reproduces report.json exactly
  const std::string eval1 = cli::cmd_eval(cfg, "", teachers.run_dir, joint.run_dir, sep.run_dir, {},
                                          (root / "eval1").string());
  CHECK(fs::exists(fs::path(eval1) / "report.json"));
  CHECK(fs::exists(fs::path(eval1) / "scatter_params_map.png"));
  const std::string eval2 = cli::cmd_eval(cfg, "", teachers.run_dir, joint.run_dir, sep.run_dir, {},
                                          (root / "eval2").string());
  CHECK(file_digest((fs::path(eval1) / "report.json").string()) ==
        file_digest((fs::path(eval2) / "report.json").string()));

  const auto report = evalkit::report_from_json([&] {
    std::ifstream in(fs::path(eval1) / "report.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }());
  CHECK(report.systems.size() == 4);  // distorted, teacher, joint, separate
  for (const auto& s : report.systems) CHECK_FALSE(s.latency_total_ms.has_value());

  // bench + merge
  const std::string bench = cli::cmd_bench(cfg, teachers.run_dir, joint.run_dir, sep.run_dir,
                                           (root / "bench").string());
  CHECK(fs::exists(fs::path(bench) / "bench.json"));
  const std::string merged = cli::cmd_report({(fs::path(eval1) / "report.json").string()},
                                             (fs::path(bench) / "bench.json").string(),
                                             (root / "report").string());
  const auto merged_report = evalkit::report_from_json([&] {
    std::ifstream in(fs::path(merged) / "report.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }());
  bool teacher_has_latency = false;
  for (const auto& s : merged_report.systems)
    if (s.name == "teacher" && s.latency_total_ms) teacher_has_latency = true;
  CHECK(teacher_has_latency);
}

TEST_CASE("preset parameters are echoed into every sequence meta") {
  const auto root = temp_dir("preset_meta");
  RunConfig cfg = tiny_config((root / "data").string());
  cfg.sim_preset = "hard";
  const SimParams hard = sim::preset_params("hard");
  cfg.sim.tilt_strength = hard.tilt_strength;
  cfg.sim.tilt_correlation_length = hard.tilt_correlation_length;
  cfg.sim.blur_sigma = hard.blur_sigma;
  cfg.sim.scintillation_strength = hard.scintillation_strength;
  cfg.sim.temporal_rho = hard.temporal_rho;
  cli::cmd_gen_data(cfg, "", false);
  const auto samples = load_dataset((root / "data" / "train").string());
  REQUIRE_FALSE(samples.empty());
  CHECK(samples[0].sim_params.blur_sigma == hard.blur_sigma);
  CHECK(samples[0].sim_params.scintillation_strength == hard.scintillation_strength);
}

TEST_CASE("JDATT_THREADS caps the worker count") {
  setenv("JDATT_THREADS", "1", 1);
  CHECK(cli::worker_count() == 1);
  setenv("JDATT_THREADS", "3", 1);
  CHECK(cli::worker_count() == 3);
  unsetenv("JDATT_THREADS");
  CHECK(cli::worker_count() >= 1);
}

TEST_CASE("missing teacher checkpoints give an actionable error") {
  const auto root = temp_dir("missing_teachers");
  RunConfig cfg = tiny_config((root / "data").string());
  cli::cmd_gen_data(cfg, "", false);
  CHECK_THROWS_WITH_AS(
      cli::cmd_distill(cfg, "", (root / "nowhere").string(), (root / "out").string(), "joint", "small"),
      doctest::Contains("teacher_restoration.ckpt"), std::runtime_error);
}

TEST_CASE("cli exit codes: 0 success, 2 config error") {
  const auto root = temp_dir("exit_codes");
  // config error: unknown key via --set
  const char* bad[] = {"jdatt", "--set", "data.bogus=1", "gen-data", "--out", "ignored"};
  CHECK(cli::run(6, bad) == 2);

  // success path: gen-data with a tiny config file
  RunConfig cfg = tiny_config((root / "data").string());
  const std::string cfg_path = (root / "cfg.toml").string();
  std::ofstream(cfg_path) << cfg.to_toml();
  const std::string out = (root / "data").string();
  const char* ok[] = {"jdatt", "--config", cfg_path.c_str(), "gen-data"};
  CHECK(cli::run(4, ok) == 0);

  // runtime failure: same run again without --force
  CHECK(cli::run(4, ok) == 1);

  // unknown flag -> 2
  const char* unknown[] = {"jdatt", "--frobnicate", "gen-data"};
  CHECK(cli::run(3, unknown) == 2);
}

}  // TEST_SUITE
