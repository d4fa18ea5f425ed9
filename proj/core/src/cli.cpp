#include "jdatt/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "jdatt/checkpoint.hpp"
#include "jdatt/distill.hpp"
#include "jdatt/evalkit.hpp"
#include "jdatt/rng.hpp"
#include "jdatt/sim.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace jdatt::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bool dir_non_empty(const fs::path& p) {
  return fs::exists(p) && fs::is_directory(p) && fs::directory_iterator(p) != fs::directory_iterator();
}

/// Fresh run directory: the explicit path must be unused; otherwise a
/// timestamp+seed name under `base` (completed runs are never overwritten).
std::string make_run_dir(const std::string& explicit_out, const std::string& base, uint64_t seed) {
  if (!explicit_out.empty()) {
    if (dir_non_empty(explicit_out))
      throw std::runtime_error("output directory already exists and is not empty: " + explicit_out);
    fs::create_directories(explicit_out);
    return explicit_out;
  }
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::gmtime(&tt));
  std::string dir = base + "/" + stamp + "-seed" + std::to_string(seed);
  int suffix = 1;
  std::string candidate = dir;
  while (fs::exists(candidate)) candidate = dir + "-" + std::to_string(++suffix);
  fs::create_directories(candidate);
  return candidate;
}

sim::SceneSpec scene_spec_from(const config::RunConfig& cfg, Rng& rng) {
  sim::SceneSpec spec;
  spec.num_objects = cfg.data.num_objects_min +
                     static_cast<int>(rng.uniform_int(cfg.data.num_objects_max - cfg.data.num_objects_min + 1));
  spec.num_classes = cfg.data.num_classes;
  spec.canvas_h = cfg.data.canvas;
  spec.canvas_w = cfg.data.canvas;
  spec.frames = cfg.data.frames;
  spec.motion_amplitude = cfg.data.motion_amplitude;
  spec.channels = cfg.data.channels;
  return spec;
}

AnnotatedSample build_sample(const config::RunConfig& cfg, int global_index, const std::string& id) {
  const uint64_t seq_seed = derive_seed(cfg.master_seed, static_cast<uint64_t>(global_index));
  Rng rng(derive_seed(seq_seed, 0x5CE7E));
  const sim::SceneSpec spec = scene_spec_from(cfg, rng);
  auto [clean, gts] = sim::generate_scene(spec, derive_seed(seq_seed, 1));

  SimParams params = cfg.sim;
  params.seed = derive_seed(seq_seed, 2);
  AnnotatedSample sample;
  clean.sequence_id = id;
  sample.clean = clean;
  sample.degraded = sim::degrade(clean, params);
  sample.degraded.sequence_id = id;
  sample.ground_truth = std::move(gts);
  sample.sim_params = params;
  return sample;
}

std::string seq_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "seq_%04d", index);
  return buf;
}

struct LoadedTeachers {
  std::shared_ptr<nets::RestorationModel> restorer;
  std::shared_ptr<nets::DetectorModel> detector;
};

nets::ModelSpec spec_from_meta(const std::string& meta_json) {
  const json meta = json::parse(meta_json);
  return nets::ModelSpec::from_json(meta.at("model_spec").dump());
}

std::shared_ptr<nets::RestorationModel> load_restoration(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  auto model = std::make_shared<nets::RestorationModel>(spec_from_meta(ckpt.meta_json), 0);
  model->load_state(ckpt);
  return model;
}

std::shared_ptr<nets::DetectorModel> load_detector(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  auto model = std::make_shared<nets::DetectorModel>(spec_from_meta(ckpt.meta_json), 0);
  model->load_state(ckpt);
  return model;
}

LoadedTeachers load_teachers(const std::string& teachers_dir) {
  const fs::path r = fs::path(teachers_dir) / "teacher_restoration.ckpt";
  const fs::path d = fs::path(teachers_dir) / "teacher_detector.ckpt";
  for (const auto& p : {r, d})
    if (!fs::exists(p))
      throw std::runtime_error("missing teacher checkpoint: " + p.string() +
                               " (run `jdatt train-teacher` first)");
  LoadedTeachers t;
  t.restorer = load_restoration(r.string());
  t.detector = load_detector(d.string());
  t.restorer->set_trainable(false);
  t.detector->set_trainable(false);
  return t;
}

struct LoadedStudents {
  std::shared_ptr<nets::RestorationModel> restorer;
  std::shared_ptr<nets::DetectorModel> detector;
};

LoadedStudents load_students(const std::string& run_dir) {
  const fs::path r = fs::path(run_dir) / "student_restoration.ckpt";
  const fs::path d = fs::path(run_dir) / "student_detector.ckpt";
  for (const auto& p : {r, d})
    if (!fs::exists(p)) throw std::runtime_error("missing student checkpoint: " + p.string());
  return LoadedStudents{load_restoration(r.string()), load_detector(d.string())};
}

}  // namespace

int worker_count() {
  const char* env = std::getenv("JDATT_THREADS");
  if (env) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

GenDataResult cmd_gen_data(const config::RunConfig& cfg, const std::string& out_dir, bool force) {
  const std::string out = out_dir.empty() ? cfg.data.root : out_dir;
  if (dir_non_empty(out) && !force)
    throw std::runtime_error("output directory not empty (use --force to overwrite): " + out);
  if (force && fs::exists(out)) fs::remove_all(out);
  fs::create_directories(out);

  const int total = cfg.data.train_sequences + cfg.data.val_sequences;
  std::atomic<int> next{0};
  const int workers = std::min(worker_count(), std::max(total, 1));
  std::vector<std::thread> pool;
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;

  auto work = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= total || failed.load()) break;
      try {
        const bool is_train = i < cfg.data.train_sequences;
        const std::string split = is_train ? "train" : "val";
        AnnotatedSample sample = build_sample(cfg, i, seq_id(i));
        save_dataset({sample}, out + "/" + split, cfg.master_seed);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        failed = true;
        error_message = e.what();
      }
    }
  };
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failed) throw std::runtime_error("data generation failed: " + error_message);

  write_text(fs::path(out) / "config.toml", cfg.to_toml());
  return GenDataResult{cfg.data.train_sequences, cfg.data.val_sequences, out};
}

TrainTeacherResult cmd_train_teacher(const config::RunConfig& cfg, const std::string& data_root,
                                     const std::string& out_dir, const std::string& kind) {
  const std::string root = data_root.empty() ? cfg.data.root + "/train" : data_root;
  const auto train = load_dataset(root);
  if (train.empty()) throw std::runtime_error("no training sequences under " + root);

  TrainTeacherResult result;
  result.run_dir = make_run_dir(out_dir, "runs/teacher", cfg.master_seed);
  write_text(fs::path(result.run_dir) / "config.toml", cfg.to_toml());

  const bool do_rest = kind == "restoration" || kind == "both";
  const bool do_det = kind == "detector" || kind == "both";
  if (!do_rest && !do_det) throw std::runtime_error("unknown teacher kind: " + kind);

  if (do_rest) {
    const auto spec = cfg.models.spec_for(nets::ModelKind::restoration, nets::Variant::teacher, cfg.data.num_classes);
    std::ofstream log(fs::path(result.run_dir) / "teacher_restoration_log.jsonl", std::ios::binary);
    auto model = distill::train_restoration_teacher(
        train, spec, cfg.train_config(distill::TrainMode::teacher_restoration), cfg.distill.epsilon, nullptr, &log);
    result.restoration_ckpt = (fs::path(result.run_dir) / "teacher_restoration.ckpt").string();
    save_checkpoint(result.restoration_ckpt, model->to_checkpoint());
  }
  if (do_det) {
    const auto spec = cfg.models.spec_for(nets::ModelKind::detector, nets::Variant::teacher, cfg.data.num_classes);
    std::ofstream log(fs::path(result.run_dir) / "teacher_detector_log.jsonl", std::ios::binary);
    auto model = distill::train_detector_teacher(
        train, spec, cfg.train_config(distill::TrainMode::teacher_detector), cfg.detection, nullptr, &log);
    result.detector_ckpt = (fs::path(result.run_dir) / "teacher_detector.ckpt").string();
    save_checkpoint(result.detector_ckpt, model->to_checkpoint());
  }
  return result;
}

DistillCmdResult cmd_distill(const config::RunConfig& cfg, const std::string& data_root,
                             const std::string& teachers_dir, const std::string& out_dir, const std::string& mode,
                             const std::string& variant) {
  const std::string root = data_root.empty() ? cfg.data.root + "/train" : data_root;
  const auto train = load_dataset(root);
  if (train.empty()) throw std::runtime_error("no training sequences under " + root);
  LoadedTeachers teachers = load_teachers(teachers_dir);

  const nets::Variant v = nets::variant_from_string(variant);
  if (v == nets::Variant::teacher) throw std::runtime_error("distill: student variant must be large|medium|small");
  const auto sr_spec = cfg.models.spec_for(nets::ModelKind::restoration, v, cfg.data.num_classes);
  const auto sd_spec = cfg.models.spec_for(nets::ModelKind::detector, v, cfg.data.num_classes);

  const distill::TrainMode m = distill::mode_from_string(mode);
  if (m != distill::TrainMode::joint && m != distill::TrainMode::separate)
    throw std::runtime_error("distill: mode must be joint or separate");

  DistillCmdResult result;
  result.run_dir = make_run_dir(out_dir, "runs/distill", cfg.master_seed);
  write_text(fs::path(result.run_dir) / "config.toml", cfg.to_toml());

  std::ofstream log(fs::path(result.run_dir) / "distill_log.jsonl", std::ios::binary);
  distill::DistillResult dr;
  if (m == distill::TrainMode::joint)
    dr = distill::distill_joint(train, *teachers.restorer, *teachers.detector, sr_spec, sd_spec, cfg.distill,
                                cfg.train_config(m), cfg.detection, &log);
  else
    dr = distill::distill_separate(train, *teachers.restorer, *teachers.detector, sr_spec, sd_spec, cfg.distill,
                                   cfg.train_config(m), cfg.detection, &log);

  result.student_restoration_ckpt = (fs::path(result.run_dir) / "student_restoration.ckpt").string();
  result.student_detector_ckpt = (fs::path(result.run_dir) / "student_detector.ckpt").string();
  save_checkpoint(result.student_restoration_ckpt, dr.student_restorer->to_checkpoint());
  save_checkpoint(result.student_detector_ckpt, dr.student_detector->to_checkpoint());

  // Aligners and generators, namespaced by tap tag.
  Checkpoint aux;
  aux.meta_json = json{{"mode", mode}, {"variant", variant}}.dump();
  for (const auto& [tag, aligner] : dr.aligners)
    for (const auto& [name, tensor] : aligner->bag().state()) aux.tensors.emplace_back(tag + "/" + name, tensor);
  for (const auto& [tag, gen] : dr.generators)
    for (const auto& [name, tensor] : gen->bag().state()) aux.tensors.emplace_back(tag + "/" + name, tensor);
  save_checkpoint((fs::path(result.run_dir) / "distill_aux.ckpt").string(), aux);

  json summary{{"mode", mode},
               {"variant", variant},
               {"steps", dr.state.step},
               {"final_lr", dr.state.lr_current},
               {"final_loss", dr.state.loss_history.empty() ? 0.0 : dr.state.loss_history.back().total}};
  write_text(fs::path(result.run_dir) / "summary.json", summary.dump(2) + "\n");
  return result;
}

std::string cmd_eval(const config::RunConfig& cfg, const std::string& data_root, const std::string& teachers_dir,
                     const std::string& joint_dir, const std::string& separate_dir,
                     const std::vector<std::string>& systems, const std::string& out_dir) {
  const std::string root = data_root.empty() ? cfg.data.root + "/val" : data_root;
  const auto val = load_dataset(root);
  if (val.empty()) throw std::runtime_error("no validation sequences under " + root);

  std::vector<std::string> wanted = systems;
  if (wanted.empty()) {
    wanted = {"distorted", "teacher"};
    if (!joint_dir.empty()) wanted.push_back("joint");
    if (!separate_dir.empty()) wanted.push_back("separate");
  }

  evalkit::EvalParams params;
  params.score_threshold = cfg.eval.score_threshold;
  params.nms_iou = cfg.eval.nms_iou;
  params.max_detections = cfg.eval.max_detections;

  LoadedTeachers teachers;
  const bool needs_teachers = true;  // distorted and teacher rows use the teacher detector
  if (needs_teachers) teachers = load_teachers(teachers_dir);

  evalkit::EvalReport report;
  for (const auto& name : wanted) {
    if (name == "distorted") {
      report.systems.push_back(evalkit::evaluate_system(name, val, nullptr, teachers.detector.get(), params));
    } else if (name == "teacher") {
      report.systems.push_back(
          evalkit::evaluate_system(name, val, teachers.restorer.get(), teachers.detector.get(), params));
    } else if (name == "joint" || name == "separate") {
      const std::string dir = name == "joint" ? joint_dir : separate_dir;
      if (dir.empty()) throw std::runtime_error("system '" + name + "' requested but no --" + name + " directory given");
      LoadedStudents students = load_students(dir);
      report.systems.push_back(
          evalkit::evaluate_system(name, val, students.restorer.get(), students.detector.get(), params));
    } else {
      throw std::runtime_error("unknown system: " + name);
    }
  }

  json meta{{"master_seed", cfg.master_seed},
            {"data_root", root},
            {"dataset_digest", evalkit::dataset_digest(root)},
            {"config_toml", cfg.to_toml()}};
  report.metadata_json = meta.dump();

  const std::string out = out_dir.empty() ? make_run_dir("", "runs/eval", cfg.master_seed) : [&] {
    if (dir_non_empty(out_dir)) throw std::runtime_error("output directory already exists and is not empty: " + out_dir);
    fs::create_directories(out_dir);
    return out_dir;
  }();
  evalkit::write_report_files(report, out);
  write_text(fs::path(out) / "config.toml", cfg.to_toml());
  return out;
}

std::string cmd_bench(const config::RunConfig& cfg, const std::string& teachers_dir, const std::string& joint_dir,
                      const std::string& separate_dir, const std::string& out_dir) {
  json result;
  result["warmup"] = cfg.eval.latency_warmup;
  result["runs"] = cfg.eval.latency_runs;
  result["canvas"] = cfg.data.canvas;
  json systems = json::object();

  auto bench_pair = [&](const nets::RestorationModel& r, const nets::DetectorModel& d) {
    const double rest_ms =
        evalkit::latency_restoration_ms(r, cfg.data.canvas, cfg.data.canvas, cfg.eval.latency_warmup, cfg.eval.latency_runs);
    const double det_ms =
        evalkit::latency_detector_ms(d, cfg.data.canvas, cfg.data.canvas, cfg.eval.latency_warmup, cfg.eval.latency_runs);
    return json{{"restorer_ms", rest_ms}, {"detector_ms", det_ms}, {"pipeline_ms", rest_ms + det_ms}};
  };

  LoadedTeachers teachers = load_teachers(teachers_dir);
  systems["teacher"] = bench_pair(*teachers.restorer, *teachers.detector);
  if (!joint_dir.empty()) {
    LoadedStudents s = load_students(joint_dir);
    systems["joint"] = bench_pair(*s.restorer, *s.detector);
  }
  if (!separate_dir.empty()) {
    LoadedStudents s = load_students(separate_dir);
    systems["separate"] = bench_pair(*s.restorer, *s.detector);
  }
  result["systems"] = systems;

  const std::string out = out_dir.empty() ? make_run_dir("", "runs/bench", cfg.master_seed) : [&] {
    fs::create_directories(out_dir);
    return out_dir;
  }();
  write_text(fs::path(out) / "bench.json", result.dump(2) + "\n");
  write_text(fs::path(out) / "config.toml", cfg.to_toml());
  return out;
}

std::string cmd_report(const std::vector<std::string>& report_paths, const std::string& bench_path,
                       const std::string& out_dir) {
  if (report_paths.empty()) throw std::runtime_error("report: at least one --from report.json required");
  evalkit::EvalReport merged;
  std::optional<uint64_t> digest;
  for (const auto& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const evalkit::EvalReport r = evalkit::report_from_json(ss.str());
    const json meta = json::parse(r.metadata_json);
    if (meta.contains("dataset_digest")) {
      const uint64_t d = meta.at("dataset_digest").get<uint64_t>();
      if (digest && *digest != d)
        throw std::runtime_error("mismatched evaluation sets: " + path + " was computed on a different dataset");
      digest = d;
    }
    for (const auto& s : r.systems) {
      for (const auto& existing : merged.systems)
        if (existing.name == s.name) throw std::runtime_error("duplicate system in reports: " + s.name);
      merged.systems.push_back(s);
    }
    if (merged.metadata_json == "{}") merged.metadata_json = r.metadata_json;
  }

  if (!bench_path.empty()) {
    std::ifstream in(bench_path);
    if (!in) throw std::runtime_error("cannot open bench file: " + bench_path);
    json bench;
    in >> bench;
    for (auto& s : merged.systems) {
      if (!bench.at("systems").contains(s.name)) continue;
      const json& b = bench.at("systems").at(s.name);
      s.latency_restorer_ms = b.at("restorer_ms").get<double>();
      s.latency_detector_ms = b.at("detector_ms").get<double>();
      s.latency_total_ms = b.at("pipeline_ms").get<double>();
    }
  }

  const std::string out = out_dir.empty() ? "runs/report" : out_dir;
  fs::create_directories(out);
  evalkit::write_report_files(merged, out);
  return out;
}

namespace {

config::RunConfig load_cli_config(const std::string& config_path, const std::vector<std::string>& overrides,
                                  std::optional<uint64_t> seed) {
  config::RunConfig cfg = config_path.empty() ? config::RunConfig::defaults()
                                              : config::RunConfig::from_file(config_path);
  if (config_path.empty()) cfg.sim = sim::preset_params(cfg.sim_preset);
  for (const auto& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw config::ConfigError("--set expects section.key=value, got: " + kv);
    cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) cfg.master_seed = *seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Joint distillation pipeline for turbulence mitigation and detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "Config file (TOML)")->envname("JDATT_CONFIG");
  app.add_option("--set", overrides, "Override a config key: section.key=value");
  app.add_option("--seed", seed, "Override master_seed");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  std::string gen_out, gen_preset;
  bool gen_force = false;
  gen->add_option("--out", gen_out, "Output dataset root (default: [data].root)");
  gen->add_option("--preset", gen_preset, "Severity preset: easy|medium|hard");
  gen->add_flag("--force", gen_force, "Overwrite a non-empty output directory");

  // train-teacher
  auto* tt = app.add_subcommand("train-teacher", "Train the frozen teacher models");
  std::string tt_data, tt_out, tt_kind = "both";
  tt->add_option("--data", tt_data, "Training dataset root (default: [data].root/train)");
  tt->add_option("--out", tt_out, "Run directory (default: runs/teacher/<stamp>-seed<seed>)");
  tt->add_option("--kind", tt_kind, "restoration|detector|both");

  // distill
  auto* ds = app.add_subcommand("distill", "Distill student models from frozen teachers");
  std::string ds_data, ds_teachers, ds_out, ds_mode = "joint", ds_variant;
  ds->add_option("--data", ds_data, "Training dataset root (default: [data].root/train)");
  ds->add_option("--teachers", ds_teachers, "Directory with teacher checkpoints")->required();
  ds->add_option("--out", ds_out, "Run directory (default: runs/distill/<stamp>-seed<seed>)");
  ds->add_option("--mode", ds_mode, "joint|separate");
  ds->add_option("--variant", ds_variant, "Student variant: large|medium|small (default: [train].student_variant)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate systems on the held-out set");
  std::string ev_data, ev_teachers, ev_joint, ev_separate, ev_out;
  std::vector<std::string> ev_systems;
  ev->add_option("--data", ev_data, "Validation dataset root (default: [data].root/val)");
  ev->add_option("--teachers", ev_teachers, "Directory with teacher checkpoints")->required();
  ev->add_option("--joint", ev_joint, "Joint distillation run directory");
  ev->add_option("--separate", ev_separate, "Separate distillation run directory");
  ev->add_option("--system", ev_systems, "Systems to evaluate (repeatable): distorted|teacher|joint|separate");
  ev->add_option("--out", ev_out, "Report directory");

  // bench
  auto* be = app.add_subcommand("bench", "Measure forward-pass latency");
  std::string be_teachers, be_joint, be_separate, be_out;
  be->add_option("--teachers", be_teachers, "Directory with teacher checkpoints")->required();
  be->add_option("--joint", be_joint, "Joint distillation run directory");
  be->add_option("--separate", be_separate, "Separate distillation run directory");
  be->add_option("--out", be_out, "Output directory");

  // report
  auto* rp = app.add_subcommand("report", "Merge eval reports (and bench timings) into one comparison");
  std::vector<std::string> rp_from;
  std::string rp_bench, rp_out;
  rp->add_option("--from", rp_from, "report.json paths (repeatable)")->required();
  rp->add_option("--bench", rp_bench, "bench.json with latency numbers");
  rp->add_option("--out", rp_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    config::RunConfig cfg = load_cli_config(config_path, overrides, seed);
    if (gen->parsed()) {
      if (!gen_preset.empty()) {
        cfg.sim_preset = gen_preset;
        const SimParams p = sim::preset_params(gen_preset);
        cfg.sim.tilt_strength = p.tilt_strength;
        cfg.sim.tilt_correlation_length = p.tilt_correlation_length;
        cfg.sim.blur_sigma = p.blur_sigma;
        cfg.sim.scintillation_strength = p.scintillation_strength;
        cfg.sim.temporal_rho = p.temporal_rho;
      }
      const auto result = cmd_gen_data(cfg, gen_out, gen_force);
      std::cout << "wrote " << result.train_sequences << " train + " << result.val_sequences
                << " val sequences under " << result.out_dir << "\n";
    } else if (tt->parsed()) {
      const auto result = cmd_train_teacher(cfg, tt_data, tt_out, tt_kind);
      std::cout << "teacher run: " << result.run_dir << "\n";
    } else if (ds->parsed()) {
      const std::string variant = ds_variant.empty() ? cfg.train.student_variant : ds_variant;
      const auto result = cmd_distill(cfg, ds_data, ds_teachers, ds_out, ds_mode, variant);
      std::cout << "distill run: " << result.run_dir << "\n";
    } else if (ev->parsed()) {
      const std::string out = cmd_eval(cfg, ev_data, ev_teachers, ev_joint, ev_separate, ev_systems, ev_out);
      std::cout << "eval report: " << out << "\n";
    } else if (be->parsed()) {
      const std::string out = cmd_bench(cfg, be_teachers, be_joint, be_separate, be_out);
      std::cout << "bench output: " << out << "\n";
    } else if (rp->parsed()) {
      const std::string out = cmd_report(rp_from, rp_bench, rp_out);
      std::cout << "report output: " << out << "\n";
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace jdatt::cli
