#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jdatt/config.hpp"

namespace jdatt::cli {

/// Entry point for the jdatt tool. Exit codes: 0 success, 1 runtime failure,
/// 2 config error.
int run(int argc, const char* const* argv);

// Command implementations, callable directly from tests.

struct GenDataResult {
  int train_sequences = 0;
  int val_sequences = 0;
  std::string out_dir;
};
GenDataResult cmd_gen_data(const config::RunConfig& cfg, const std::string& out_dir, bool force);

struct TrainTeacherResult {
  std::string run_dir;
  std::string restoration_ckpt;  // empty if not trained
  std::string detector_ckpt;
};
TrainTeacherResult cmd_train_teacher(const config::RunConfig& cfg, const std::string& data_root,
                                     const std::string& out_dir, const std::string& kind);

struct DistillCmdResult {
  std::string run_dir;
  std::string student_restoration_ckpt;
  std::string student_detector_ckpt;
};
DistillCmdResult cmd_distill(const config::RunConfig& cfg, const std::string& data_root,
                             const std::string& teachers_dir, const std::string& out_dir, const std::string& mode,
                             const std::string& variant);

std::string cmd_eval(const config::RunConfig& cfg, const std::string& data_root, const std::string& teachers_dir,
                     const std::string& joint_dir, const std::string& separate_dir,
                     const std::vector<std::string>& systems, const std::string& out_dir);

std::string cmd_bench(const config::RunConfig& cfg, const std::string& teachers_dir, const std::string& joint_dir,
                      const std::string& separate_dir, const std::string& out_dir);

std::string cmd_report(const std::vector<std::string>& report_paths, const std::string& bench_path,
                       const std::string& out_dir);

/// Worker cap honoring the JDATT_THREADS environment variable.
int worker_count();

}  // namespace jdatt::cli
