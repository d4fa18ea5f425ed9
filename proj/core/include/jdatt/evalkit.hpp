#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jdatt/data.hpp"
#include "jdatt/nets.hpp"
#include "jdatt/tensor.hpp"

namespace jdatt::evalkit {

struct PsnrResult {
  double db = 0.0;
  bool infinite = false;  // MSE == 0
};

/// 10*log10(1/MSE) over all elements of two same-shape [C,H,W] frames in [0,1].
PsnrResult psnr(const Tensor& a, const Tensor& b);

/// Mean local SSIM over valid 11x11 windows (Gaussian sigma 1.5,
/// C1=0.01^2, C2=0.03^2 on unit range), channels averaged.
double ssim(const Tensor& a, const Tensor& b);

/// COCO-style mAP over IoU thresholds 0.50:0.05:0.95. Score-sorted greedy
/// matching per class and threshold, AP by all-points precision envelope,
/// averaged over thresholds and over classes present in the ground truth.
double map_50_95(const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts, int num_classes);

/// Median wall-clock milliseconds of run_once after warm-up. Runs exclusively
/// on the calling thread.
double benchmark_latency(const std::function<void()>& run_once, int warmup = 10, int runs = 100);

double latency_restoration_ms(const nets::RestorationModel& model, int h, int w, int warmup = 10, int runs = 100);
double latency_detector_ms(const nets::DetectorModel& model, int h, int w, int warmup = 10, int runs = 100);

struct EvalParams {
  double score_threshold = 0.05;
  double nms_iou = 0.6;
  int max_detections = 20;
};

/// Metrics of one pipeline over a held-out set. Latency is filled by the
/// bench path only, so metric evaluation stays bit-reproducible.
struct SystemEval {
  std::string name;
  double psnr_mean = 0.0;
  int psnr_inf_count = 0;
  double ssim_mean = 0.0;
  double map = 0.0;
  int64_t params_restorer = 0;
  int64_t params_detector = 0;
  std::optional<double> latency_restorer_ms;
  std::optional<double> latency_detector_ms;
  std::optional<double> latency_total_ms;
};

struct EvalReport {
  std::vector<SystemEval> systems;
  std::string metadata_json = "{}";  // config echo, seeds, dataset digest
};

/// Sliding-window evaluation: restore every frame from its five-frame window
/// (replicate-padded), compare to clean, detect on the restored frame.
/// A null restorer means identity (the "distorted" baseline).
SystemEval evaluate_system(const std::string& name, const std::vector<AnnotatedSample>& samples,
                           const nets::RestorationModel* restorer, const nets::DetectorModel* detector,
                           const EvalParams& params);

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// Writes report.json, report.csv, scatter_params_map.png, quality_bars.png.
void write_report_files(const EvalReport& report, const std::string& out_dir);

/// FNV digest over every file under root (sorted relative paths), used to
/// pin which dataset a report was computed on.
uint64_t dataset_digest(const std::string& root);

}  // namespace jdatt::evalkit
