#include "jdatt/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "jdatt/checkpoint.hpp"
#include "jdatt/plot.hpp"
#include "jdatt/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace jdatt::evalkit {

PsnrResult psnr(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  if (a.numel() == 0) throw std::invalid_argument("psnr: empty frame");
  double mse = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  PsnrResult r;
  if (mse == 0.0) {
    r.infinite = true;
    r.db = std::numeric_limits<double>::infinity();
  } else {
    r.db = 10.0 * std::log10(1.0 / mse);
  }
  return r;
}

namespace {
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_kernel() {
  std::vector<double> k(kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<size_t>(i + r)] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
    sum += k[static_cast<size_t>(i + r)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-mode separable Gaussian filter: (H,W) -> (H-10, W-10).
std::vector<double> valid_blur(const std::vector<double>& p, int h, int w, const std::vector<double>& k) {
  const int r = kSsimWindow / 2;
  const int w2 = w - 2 * r;
  std::vector<double> rows(static_cast<size_t>(h) * w2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w2; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[static_cast<size_t>(i)] * p[static_cast<size_t>(y) * w + x + i];
      rows[static_cast<size_t>(y) * w2 + x] = acc;
    }
  const int h2 = h - 2 * r;
  std::vector<double> out(static_cast<size_t>(h2) * w2);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[static_cast<size_t>(i)] * rows[static_cast<size_t>(y + i) * w2 + x];
      out[static_cast<size_t>(y) * w2 + x] = acc;
    }
  return out;
}
}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.rank() != 3) throw std::invalid_argument("ssim: [C,H,W] frames required");
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h < kSsimWindow || w < kSsimWindow) throw std::invalid_argument("ssim: frame smaller than the 11x11 window");

  const std::vector<double> k = ssim_kernel();
  const int64_t plane = static_cast<int64_t>(h) * w;
  double total = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (int64_t i = 0; i < plane; ++i) {
      const double xv = a[ch * plane + i], yv = b[ch * plane + i];
      x[static_cast<size_t>(i)] = xv;
      y[static_cast<size_t>(i)] = yv;
      xx[static_cast<size_t>(i)] = xv * xv;
      yy[static_cast<size_t>(i)] = yv * yv;
      xy[static_cast<size_t>(i)] = xv * yv;
    }
    const auto mu_x = valid_blur(x, h, w, k);
    const auto mu_y = valid_blur(y, h, w, k);
    const auto m_xx = valid_blur(xx, h, w, k);
    const auto m_yy = valid_blur(yy, h, w, k);
    const auto m_xy = valid_blur(xy, h, w, k);

    double acc = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
      const double mx = mu_x[i], my = mu_y[i];
      const double vx = m_xx[i] - mx * mx;
      const double vy = m_yy[i] - my * my;
      const double cov = m_xy[i] - mx * my;
      acc += ((2 * mx * my + kC1) * (2 * cov + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
    total += acc / static_cast<double>(mu_x.size());
  }
  return total / c;
}

namespace {
struct PredRef {
  double score;
  int frame;   // index into the paired frame lists
  int order;   // insertion order for deterministic ties
  Box box;
};
}  // namespace

double map_50_95(const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts, int num_classes) {
  if (preds.size() != gts.size()) throw std::invalid_argument("map_50_95: per-frame lists must pair up");
  for (const auto& d : preds)
    for (int l : d.labels)
      if (l < 0 || l >= num_classes) throw std::invalid_argument("map_50_95: prediction label out of [0,K)");
  for (const auto& d : gts)
    for (int l : d.labels)
      if (l < 0 || l >= num_classes) throw std::invalid_argument("map_50_95: ground truth label out of [0,K)");

  double total_ap = 0.0;
  int classes_present = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    // Gather this class's predictions and ground truth per frame.
    std::vector<PredRef> cand;
    std::vector<std::vector<Box>> gt_boxes(gts.size());
    int num_gt = 0;
    for (size_t f = 0; f < gts.size(); ++f) {
      for (size_t i = 0; i < gts[f].labels.size(); ++i)
        if (gts[f].labels[i] == cls) {
          gt_boxes[f].push_back(gts[f].boxes[i]);
          ++num_gt;
        }
      for (size_t i = 0; i < preds[f].labels.size(); ++i)
        if (preds[f].labels[i] == cls) {
          const double score = i < preds[f].scores.size() ? preds[f].scores[i] : 1.0;
          cand.push_back({score, static_cast<int>(f), static_cast<int>(cand.size()), preds[f].boxes[i]});
        }
    }
    if (num_gt == 0) continue;  // classes absent from GT are excluded
    ++classes_present;

    std::sort(cand.begin(), cand.end(), [](const PredRef& a, const PredRef& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.frame != b.frame) return a.frame < b.frame;
      return a.order < b.order;
    });

    double ap_sum = 0.0;
    for (int t = 0; t < 10; ++t) {
      const double thresh = 0.5 + 0.05 * t;
      std::vector<std::vector<bool>> used(gts.size());
      for (size_t f = 0; f < gts.size(); ++f) used[f].assign(gt_boxes[f].size(), false);

      std::vector<int> tp(cand.size(), 0);
      for (size_t i = 0; i < cand.size(); ++i) {
        const auto& boxes = gt_boxes[static_cast<size_t>(cand[i].frame)];
        auto& flags = used[static_cast<size_t>(cand[i].frame)];
        double best_iou = 0.0;
        int best = -1;
        for (size_t g = 0; g < boxes.size(); ++g) {
          if (flags[g]) continue;
          const double iou = box_iou(cand[i].box, boxes[g]);
          if (iou >= thresh && iou > best_iou) {
            best_iou = iou;
            best = static_cast<int>(g);
          }
        }
        if (best >= 0) {
          flags[static_cast<size_t>(best)] = true;
          tp[i] = 1;
        }
      }

      // All-points interpolation: area under the precision envelope.
      std::vector<double> recall(cand.size()), precision(cand.size());
      int tp_cum = 0;
      for (size_t i = 0; i < cand.size(); ++i) {
        tp_cum += tp[i];
        recall[i] = static_cast<double>(tp_cum) / num_gt;
        precision[i] = static_cast<double>(tp_cum) / static_cast<double>(i + 1);
      }
      double ap = 0.0, env = 0.0, prev_recall = 0.0;
      for (size_t i = cand.size(); i-- > 0;) precision[i] = env = std::max(env, precision[i]);
      for (size_t i = 0; i < cand.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
      }
      ap_sum += ap;
    }
    total_ap += ap_sum / 10.0;
  }
  return classes_present > 0 ? total_ap / classes_present : 0.0;
}

double benchmark_latency(const std::function<void()>& run_once, int warmup, int runs) {
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) run_once();
  std::vector<double> ms(static_cast<size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    const auto t0 = clock::now();
    run_once();
    const auto t1 = clock::now();
    ms[static_cast<size_t>(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());
  const size_t mid = ms.size() / 2;
  return ms.size() % 2 == 1 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
}

namespace {
Tensor random_input(const std::vector<int>& shape, uint64_t seed) {
  Tensor t(shape);
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}
}  // namespace

double latency_restoration_ms(const nets::RestorationModel& model, int h, int w, int warmup, int runs) {
  const ad::Var input = ad::constant(random_input({model.spec().window * 3, h, w}, 17));
  ad::NoGradGuard ng;
  return benchmark_latency([&] { model.forward(input); }, warmup, runs);
}

double latency_detector_ms(const nets::DetectorModel& model, int h, int w, int warmup, int runs) {
  const ad::Var input = ad::constant(random_input({3, h, w}, 18));
  ad::NoGradGuard ng;
  return benchmark_latency([&] { model.forward(input); }, warmup, runs);
}

SystemEval evaluate_system(const std::string& name, const std::vector<AnnotatedSample>& samples,
                           const nets::RestorationModel* restorer, const nets::DetectorModel* detector,
                           const EvalParams& params) {
  SystemEval out;
  out.name = name;
  if (restorer) out.params_restorer = nets::count_parameters(*restorer);
  if (detector) out.params_detector = nets::count_parameters(*detector);

  ad::NoGradGuard ng;
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int psnr_count = 0, frame_count = 0;
  std::vector<DetectionSet> all_preds, all_gts;

  for (const auto& sample : samples) {
    for (int ti = 0; ti < sample.degraded.t; ++ti) {
      Tensor restored;
      if (restorer) {
        const ad::Var win = ad::constant(nets::window_input(sample.degraded, ti, restorer->spec().window));
        restored = restorer->forward(win).output->value;
      } else {
        restored = sample.degraded.frame_tensor(ti);
      }
      const Tensor clean = sample.clean.frame_tensor(ti);
      const PsnrResult pr = psnr(restored, clean);
      if (pr.infinite) {
        ++out.psnr_inf_count;
      } else {
        psnr_sum += pr.db;
        ++psnr_count;
      }
      ssim_sum += ssim(restored, clean);
      ++frame_count;

      if (detector) {
        const auto fwd = detector->forward(ad::constant(restored));
        all_preds.push_back(
            nets::decode_detections(fwd, ti, params.score_threshold, params.nms_iou, params.max_detections));
      } else {
        DetectionSet empty;
        empty.frame_index = ti;
        all_preds.push_back(empty);
      }
      all_gts.push_back(sample.ground_truth[static_cast<size_t>(ti)]);
    }
  }

  out.psnr_mean = psnr_count > 0 ? psnr_sum / psnr_count : std::numeric_limits<double>::infinity();
  out.ssim_mean = frame_count > 0 ? ssim_sum / frame_count : 0.0;
  int num_classes = detector ? detector->spec().num_classes : 0;
  for (const auto& gt : all_gts)
    for (int l : gt.labels) num_classes = std::max(num_classes, l + 1);
  out.map = num_classes > 0 ? map_50_95(all_preds, all_gts, num_classes) : 0.0;
  return out;
}

namespace {
json system_to_json(const SystemEval& s) {
  json j{{"name", s.name},
         {"psnr_mean", s.psnr_mean},
         {"psnr_inf_count", s.psnr_inf_count},
         {"ssim_mean", s.ssim_mean},
         {"map_50_95", s.map},
         {"param_counts", json{{"restorer", s.params_restorer}, {"detector", s.params_detector}}}};
  json lat = json::object();
  if (s.latency_restorer_ms) lat["restorer"] = *s.latency_restorer_ms;
  if (s.latency_detector_ms) lat["detector"] = *s.latency_detector_ms;
  if (s.latency_total_ms) lat["total"] = *s.latency_total_ms;
  j["latency_ms"] = lat;
  return j;
}

SystemEval system_from_json(const json& j) {
  SystemEval s;
  s.name = j.at("name").get<std::string>();
  s.psnr_mean = j.at("psnr_mean").get<double>();
  s.psnr_inf_count = j.at("psnr_inf_count").get<int>();
  s.ssim_mean = j.at("ssim_mean").get<double>();
  s.map = j.at("map_50_95").get<double>();
  s.params_restorer = j.at("param_counts").at("restorer").get<int64_t>();
  s.params_detector = j.at("param_counts").at("detector").get<int64_t>();
  const json& lat = j.at("latency_ms");
  if (lat.contains("restorer")) s.latency_restorer_ms = lat.at("restorer").get<double>();
  if (lat.contains("detector")) s.latency_detector_ms = lat.at("detector").get<double>();
  if (lat.contains("total")) s.latency_total_ms = lat.at("total").get<double>();
  return s;
}
}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["systems"] = json::array();
  for (const auto& s : report.systems) j["systems"].push_back(system_to_json(s));
  j["metadata"] = json::parse(report.metadata_json);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  EvalReport r;
  for (const auto& s : j.at("systems")) r.systems.push_back(system_from_json(s));
  r.metadata_json = j.at("metadata").dump();
  return r;
}

std::string report_to_csv(const EvalReport& report) {
  std::string csv = "system,params_restorer,params_detector,psnr_mean,psnr_inf_count,ssim_mean,map_50_95,"
                    "latency_restorer_ms,latency_detector_ms,latency_total_ms\n";
  char buf[512];
  for (const auto& s : report.systems) {
    auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%.17g,%d,%.17g,%.17g,%s,%s,%s\n", s.name.c_str(),
                  static_cast<long long>(s.params_restorer), static_cast<long long>(s.params_detector), s.psnr_mean,
                  s.psnr_inf_count, s.ssim_mean, s.map, opt(s.latency_restorer_ms).c_str(),
                  opt(s.latency_detector_ms).c_str(), opt(s.latency_total_ms).c_str());
    csv += buf;
  }
  return csv;
}

void write_report_files(const EvalReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.json", std::ios::binary);
    f << report_to_json(report);
  }
  {
    std::ofstream f(fs::path(out_dir) / "report.csv", std::ios::binary);
    f << report_to_csv(report);
  }

  std::vector<plot::ScatterPoint> pts;
  for (const auto& s : report.systems)
    pts.push_back({static_cast<double>(s.params_restorer + s.params_detector), s.map, s.name});
  plot::scatter_chart((fs::path(out_dir) / "scatter_params_map.png").string(), pts, "TOTAL PARAMS", "MAP@50:95");

  std::vector<plot::BarGroup> bars;
  for (const auto& s : report.systems) bars.push_back({s.name, s.psnr_mean, s.ssim_mean});
  plot::quality_bars_chart((fs::path(out_dir) / "quality_bars.png").string(), bars);
}

uint64_t dataset_digest(const std::string& root) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).string();
    if (rel == "config.toml") continue;  // run echo, not dataset content
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](const char* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(data[i]);
      hash *= 0x100000001b3ULL;
    }
  };
  for (const auto& rel : files) {
    mix(rel.data(), rel.size());
    const uint64_t fd = file_digest((fs::path(root) / rel).string());
    mix(reinterpret_cast<const char*>(&fd), sizeof(fd));
  }
  return hash;
}

}  // namespace jdatt::evalkit
