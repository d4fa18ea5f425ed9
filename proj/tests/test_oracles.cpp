#include "test_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jdatt/rng.hpp"

using namespace jdatt;

namespace testutil {

Tensor random_uniform(std::vector<int> shape, uint64_t seed, double lo, double hi) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Tensor random_gauss(std::vector<int> shape, uint64_t seed, double mean, double std) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.gauss(mean, std);
  return t;
}

FdReport fd_gradient_check(const std::function<ad::Var()>& build_loss, const std::vector<ad::Var>& params, double h,
                           double abs_floor) {
  for (const auto& p : params) {
    p->requires_grad = true;
    if (p->grad.numel() > 0) p->grad.fill(0.0);
  }
  const ad::Var loss = build_loss();
  ad::backward(loss);

  FdReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const bool has_grad = p->grad.numel() > 0;
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = build_loss()->value[0];
      p->value[i] = saved - h;
      const double down = build_loss()->value[0];
      p->value[i] = saved;

      const double fd = (up - down) / (2.0 * h);
      const double analytic = has_grad ? p->grad[i] : 0.0;
      const double denom = std::max({std::fabs(fd), std::fabs(analytic), abs_floor});
      const double rel = std::fabs(fd - analytic) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = "param " + std::to_string(pi) + "[" + std::to_string(i) + "]: analytic " +
                       std::to_string(analytic) + " vs fd " + std::to_string(fd);
      }
    }
    if (has_grad) p->grad.fill(0.0);
  }
  return report;
}

namespace {
struct OraclePred {
  double score;
  int frame;
  int order;
  Box box;
};
}  // namespace

double brute_map_50_95(const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts,
                       int num_classes) {
  if (preds.size() != gts.size()) throw std::invalid_argument("oracle: list sizes differ");
  double sum_ap = 0.0;
  int present = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<OraclePred> cand;
    std::vector<std::vector<Box>> gt(gts.size());
    int total_gt = 0;
    for (size_t f = 0; f < gts.size(); ++f) {
      for (size_t i = 0; i < gts[f].labels.size(); ++i)
        if (gts[f].labels[i] == cls) {
          gt[f].push_back(gts[f].boxes[i]);
          ++total_gt;
        }
      for (size_t i = 0; i < preds[f].labels.size(); ++i)
        if (preds[f].labels[i] == cls)
          cand.push_back({i < preds[f].scores.size() ? preds[f].scores[i] : 1.0, static_cast<int>(f),
                          static_cast<int>(cand.size()), preds[f].boxes[i]});
    }
    if (total_gt == 0) continue;
    ++present;

    // Deterministic score ordering via stable selection.
    std::stable_sort(cand.begin(), cand.end(), [](const OraclePred& a, const OraclePred& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.frame != b.frame) return a.frame < b.frame;
      return a.order < b.order;
    });

    double thresh_sum = 0.0;
    for (int t = 0; t < 10; ++t) {
      const double thresh = 0.5 + 0.05 * t;
      std::vector<std::vector<bool>> taken(gts.size());
      for (size_t f = 0; f < gts.size(); ++f) taken[f].assign(gt[f].size(), false);
      std::vector<bool> is_tp(cand.size(), false);
      for (size_t i = 0; i < cand.size(); ++i) {
        int best = -1;
        double best_iou = 0.0;
        const auto& boxes = gt[static_cast<size_t>(cand[i].frame)];
        for (size_t g = 0; g < boxes.size(); ++g) {
          if (taken[static_cast<size_t>(cand[i].frame)][g]) continue;
          const double iou = box_iou(cand[i].box, boxes[g]);
          if (iou >= thresh && iou > best_iou) {
            best_iou = iou;
            best = static_cast<int>(g);
          }
        }
        if (best >= 0) {
          taken[static_cast<size_t>(cand[i].frame)][static_cast<size_t>(best)] = true;
          is_tp[i] = true;
        }
      }

      // Literal definition: for every achieved recall level, the envelope
      // precision is the max precision over all operating points with
      // recall >= r.
      std::vector<double> rec(cand.size()), prec(cand.size());
      int cum = 0;
      for (size_t i = 0; i < cand.size(); ++i) {
        if (is_tp[i]) ++cum;
        rec[i] = static_cast<double>(cum) / total_gt;
        prec[i] = static_cast<double>(cum) / static_cast<double>(i + 1);
      }
      double ap = 0.0, prev = 0.0;
      for (size_t i = 0; i < cand.size(); ++i) {
        double envelope = 0.0;
        for (size_t j = 0; j < cand.size(); ++j)
          if (rec[j] >= rec[i]) envelope = std::max(envelope, prec[j]);
        ap += (rec[i] - prev) * envelope;
        prev = rec[i];
      }
      thresh_sum += ap;
    }
    sum_ap += thresh_sum / 10.0;
  }
  return present > 0 ? sum_ap / present : 0.0;
}

double brute_label_loss(const Tensor& p_ce, const std::vector<int>& positive_cells,
                        const std::vector<int>& positive_labels, const std::vector<double>& ious, double gamma,
                        double alpha) {
  const int n = p_ce.dim(0), k = p_ce.dim(1);
  double total = 0.0;
  for (int cell = 0; cell < n; ++cell) {
    for (int cls = 0; cls < k; ++cls) {
      double p = p_ce.at2(cell, cls);
      p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
      int pos_idx = -1;
      for (size_t i = 0; i < positive_cells.size(); ++i)
        if (positive_cells[i] == cell && positive_labels[i] == cls) pos_idx = static_cast<int>(i);
      if (pos_idx >= 0) {
        const double t = std::pow(p, alpha) * std::pow(ious[static_cast<size_t>(pos_idx)], 1.0 - alpha);
        total += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      } else {
        total += std::pow(p, gamma) * std::log(1.0 - p);
      }
    }
  }
  return -total / static_cast<double>(n * k);
}

Tensor median3x3(const Tensor& frame) {
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double window[9];
        int idx = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = std::clamp(y + dy, 0, h - 1);
            const int xx = std::clamp(x + dx, 0, w - 1);
            window[idx++] = frame.at3(ch, yy, xx);
          }
        std::sort(window, window + 9);
        out.at3(ch, y, x) = window[4];
      }
  return out;
}

}  // namespace testutil
