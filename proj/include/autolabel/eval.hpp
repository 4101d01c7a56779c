// Copyright 2026 the autolabel authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUTOLABEL_EVAL_HPP_
#define AUTOLABEL_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "autolabel/geometry.hpp"

namespace autolabel::eval {

enum class MatchMode : std::uint8_t { Bev, ThreeD };

inline double match_iou(const Box3D& a, const Box3D& b, MatchMode mode) {
  return mode == MatchMode::Bev ? bev_iou(a, b) : iou_3d(a, b);
}

/// KITTI-style per-class IoU thresholds (0.7 vehicle, 0.5 pedestrian).
inline PerClass<double> default_iou_thresholds() { return {0.7, 0.5}; }

inline std::vector<std::pair<double, double>> default_range_bins() {
  return {{0.0, 30.0}, {30.0, 50.0}, {50.0, 80.0}};
}

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> tp_pairs;  // (pred, gt)
  std::vector<std::size_t> fp;  // unmatched prediction indices
  std::vector<std::size_t> fn;  // unmatched ground-truth indices
};

/// Greedy matching in descending prediction score. A pair counts when the
/// classes agree and the IoU reaches the per-class threshold; each ground
/// truth matches at most once. Ties on IoU go to the lower GT index.
inline MatchResult match_frame(std::span<const Box3D> preds,
                               std::span<const Box3D> gts,
                               const PerClass<double>& iou_thresh,
                               MatchMode mode) {
  MatchResult result;
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].score != preds[b].score) return preds[a].score > preds[b].score;
    return a < b;
  });
  for (std::size_t p : order) {
    const double thresh = iou_thresh[preds[p].class_label];
    double best_iou = -1.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].class_label != preds[p].class_label) continue;
      const double v = match_iou(preds[p], gts[g], mode);
      if (v >= thresh && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<std::size_t>(best_gt)] = true;
      result.tp_pairs.emplace_back(p, static_cast<std::size_t>(best_gt));
    } else {
      result.fp.push_back(p);
    }
  }
  std::sort(result.tp_pairs.begin(), result.tp_pairs.end());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) result.fn.push_back(g);
  }
  return result;
}

struct BinStats {
  std::size_t tp = 0, fp = 0, fn = 0;

  std::optional<double> precision() const {
    const std::size_t d = tp + fp;
    if (d == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(d);
  }
  std::optional<double> recall() const {
    const std::size_t d = tp + fn;
    if (d == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(d);
  }
};

/// class -> one BinStats per range bin (same order as `bins`).
using PrTable = std::map<ClassLabel, std::vector<BinStats>>;

inline int range_bin_of(const Box3D& b,
                        std::span<const std::pair<double, double>> bins) {
  const double r = b.bev_range();
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (r >= bins[i].first && r < bins[i].second) return static_cast<int>(i);
  }
  return -1;
}

/// Precision/recall per class per range bin. Boxes are binned by the BEV
/// distance of their center from the sensor origin and each bin is matched
/// independently; boxes beyond the last bin are ignored. Empty denominators
/// stay undefined rather than being reported as zero.
inline PrTable pr_by_range(
    std::span<const std::pair<std::vector<Box3D>, std::vector<Box3D>>> frames,
    std::span<const std::pair<double, double>> bins,
    const PerClass<double>& iou_thresh, MatchMode mode) {
  PrTable table;
  for (ClassLabel cls : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
    table[cls] = std::vector<BinStats>(bins.size());
  }
  for (const auto& [preds, gts] : frames) {
    for (std::size_t bi = 0; bi < bins.size(); ++bi) {
      for (ClassLabel cls : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
        std::vector<Box3D> bin_preds, bin_gts;
        for (const auto& p : preds) {
          if (p.class_label == cls &&
              range_bin_of(p, bins) == static_cast<int>(bi)) {
            bin_preds.push_back(p);
          }
        }
        for (const auto& g : gts) {
          if (g.class_label == cls &&
              range_bin_of(g, bins) == static_cast<int>(bi)) {
            bin_gts.push_back(g);
          }
        }
        if (bin_preds.empty() && bin_gts.empty()) continue;
        const auto m = match_frame(bin_preds, bin_gts, iou_thresh, mode);
        auto& stats = table[cls][bi];
        stats.tp += m.tp_pairs.size();
        stats.fp += m.fp.size();
        stats.fn += m.fn.size();
      }
    }
  }
  return table;
}

/// Average precision over 40 equally spaced recall positions (the KITTI R40
/// convention: recall sampled at k/40, k = 1..40, with right-side maximum
/// precision interpolation). Returns 0 when the class has no ground truth.
inline double average_precision(
    std::span<const std::pair<std::vector<Box3D>, std::vector<Box3D>>> frames,
    const PerClass<double>& iou_thresh, MatchMode mode, ClassLabel cls) {
  struct Flag {
    double score;
    bool tp;
  };
  std::vector<Flag> flags;
  std::size_t n_gt = 0;
  for (const auto& [preds_all, gts_all] : frames) {
    std::vector<Box3D> preds, gts;
    for (const auto& p : preds_all) {
      if (p.class_label == cls) preds.push_back(p);
    }
    for (const auto& g : gts_all) {
      if (g.class_label == cls) gts.push_back(g);
    }
    n_gt += gts.size();
    const auto m = match_frame(preds, gts, iou_thresh, mode);
    std::vector<bool> is_tp(preds.size(), false);
    for (const auto& [p, g] : m.tp_pairs) is_tp[p] = true;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      flags.push_back({preds[p].score, is_tp[p]});
    }
  }
  if (n_gt == 0) return 0.0;
  std::stable_sort(flags.begin(), flags.end(),
                   [](const Flag& a, const Flag& b) { return a.score > b.score; });

  std::vector<double> recall(flags.size()), precision(flags.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (flags[k].tp) ++tp;
    recall[k] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  // Right-to-left running max turns the raw curve into its interpolation.
  for (std::size_t k = flags.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double r = static_cast<double>(i) / 40.0;
    double p = 0.0;
    for (std::size_t k = 0; k < flags.size(); ++k) {
      if (recall[k] >= r) {
        p = precision[k];
        break;
      }
    }
    ap += p;
  }
  return ap / 40.0;
}

/// Convenience for a single frame.
inline double average_precision(std::span<const Box3D> preds,
                                std::span<const Box3D> gts,
                                const PerClass<double>& iou_thresh,
                                MatchMode mode, ClassLabel cls) {
  std::vector<std::pair<std::vector<Box3D>, std::vector<Box3D>>> frames;
  frames.emplace_back(std::vector<Box3D>(preds.begin(), preds.end()),
                      std::vector<Box3D>(gts.begin(), gts.end()));
  return average_precision(frames, iou_thresh, mode, cls);
}

}  // namespace autolabel::eval

#endif  // AUTOLABEL_EVAL_HPP_
