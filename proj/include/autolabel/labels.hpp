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

#ifndef AUTOLABEL_LABELS_HPP_
#define AUTOLABEL_LABELS_HPP_

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "autolabel/geometry.hpp"

namespace autolabel::labels {

enum class SourceTag : std::uint8_t { Fused, StaticRefined, TrackVeh, TrackPed };

inline const char* to_string(SourceTag t) {
  switch (t) {
    case SourceTag::Fused: return "fused";
    case SourceTag::StaticRefined: return "static_refined";
    case SourceTag::TrackVeh: return "track_veh";
    case SourceTag::TrackPed: return "track_ped";
  }
  return "?";
}

inline SourceTag source_tag_from_string(const std::string& s) {
  if (s == "fused") return SourceTag::Fused;
  if (s == "static_refined") return SourceTag::StaticRefined;
  if (s == "track_veh") return SourceTag::TrackVeh;
  if (s == "track_ped") return SourceTag::TrackPed;
  throw std::invalid_argument("unknown source tag: " + s);
}

struct PseudoLabel {
  Box3D box;
  SourceTag source = SourceTag::Fused;
};

namespace detail {

// NMS preference on equal scores: static-refined beats tracked beats fused.
inline int source_rank(SourceTag t) {
  switch (t) {
    case SourceTag::StaticRefined: return 0;
    case SourceTag::TrackVeh: return 1;
    case SourceTag::TrackPed: return 1;
    case SourceTag::Fused: return 2;
  }
  return 3;
}

}  // namespace detail

/// Concatenates the four per-frame label sources and applies per-class BEV
/// NMS. All inputs must already be in the frame's sensor coordinates. Ties
/// on score resolve by source priority (static-refined > tracked > fused),
/// then by concatenation order.
inline std::vector<PseudoLabel> assemble_pseudo_labels(
    std::span<const Box3D> b_kbf, std::span<const Box3D> b_static,
    std::span<const Box3D> t_veh_refined, std::span<const Box3D> t_ped_refined,
    double nms_thresh) {
  std::vector<PseudoLabel> all;
  all.reserve(b_kbf.size() + b_static.size() + t_veh_refined.size() +
              t_ped_refined.size());
  for (const auto& b : b_static) all.push_back({b, SourceTag::StaticRefined});
  for (const auto& b : t_veh_refined) all.push_back({b, SourceTag::TrackVeh});
  for (const auto& b : t_ped_refined) all.push_back({b, SourceTag::TrackPed});
  for (const auto& b : b_kbf) all.push_back({b, SourceTag::Fused});

  std::vector<Box3D> boxes;
  boxes.reserve(all.size());
  for (const auto& pl : all) boxes.push_back(pl.box);

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (all[i].box.score != all[j].box.score) {
      return all[i].box.score > all[j].box.score;
    }
    const int ri = detail::source_rank(all[i].source);
    const int rj = detail::source_rank(all[j].source);
    if (ri != rj) return ri < rj;
    return i < j;
  });

  const auto keep = greedy_nms_order(boxes, order, nms_thresh);
  std::vector<PseudoLabel> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(all[i]);
  return out;
}

/// A label survives when the single-frame (t = 0) cloud slice puts at least
/// one point inside it and its score reaches the per-class threshold.
inline bool label_passes_filter(const Box3D& box, const PointCloud& cloud,
                                const PerClass<double>& s_pos) {
  if (box.score < s_pos[box.class_label]) return false;
  for (const auto& p : cloud.points) {
    if (p.t == 0.0 && point_in_box(box, p.x, p.y, p.z)) return true;
  }
  return false;
}

inline std::vector<PseudoLabel> filter_labels(std::span<const PseudoLabel> labels,
                                              const PointCloud& cloud,
                                              const PerClass<double>& s_pos) {
  std::vector<PseudoLabel> out;
  for (const auto& pl : labels) {
    if (label_passes_filter(pl.box, cloud, s_pos)) out.push_back(pl);
  }
  return out;
}

inline std::vector<Box3D> filter_labels(std::span<const Box3D> labels,
                                        const PointCloud& cloud,
                                        const PerClass<double>& s_pos) {
  std::vector<Box3D> out;
  for (const auto& b : labels) {
    if (label_passes_filter(b, cloud, s_pos)) out.push_back(b);
  }
  return out;
}

}  // namespace autolabel::labels

#endif  // AUTOLABEL_LABELS_HPP_
