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

#ifndef AUTOLABEL_ENSEMBLE_HPP_
#define AUTOLABEL_ENSEMBLE_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "autolabel/errors.hpp"
#include "autolabel/geometry.hpp"
#include "autolabel/kbf.hpp"

namespace autolabel::ensemble {

/// All predictions of one detector variant over a sequence. A VMFI or TTA
/// run of the same detector is simply another set with its own id; this
/// keeps the toolkit agnostic to how the boxes were produced.
struct DetectionSet {
  std::string set_id;
  std::string detector_id;
  std::string source_domain;
  double t_delta_max = 0.0;       // seconds of accumulated history
  std::string tta_variant = "none";
  std::map<int, std::vector<Box3D>> frames;

  const std::vector<Box3D>* frame(int frame_id) const {
    auto it = frames.find(frame_id);
    return it == frames.end() ? nullptr : &it->second;
  }
};

struct EnsembleMember {
  std::string set_id;
  double weight = 1.0;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  std::map<std::string, std::set<ClassLabel>> class_exclusions;
  double cluster_iou_thresh = 0.1;
  kbf::KbfConfig kbf;
};

/// Gathers the member boxes of one frame, applies per-source class
/// exclusions, clusters per class by BEV overlap and fuses each cluster.
/// Rejected clusters (below min_cluster_size) are omitted.
inline std::vector<Box3D> assemble_frame_proposals(
    int frame_id, std::span<const DetectionSet> sets, const EnsembleSpec& spec) {
  std::vector<Box3D> gathered;
  std::vector<double> gathered_weights;
  for (const auto& member : spec.members) {
    const DetectionSet* set = nullptr;
    for (const auto& s : sets) {
      if (s.set_id == member.set_id) {
        set = &s;
        break;
      }
    }
    if (set == nullptr) {
      throw ConfigError("ensemble member references unknown set_id: " +
                        member.set_id);
    }
    const auto* boxes = set->frame(frame_id);
    if (boxes == nullptr) continue;
    const auto excl = spec.class_exclusions.find(member.set_id);
    for (const auto& b : *boxes) {
      if (excl != spec.class_exclusions.end() &&
          excl->second.count(b.class_label) > 0) {
        continue;
      }
      gathered.push_back(b);
      gathered_weights.push_back(member.weight);
    }
  }

  std::vector<Box3D> fused;
  for (ClassLabel cls : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
    std::vector<Box3D> class_boxes;
    std::vector<double> class_weights;
    for (std::size_t i = 0; i < gathered.size(); ++i) {
      if (gathered[i].class_label == cls) {
        class_boxes.push_back(gathered[i]);
        class_weights.push_back(gathered_weights[i]);
      }
    }
    if (class_boxes.empty()) continue;
    const auto clusters = cluster_by_iou(class_boxes, spec.cluster_iou_thresh);
    for (const auto& cluster : clusters) {
      std::vector<Box3D> cboxes;
      std::vector<double> cweights;
      for (std::size_t idx : cluster) {
        cboxes.push_back(class_boxes[idx]);
        cweights.push_back(class_weights[idx]);
      }
      if (auto box = kbf::fuse_cluster(cboxes, cweights, spec.kbf)) {
        fused.push_back(*box);
      }
    }
  }
  return fused;
}

/// Diagnostic view of which accumulation / TTA variants exist per detector.
struct VmfiFamilyReport {
  struct Variant {
    double t_delta_max = 0.0;
    std::string tta_variant;
    std::string set_id;
  };
  std::map<std::string, std::vector<Variant>> detectors;
  std::vector<std::string> duplicate_triples;  // "detector/t_delta/tta"

  std::size_t variant_count(const std::string& detector_id) const {
    auto it = detectors.find(detector_id);
    return it == detectors.end() ? 0 : it->second.size();
  }
};

inline VmfiFamilyReport validate_vmfi_family(std::span<const DetectionSet> sets) {
  VmfiFamilyReport report;
  std::set<std::string> seen;
  for (const auto& s : sets) {
    report.detectors[s.detector_id].push_back(
        {s.t_delta_max, s.tta_variant, s.set_id});
    const std::string triple = s.detector_id + "/" +
                               std::to_string(s.t_delta_max) + "/" +
                               s.tta_variant;
    if (!seen.insert(triple).second) {
      report.duplicate_triples.push_back(triple);
    }
  }
  return report;
}

}  // namespace autolabel::ensemble

#endif  // AUTOLABEL_ENSEMBLE_HPP_
