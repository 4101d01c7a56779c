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

#ifndef AUTOLABEL_IO_HPP_
#define AUTOLABEL_IO_HPP_

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "autolabel/ensemble.hpp"
#include "autolabel/errors.hpp"
#include "autolabel/geometry.hpp"
#include "autolabel/labels.hpp"
#include "autolabel/tracking.hpp"

namespace autolabel::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return records;
}

inline std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// --- boxes ---------------------------------------------------------------

/// Detection-file element: [cx, cy, cz, l, w, h, heading, score, class].
inline json box_to_json(const Box3D& b) {
  return json::array({b.cx, b.cy, b.cz, b.l, b.w, b.h, b.heading, b.score,
                      to_string(b.class_label)});
}

inline Box3D box_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() < 9) {
    throw InputError("box record must be a 9-element array");
  }
  Box3D b;
  b.cx = arr[0].get<double>();
  b.cy = arr[1].get<double>();
  b.cz = arr[2].get<double>();
  b.l = arr[3].get<double>();
  b.w = arr[4].get<double>();
  b.h = arr[5].get<double>();
  b.heading = arr[6].get<double>();
  b.score = arr[7].get<double>();
  b.class_label = class_from_string(arr[8].get<std::string>());
  return b;
}

// --- detection sets ------------------------------------------------------

inline void write_detection_set(const fs::path& dir,
                                const ensemble::DetectionSet& set) {
  {
    auto out = open_for_write(dir / (set.set_id + ".jsonl"));
    for (const auto& [frame_id, boxes] : set.frames) {
      json boxes_json = json::array();
      for (const auto& b : boxes) boxes_json.push_back(box_to_json(b));
      out << json{{"frame_id", frame_id}, {"boxes", boxes_json}}.dump()
          << "\n";
    }
  }
  auto manifest = open_for_write(dir / (set.set_id + ".manifest.json"));
  manifest << json{{"set_id", set.set_id},
                   {"detector_id", set.detector_id},
                   {"source_domain", set.source_domain},
                   {"t_delta_max", set.t_delta_max},
                   {"tta_variant", set.tta_variant}}
                  .dump(2)
           << "\n";
}

inline ensemble::DetectionSet read_detection_set(const fs::path& manifest_path) {
  const json manifest = read_json_file(manifest_path);
  ensemble::DetectionSet set;
  try {
    set.set_id = manifest.at("set_id").get<std::string>();
    set.detector_id = manifest.at("detector_id").get<std::string>();
    set.source_domain = manifest.at("source_domain").get<std::string>();
    set.t_delta_max = manifest.at("t_delta_max").get<double>();
    set.tta_variant = manifest.at("tta_variant").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError(manifest_path.string() + ": " + e.what());
  }
  const fs::path data = manifest_path.parent_path() / (set.set_id + ".jsonl");
  for (const auto& rec : read_jsonl(data)) {
    const int frame_id = rec.at("frame_id").get<int>();
    std::vector<Box3D> boxes;
    for (const auto& arr : rec.at("boxes")) {
      Box3D b = box_from_json(arr);
      b.provenance = {{set.set_id}, set.detector_id};
      boxes.push_back(b);
    }
    set.frames[frame_id] = std::move(boxes);
  }
  return set;
}

/// Loads every detection set in a directory (one .manifest.json per set).
inline std::vector<ensemble::DetectionSet> read_detection_sets(
    const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw InputError("not a directory: " + dir.string());
  }
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 14 &&
        name.substr(name.size() - 14) == ".manifest.json") {
      manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());
  std::vector<ensemble::DetectionSet> sets;
  for (const auto& m : manifests) sets.push_back(read_detection_set(m));
  return sets;
}

// --- poses ---------------------------------------------------------------

inline void write_poses(const fs::path& path, std::span<const FramePose> poses) {
  auto out = open_for_write(path);
  for (const auto& p : poses) {
    json rot = json::array();
    for (const auto& row : p.rotation) {
      rot.push_back(json::array({row[0], row[1], row[2]}));
    }
    out << json{{"frame_id", p.frame_id},
                {"rotation", rot},
                {"translation", json::array({p.translation[0], p.translation[1],
                                             p.translation[2]})}}
               .dump()
        << "\n";
  }
}

inline std::vector<FramePose> read_poses(const fs::path& path) {
  std::vector<FramePose> poses;
  for (const auto& rec : read_jsonl(path)) {
    FramePose p;
    p.frame_id = rec.at("frame_id").get<int>();
    const auto& rot = rec.at("rotation");
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) p.rotation[i][j] = rot[i][j].get<double>();
    }
    const auto& t = rec.at("translation");
    p.translation = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
    if (!p.orthonormal()) {
      throw InputError(path.string() + ": non-orthonormal rotation at frame " +
                       std::to_string(p.frame_id));
    }
    poses.push_back(p);
  }
  return poses;
}

// --- point clouds --------------------------------------------------------

inline void write_clouds(const fs::path& path,
                         std::span<const PointCloud> clouds) {
  auto out = open_for_write(path);
  for (const auto& c : clouds) {
    json pts = json::array();
    for (const auto& p : c.points) {
      pts.push_back(json::array({p.x, p.y, p.z, p.t}));
    }
    out << json{{"frame_id", c.frame_id}, {"points", pts}}.dump() << "\n";
  }
}

inline std::vector<PointCloud> read_clouds(const fs::path& path) {
  std::vector<PointCloud> clouds;
  for (const auto& rec : read_jsonl(path)) {
    PointCloud c;
    c.frame_id = rec.at("frame_id").get<int>();
    for (const auto& arr : rec.at("points")) {
      c.points.push_back({arr[0].get<double>(), arr[1].get<double>(),
                          arr[2].get<double>(), arr[3].get<double>()});
    }
    clouds.push_back(std::move(c));
  }
  return clouds;
}

// --- tracks --------------------------------------------------------------

inline void write_tracks(const fs::path& path,
                         std::span<const tracking::Track> tracks) {
  auto out = open_for_write(path);
  for (const auto& t : tracks) {
    json obs = json::array();
    for (const auto& [frame_id, o] : t.observations) {
      obs.push_back(json{
          {"frame_id", frame_id},
          {"box", json::array({o.box.cx, o.box.cy, o.box.cz, o.box.l, o.box.w,
                               o.box.h, o.box.heading})},
          {"score", o.box.score},
          {"kind", tracking::to_string(o.kind)}});
    }
    out << json{{"track_id", t.track_id},
                {"class", to_string(t.class_label)},
                {"motion", tracking::to_string(t.motion)},
                {"observations", obs}}
               .dump()
        << "\n";
  }
}

inline tracking::ObservationKind kind_from_string(const std::string& s) {
  if (s == "observed") return tracking::ObservationKind::Observed;
  if (s == "interpolated") return tracking::ObservationKind::Interpolated;
  if (s == "extrapolated") return tracking::ObservationKind::Extrapolated;
  throw InputError("unknown observation kind: " + s);
}

inline tracking::MotionClass motion_from_string(const std::string& s) {
  if (s == "unclassified") return tracking::MotionClass::Unclassified;
  if (s == "static") return tracking::MotionClass::Static;
  if (s == "dynamic") return tracking::MotionClass::Dynamic;
  throw InputError("unknown motion class: " + s);
}

inline std::vector<tracking::Track> read_tracks(const fs::path& path) {
  std::vector<tracking::Track> tracks;
  for (const auto& rec : read_jsonl(path)) {
    tracking::Track t;
    t.track_id = rec.at("track_id").get<int>();
    t.class_label = class_from_string(rec.at("class").get<std::string>());
    t.motion = motion_from_string(rec.at("motion").get<std::string>());
    for (const auto& o : rec.at("observations")) {
      const auto& arr = o.at("box");
      Box3D b;
      b.cx = arr[0].get<double>();
      b.cy = arr[1].get<double>();
      b.cz = arr[2].get<double>();
      b.l = arr[3].get<double>();
      b.w = arr[4].get<double>();
      b.h = arr[5].get<double>();
      b.heading = arr[6].get<double>();
      b.score = o.at("score").get<double>();
      b.class_label = t.class_label;
      t.observations[o.at("frame_id").get<int>()] = {
          b, kind_from_string(o.at("kind").get<std::string>())};
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

// --- pseudo-labels -------------------------------------------------------

/// Label-file element: [cx, cy, cz, l, w, h, heading, score, class, source].
inline void write_labels(
    const fs::path& path,
    const std::map<int, std::vector<labels::PseudoLabel>>& by_frame) {
  auto out = open_for_write(path);
  for (const auto& [frame_id, frame_labels] : by_frame) {
    json arr = json::array();
    for (const auto& pl : frame_labels) {
      json e = box_to_json(pl.box);
      e.push_back(labels::to_string(pl.source));
      arr.push_back(e);
    }
    out << json{{"frame_id", frame_id}, {"labels", arr}}.dump() << "\n";
  }
}

inline std::map<int, std::vector<labels::PseudoLabel>> read_labels(
    const fs::path& path) {
  std::map<int, std::vector<labels::PseudoLabel>> by_frame;
  for (const auto& rec : read_jsonl(path)) {
    const int frame_id = rec.at("frame_id").get<int>();
    std::vector<labels::PseudoLabel> frame_labels;
    for (const auto& arr : rec.at("labels")) {
      labels::PseudoLabel pl;
      pl.box = box_from_json(arr);
      if (arr.size() > 9) {
        pl.source = labels::source_tag_from_string(arr[9].get<std::string>());
      }
      frame_labels.push_back(pl);
    }
    by_frame[frame_id] = std::move(frame_labels);
  }
  return by_frame;
}

/// Plain per-frame boxes without a manifest (intermediate artifacts).
inline void write_frame_boxes(const fs::path& path,
                              const std::map<int, std::vector<Box3D>>& by_frame) {
  auto out = open_for_write(path);
  for (const auto& [frame_id, boxes] : by_frame) {
    json arr = json::array();
    for (const auto& b : boxes) arr.push_back(box_to_json(b));
    out << json{{"frame_id", frame_id}, {"boxes", arr}}.dump() << "\n";
  }
}

/// Reads either a label file or a detection-set data file as plain boxes per
/// frame; used by the evaluator, which accepts both shapes.
inline std::map<int, std::vector<Box3D>> read_frame_boxes(const fs::path& path) {
  std::map<int, std::vector<Box3D>> by_frame;
  for (const auto& rec : read_jsonl(path)) {
    const int frame_id = rec.at("frame_id").get<int>();
    const char* key = rec.contains("labels") ? "labels" : "boxes";
    std::vector<Box3D> boxes;
    for (const auto& arr : rec.at(key)) boxes.push_back(box_from_json(arr));
    by_frame[frame_id] = std::move(boxes);
  }
  return by_frame;
}

}  // namespace autolabel::io

#endif  // AUTOLABEL_IO_HPP_
