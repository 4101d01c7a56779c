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

#ifndef AUTOLABEL_PIPELINE_HPP_
#define AUTOLABEL_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "autolabel/ensemble.hpp"
#include "autolabel/errors.hpp"
#include "autolabel/eval.hpp"
#include "autolabel/io.hpp"
#include "autolabel/labels.hpp"
#include "autolabel/parallel.hpp"
#include "autolabel/refine.hpp"
#include "autolabel/tracking.hpp"

namespace autolabel::pipeline {

namespace fs = std::filesystem;

struct MotionConfig {
  double dist_thresh = 2.0;  // meters, begin-to-end
  double var_thresh = 0.5;   // m^2, per-axis center variance
};

struct LabelConfig {
  double nms_thresh = 0.1;
  PerClass<double> s_pos{0.6, 0.5};
};

struct RoundConfig {
  int round_index = 1;
  ensemble::EnsembleSpec ensemble;
  tracking::TrackerStreamConfig ped_all;
  tracking::TrackerStreamConfig veh_all;
  tracking::TrackerStreamConfig veh_static;
  MotionConfig motion;
  refine::RefineConfig refine;
  LabelConfig label;
  // When members are not listed explicitly, all loaded sets join the
  // ensemble; sets whose source_domain matches target_density_tag get
  // matched_weight, others weight 1.
  std::string target_density_tag;
  double matched_weight = 1.5;
  std::string output_dir;
};

inline RoundConfig default_round_config() {
  RoundConfig cfg;
  // Pedestrian footprints are small enough that per-frame fusion jitter
  // breaks a 0.2 IoU gate, so T_p associates at 0.1 with a longer coast.
  cfg.ped_all = {tracking::StreamName::PedAll, 0.3, 0.1, 4, 3, 1.0, 0.25, false};
  cfg.veh_all = {tracking::StreamName::VehAll, 0.4, 0.2, 3, 3, 1.0, 0.25, false};
  cfg.veh_static = {tracking::StreamName::VehStatic, 0.3, 0.5, 3, 3, 1.0, 0.25, false};
  return cfg;
}

/// Checks every cross-module constraint; violations are returned as data
/// (field path + message), not thrown.
inline std::vector<std::string> validate_config(const RoundConfig& cfg) {
  std::vector<std::string> v;
  auto bad = [&](const std::string& field, const std::string& why) {
    v.push_back(field + ": " + why);
  };
  if (cfg.round_index < 1) bad("round_index", "must be >= 1");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < cfg.ensemble.members.size(); ++i) {
    const auto& m = cfg.ensemble.members[i];
    const std::string path = "ensemble.members[" + std::to_string(i) + "]";
    if (m.weight <= 0.0) bad(path + ".weight", "must be > 0");
    if (!ids.insert(m.set_id).second) bad(path + ".set_id", "duplicate id " + m.set_id);
  }
  if (cfg.ensemble.cluster_iou_thresh <= 0.0 || cfg.ensemble.cluster_iou_thresh >= 1.0) {
    bad("ensemble.cluster_iou_thresh", "must be in (0, 1)");
  }
  if (!cfg.ensemble.kbf.valid()) bad("ensemble.kbf", "bandwidths must be > 0, min_cluster_size >= 1");

  auto check_stream = [&](const tracking::TrackerStreamConfig& s,
                          const std::string& path) {
    if (s.input_score_thresh < 0.0 || s.input_score_thresh > 1.0) {
      bad(path + ".input_score_thresh", "must be in [0, 1]");
    }
    if (s.assoc_iou_thresh <= 0.0 || s.assoc_iou_thresh > 1.0) {
      bad(path + ".assoc_iou_thresh", "must be in (0, 1]");
    }
    if (s.max_coast_frames < 0) bad(path + ".max_coast_frames", "must be >= 0");
    if (s.min_hits < 1) bad(path + ".min_hits", "must be >= 1");
    if (s.process_noise <= 0.0) bad(path + ".process_noise", "must be > 0");
    if (s.measurement_noise <= 0.0) bad(path + ".measurement_noise", "must be > 0");
  };
  check_stream(cfg.ped_all, "tracker.ped_all");
  check_stream(cfg.veh_all, "tracker.veh_all");
  check_stream(cfg.veh_static, "tracker.veh_static");

  if (cfg.veh_static.assoc_iou_thresh <= cfg.veh_all.assoc_iou_thresh) {
    bad("tracker.veh_static.assoc_iou_thresh",
        "must exceed tracker.veh_all.assoc_iou_thresh");
  }
  if (cfg.veh_all.input_score_thresh < cfg.veh_static.input_score_thresh) {
    bad("tracker.veh_all.input_score_thresh",
        "must be at least tracker.veh_static.input_score_thresh");
  }

  if (cfg.motion.dist_thresh <= 0.0) bad("motion.dist_thresh", "must be > 0");
  if (cfg.motion.var_thresh <= 0.0) bad("motion.var_thresh", "must be > 0");

  if (!cfg.refine.valid()) bad("refine", "thresholds out of range");
  if (cfg.refine.s_pos.vehicle < cfg.veh_all.input_score_thresh ||
      cfg.refine.s_pos.vehicle < cfg.veh_static.input_score_thresh) {
    bad("refine.s_pos.Vehicle", "must be at least the vehicle tracker input thresholds");
  }
  if (cfg.refine.s_pos.pedestrian < cfg.ped_all.input_score_thresh) {
    bad("refine.s_pos.Pedestrian", "must be at least tracker.ped_all.input_score_thresh");
  }

  if (cfg.label.nms_thresh <= 0.0 || cfg.label.nms_thresh > 1.0) {
    bad("label.nms_thresh", "must be in (0, 1]");
  }
  for (ClassLabel c : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
    if (cfg.label.s_pos[c] < 0.0 || cfg.label.s_pos[c] > 1.0) {
      bad(std::string("label.s_pos.") + to_string(c), "must be in [0, 1]");
    }
  }
  if (cfg.matched_weight <= 0.0) bad("matched_weight", "must be > 0");
  return v;
}

// --- config (de)serialization --------------------------------------------

namespace detail {

using nlohmann::json;

inline void parse_per_class_double(const json& j, PerClass<double>& out) {
  if (j.contains("Vehicle")) out.vehicle = j.at("Vehicle").get<double>();
  if (j.contains("Pedestrian")) out.pedestrian = j.at("Pedestrian").get<double>();
}

inline void parse_stream(const json& j, tracking::TrackerStreamConfig& s) {
  if (j.contains("input_score_thresh")) s.input_score_thresh = j.at("input_score_thresh").get<double>();
  if (j.contains("assoc_iou_thresh")) s.assoc_iou_thresh = j.at("assoc_iou_thresh").get<double>();
  if (j.contains("max_coast_frames")) s.max_coast_frames = j.at("max_coast_frames").get<int>();
  if (j.contains("min_hits")) s.min_hits = j.at("min_hits").get<int>();
  if (j.contains("process_noise")) s.process_noise = j.at("process_noise").get<double>();
  if (j.contains("measurement_noise")) s.measurement_noise = j.at("measurement_noise").get<double>();
  if (j.contains("use_hungarian")) s.use_hungarian = j.at("use_hungarian").get<bool>();
}

}  // namespace detail

inline RoundConfig parse_round_config(const nlohmann::json& j) {
  using detail::parse_per_class_double;
  using detail::parse_stream;
  RoundConfig cfg = default_round_config();
  try {
    if (j.contains("round_index")) cfg.round_index = j.at("round_index").get<int>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("target_density_tag")) cfg.target_density_tag = j.at("target_density_tag").get<std::string>();
    if (j.contains("matched_weight")) cfg.matched_weight = j.at("matched_weight").get<double>();

    if (j.contains("ensemble")) {
      const auto& e = j.at("ensemble");
      if (e.contains("members")) {
        for (const auto& m : e.at("members")) {
          cfg.ensemble.members.push_back(
              {m.at("set_id").get<std::string>(),
               m.contains("weight") ? m.at("weight").get<double>() : 1.0});
        }
      }
      if (e.contains("class_exclusions")) {
        for (const auto& [set_id, classes] : e.at("class_exclusions").items()) {
          for (const auto& c : classes) {
            cfg.ensemble.class_exclusions[set_id].insert(
                class_from_string(c.get<std::string>()));
          }
        }
      }
      if (e.contains("cluster_iou_thresh")) {
        cfg.ensemble.cluster_iou_thresh = e.at("cluster_iou_thresh").get<double>();
      }
      if (e.contains("kbf")) {
        const auto& k = e.at("kbf");
        if (k.contains("kernel")) {
          const auto name = k.at("kernel").get<std::string>();
          if (name == "gaussian") cfg.ensemble.kbf.kernel = kbf::Kernel::Gaussian;
          else if (name == "epanechnikov") cfg.ensemble.kbf.kernel = kbf::Kernel::Epanechnikov;
          else throw ConfigError("unknown kernel: " + name);
        }
        if (k.contains("bandwidth")) {
          const auto& b = k.at("bandwidth");
          if (b.contains("center")) cfg.ensemble.kbf.bandwidth.center = b.at("center").get<double>();
          if (b.contains("dims")) cfg.ensemble.kbf.bandwidth.dims = b.at("dims").get<double>();
          if (b.contains("heading")) cfg.ensemble.kbf.bandwidth.heading = b.at("heading").get<double>();
          if (b.contains("score")) cfg.ensemble.kbf.bandwidth.score = b.at("score").get<double>();
        }
        if (k.contains("min_cluster_size")) {
          cfg.ensemble.kbf.min_cluster_size = k.at("min_cluster_size").get<std::size_t>();
        }
        if (k.contains("score_fusion")) {
          const auto name = k.at("score_fusion").get<std::string>();
          if (name == "kde") cfg.ensemble.kbf.score_fusion = kbf::ScoreFusion::Kde;
          else if (name == "max") cfg.ensemble.kbf.score_fusion = kbf::ScoreFusion::Max;
          else throw ConfigError("unknown score_fusion: " + name);
        }
      }
    }
    if (j.contains("tracker")) {
      const auto& t = j.at("tracker");
      if (t.contains("ped_all")) parse_stream(t.at("ped_all"), cfg.ped_all);
      if (t.contains("veh_all")) parse_stream(t.at("veh_all"), cfg.veh_all);
      if (t.contains("veh_static")) parse_stream(t.at("veh_static"), cfg.veh_static);
    }
    if (j.contains("motion")) {
      const auto& m = j.at("motion");
      if (m.contains("dist_thresh")) cfg.motion.dist_thresh = m.at("dist_thresh").get<double>();
      if (m.contains("var_thresh")) cfg.motion.var_thresh = m.at("var_thresh").get<double>();
    }
    if (j.contains("refine")) {
      const auto& r = j.at("refine");
      if (r.contains("s_pos")) parse_per_class_double(r.at("s_pos"), cfg.refine.s_pos);
      if (r.contains("n_pos")) {
        const auto& n = r.at("n_pos");
        if (n.contains("Vehicle")) cfg.refine.n_pos.vehicle = n.at("Vehicle").get<int>();
        if (n.contains("Pedestrian")) cfg.refine.n_pos.pedestrian = n.at("Pedestrian").get<int>();
      }
      if (r.contains("history_window")) cfg.refine.history_window = r.at("history_window").get<int>();
      if (r.contains("use_static_pedestrians")) {
        cfg.refine.use_static_pedestrians = r.at("use_static_pedestrians").get<bool>();
      }
      if (r.contains("extrapolation_limit")) {
        cfg.refine.extrapolation_limit = r.at("extrapolation_limit").get<int>();
      }
    }
    if (j.contains("label")) {
      const auto& l = j.at("label");
      if (l.contains("nms_thresh")) cfg.label.nms_thresh = l.at("nms_thresh").get<double>();
      if (l.contains("s_pos")) parse_per_class_double(l.at("s_pos"), cfg.label.s_pos);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RoundConfig load_round_config(const fs::path& path) {
  return parse_round_config(io::read_json_file(path));
}

// --- stage functions -------------------------------------------------------

struct RoundInputs {
  std::vector<ensemble::DetectionSet> sets;
  std::vector<FramePose> poses;
  std::vector<PointCloud> clouds;
  std::map<int, std::vector<Box3D>> ground_truth;  // optional
  bool has_ground_truth = false;
};

/// Expects input_dir/detections/*.manifest.json (+ .jsonl), poses.jsonl,
/// clouds.jsonl and optionally ground_truth.jsonl.
inline RoundInputs load_round_inputs(const fs::path& input_dir) {
  RoundInputs in;
  in.sets = io::read_detection_sets(input_dir / "detections");
  in.poses = io::read_poses(input_dir / "poses.jsonl");
  in.clouds = io::read_clouds(input_dir / "clouds.jsonl");
  const fs::path gt = input_dir / "ground_truth.jsonl";
  if (fs::exists(gt)) {
    in.ground_truth = io::read_frame_boxes(gt);
    in.has_ground_truth = true;
  }
  return in;
}

/// Resolves implicit ensemble membership (all loaded sets, density-matched
/// sources upweighted) when the config does not list members.
inline ensemble::EnsembleSpec resolve_ensemble_spec(
    const RoundConfig& cfg, std::span<const ensemble::DetectionSet> sets) {
  ensemble::EnsembleSpec spec = cfg.ensemble;
  if (spec.members.empty()) {
    for (const auto& s : sets) {
      const double w = (!cfg.target_density_tag.empty() &&
                        s.source_domain == cfg.target_density_tag)
                           ? cfg.matched_weight
                           : 1.0;
      spec.members.push_back({s.set_id, w});
    }
  }
  return spec;
}

/// Frame ids of the sequence (from the poses) with consistency checks:
/// every referenced detection set exists, detections and clouds stay within
/// the pose frame range.
inline std::vector<int> checked_frame_ids(const RoundInputs& in,
                                          const ensemble::EnsembleSpec& spec) {
  std::set<int> pose_frames;
  for (const auto& p : in.poses) pose_frames.insert(p.frame_id);
  if (pose_frames.empty()) throw InputError("no poses given");

  for (const auto& m : spec.members) {
    const auto it =
        std::find_if(in.sets.begin(), in.sets.end(),
                     [&](const auto& s) { return s.set_id == m.set_id; });
    if (it == in.sets.end()) {
      throw InputError("detection set not found: " + m.set_id);
    }
    for (const auto& [frame_id, boxes] : it->frames) {
      if (pose_frames.count(frame_id) == 0) {
        throw InputError("detection set " + m.set_id + " has frame " +
                         std::to_string(frame_id) + " outside the pose range");
      }
    }
  }
  std::set<int> cloud_frames;
  for (const auto& c : in.clouds) cloud_frames.insert(c.frame_id);
  for (int f : pose_frames) {
    if (cloud_frames.count(f) == 0) {
      throw InputError("no point cloud for frame " + std::to_string(f));
    }
  }
  return {pose_frames.begin(), pose_frames.end()};
}

/// Stage 1: per-frame KBF fusion of the ensemble (sensor frame).
inline std::map<int, std::vector<Box3D>> fuse_frames(
    std::span<const ensemble::DetectionSet> sets,
    const ensemble::EnsembleSpec& spec, std::span<const int> frame_ids,
    int jobs = 1) {
  std::vector<std::vector<Box3D>> results(frame_ids.size());
  parallel_for(frame_ids.size(), jobs, [&](std::size_t i) {
    results[i] = ensemble::assemble_frame_proposals(frame_ids[i], sets, spec);
  });
  std::map<int, std::vector<Box3D>> out;
  for (std::size_t i = 0; i < frame_ids.size(); ++i) {
    out[frame_ids[i]] = std::move(results[i]);
  }
  return out;
}

struct TrackStreams {
  std::vector<tracking::Track> ped_all;
  std::vector<tracking::Track> veh_all;
  std::vector<tracking::Track> veh_static;
};

/// Stage 2: the three tracker streams over the fused proposals, with motion
/// classification applied to every track.
inline TrackStreams track_streams(const std::map<int, std::vector<Box3D>>& b_kbf,
                                  std::span<const FramePose> poses,
                                  const RoundConfig& cfg) {
  std::vector<std::pair<int, std::vector<Box3D>>> frames(b_kbf.begin(),
                                                         b_kbf.end());
  TrackStreams out;
  out.ped_all = tracking::run_tracker(frames, poses, cfg.ped_all);
  out.veh_all = tracking::run_tracker(frames, poses, cfg.veh_all);
  out.veh_static = tracking::run_tracker(frames, poses, cfg.veh_static);
  for (auto* stream : {&out.ped_all, &out.veh_all, &out.veh_static}) {
    for (auto& t : *stream) {
      t.motion = tracking::classify_motion(t, cfg.motion.dist_thresh,
                                           cfg.motion.var_thresh);
    }
  }
  return out;
}

struct RefinedBoxes {
  std::map<int, std::vector<Box3D>> b_static;  // world frame
  std::map<int, std::vector<Box3D>> t_veh;     // world frame
  std::map<int, std::vector<Box3D>> t_ped;     // world frame
  std::vector<tracking::Track> refined_ped_tracks;
};

/// Stage 3: temporal refinement. Static vehicles are fused over the history
/// window, confident dynamic vehicles are gap-filled, pedestrian tracks are
/// motion-screened and gap-filled.
inline RefinedBoxes refine_tracks(const TrackStreams& streams,
                                  const RoundConfig& cfg) {
  RefinedBoxes out;
  for (const auto& t : refine::retroactive_filter(streams.veh_static, cfg.refine)) {
    if (t.motion != tracking::MotionClass::Static) continue;
    for (const auto& [frame_id, box] :
         refine::refine_static_vehicle(t, cfg.refine, cfg.ensemble.kbf)) {
      out.b_static[frame_id].push_back(box);
    }
  }
  for (const auto& t : refine::retroactive_filter(streams.veh_all, cfg.refine)) {
    if (t.motion != tracking::MotionClass::Dynamic) continue;
    const auto filled = refine::fill_dynamic_track(t, cfg.refine);
    for (const auto& [frame_id, obs] : filled.observations) {
      out.t_veh[frame_id].push_back(obs.box);
    }
  }
  out.refined_ped_tracks = refine::refine_pedestrians(streams.ped_all, cfg.refine);
  for (const auto& t : out.refined_ped_tracks) {
    for (const auto& [frame_id, obs] : t.observations) {
      out.t_ped[frame_id].push_back(obs.box);
    }
  }
  return out;
}

/// Stage 4: per-frame label assembly and filtering, in sensor coordinates.
inline std::map<int, std::vector<labels::PseudoLabel>> build_labels(
    const std::map<int, std::vector<Box3D>>& b_kbf, const RefinedBoxes& refined,
    std::span<const FramePose> poses, std::span<const PointCloud> clouds,
    const LabelConfig& label_cfg, std::span<const int> frame_ids, int jobs = 1) {
  std::map<int, const FramePose*> pose_by_frame;
  for (const auto& p : poses) pose_by_frame[p.frame_id] = &p;
  std::map<int, const PointCloud*> cloud_by_frame;
  for (const auto& c : clouds) cloud_by_frame[c.frame_id] = &c;

  auto to_sensor = [&](const std::map<int, std::vector<Box3D>>& world, int f,
                       const FramePose& pose) {
    std::vector<Box3D> out;
    const auto it = world.find(f);
    if (it == world.end()) return out;
    out.reserve(it->second.size());
    for (const auto& b : it->second) out.push_back(pose.box_to_sensor(b));
    return out;
  };

  std::vector<std::vector<labels::PseudoLabel>> results(frame_ids.size());
  parallel_for(frame_ids.size(), jobs, [&](std::size_t i) {
    const int f = frame_ids[i];
    const FramePose& pose = *pose_by_frame.at(f);
    const PointCloud& cloud = *cloud_by_frame.at(f);
    static const std::vector<Box3D> kEmpty;
    const auto kbf_it = b_kbf.find(f);
    const auto& fused = kbf_it == b_kbf.end() ? kEmpty : kbf_it->second;
    const auto assembled = labels::assemble_pseudo_labels(
        fused, to_sensor(refined.b_static, f, pose),
        to_sensor(refined.t_veh, f, pose), to_sensor(refined.t_ped, f, pose),
        label_cfg.nms_thresh);
    results[i] = labels::filter_labels(assembled, cloud, label_cfg.s_pos);
  });
  std::map<int, std::vector<labels::PseudoLabel>> out;
  for (std::size_t i = 0; i < frame_ids.size(); ++i) {
    out[frame_ids[i]] = std::move(results[i]);
  }
  return out;
}

// --- round report ----------------------------------------------------------

struct RoundReport {
  int round_index = 1;
  std::size_t frames = 0;
  std::size_t labels_total = 0;
  std::size_t label_lines = 0;
  std::vector<std::pair<double, double>> bins = eval::default_range_bins();
  std::map<ClassLabel, std::vector<std::size_t>> counts;  // per bin
  std::map<ClassLabel, std::size_t> counts_beyond;
  std::optional<eval::PrTable> pr;  // BEV, default IoU thresholds

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["round_index"] = round_index;
    j["frames"] = frames;
    j["labels_total"] = labels_total;
    j["label_lines"] = label_lines;
    nlohmann::json counts_json;
    for (const auto& [cls, per_bin] : counts) {
      nlohmann::json c;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        c[bin_name(i)] = per_bin[i];
      }
      c["beyond"] = counts_beyond.at(cls);
      counts_json[to_string(cls)] = c;
    }
    j["counts"] = counts_json;
    if (pr) {
      nlohmann::json pr_json;
      for (const auto& [cls, stats] : *pr) {
        nlohmann::json c;
        for (std::size_t i = 0; i < bins.size(); ++i) {
          nlohmann::json s;
          s["tp"] = stats[i].tp;
          s["fp"] = stats[i].fp;
          s["fn"] = stats[i].fn;
          if (auto p = stats[i].precision()) s["precision"] = *p;
          else s["precision"] = nullptr;
          if (auto r = stats[i].recall()) s["recall"] = *r;
          else s["recall"] = nullptr;
          c[bin_name(i)] = s;
        }
        pr_json[to_string(cls)] = c;
      }
      j["precision_recall"] = pr_json;
    }
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "round " << round_index << ": " << labels_total << " labels over "
       << frames << " frames\n";
    for (const auto& [cls, per_bin] : counts) {
      os << "  " << to_string(cls) << ":";
      for (std::size_t i = 0; i < bins.size(); ++i) {
        os << "  " << bin_name(i) << "=" << per_bin[i];
      }
      os << "  beyond=" << counts_beyond.at(cls) << "\n";
    }
    if (pr) {
      for (const auto& [cls, stats] : *pr) {
        os << "  " << to_string(cls) << " P/R:";
        for (std::size_t i = 0; i < bins.size(); ++i) {
          auto fmt = [](std::optional<double> v) {
            if (!v) return std::string("n/a");
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.3f", *v);
            return std::string(buf);
          };
          os << "  " << bin_name(i) << "=" << fmt(stats[i].precision()) << "/"
             << fmt(stats[i].recall());
        }
        os << "\n";
      }
    }
    return os.str();
  }

 private:
  std::string bin_name(std::size_t i) const {
    std::ostringstream os;
    os << bins[i].first << "-" << bins[i].second;
    return os.str();
  }
};

struct RoundResult {
  std::map<int, std::vector<Box3D>> b_kbf;
  TrackStreams streams;
  RefinedBoxes refined;
  std::map<int, std::vector<labels::PseudoLabel>> labels_by_frame;
  RoundReport report;
};

/// Runs one full self-training round in memory: fuse -> track -> refine ->
/// label, then summarizes. Nothing is read from or written to disk here;
/// write_round_outputs persists the result.
inline RoundResult run_round(const RoundInputs& inputs, const RoundConfig& cfg,
                             int jobs = 1) {
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  const auto spec = resolve_ensemble_spec(cfg, inputs.sets);
  const auto frame_ids = checked_frame_ids(inputs, spec);

  RoundResult result;
  result.b_kbf = fuse_frames(inputs.sets, spec, frame_ids, jobs);
  result.streams = track_streams(result.b_kbf, inputs.poses, cfg);
  result.refined = refine_tracks(result.streams, cfg);
  result.labels_by_frame =
      build_labels(result.b_kbf, result.refined, inputs.poses, inputs.clouds,
                   cfg.label, frame_ids, jobs);

  RoundReport& rep = result.report;
  rep.round_index = cfg.round_index;
  rep.frames = frame_ids.size();
  rep.label_lines = result.labels_by_frame.size();
  for (ClassLabel c : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
    rep.counts[c] = std::vector<std::size_t>(rep.bins.size(), 0);
    rep.counts_beyond[c] = 0;
  }
  for (const auto& [f, frame_labels] : result.labels_by_frame) {
    for (const auto& pl : frame_labels) {
      ++rep.labels_total;
      const int bin = eval::range_bin_of(pl.box, rep.bins);
      if (bin >= 0) {
        ++rep.counts[pl.box.class_label][static_cast<std::size_t>(bin)];
      } else {
        ++rep.counts_beyond[pl.box.class_label];
      }
    }
  }
  if (inputs.has_ground_truth) {
    std::vector<std::pair<std::vector<Box3D>, std::vector<Box3D>>> frames;
    for (const auto& [f, frame_labels] : result.labels_by_frame) {
      std::vector<Box3D> preds;
      for (const auto& pl : frame_labels) preds.push_back(pl.box);
      const auto gt_it = inputs.ground_truth.find(f);
      frames.emplace_back(std::move(preds),
                          gt_it == inputs.ground_truth.end()
                              ? std::vector<Box3D>{}
                              : gt_it->second);
    }
    rep.pr = eval::pr_by_range(frames, rep.bins, eval::default_iou_thresholds(),
                               eval::MatchMode::Bev);
  }
  return result;
}

/// Persists labels, intermediate artifacts and the report.
inline void write_round_outputs(const RoundResult& result,
                                const fs::path& output_dir) {
  io::write_labels(output_dir / "labels.jsonl", result.labels_by_frame);
  ensemble::DetectionSet fused;
  fused.set_id = "kbf";
  fused.detector_id = "kbf";
  fused.source_domain = "ensemble";
  fused.frames = result.b_kbf;
  io::write_detection_set(output_dir, fused);
  io::write_tracks(output_dir / "tracks_ped_all.jsonl", result.streams.ped_all);
  io::write_tracks(output_dir / "tracks_veh_all.jsonl", result.streams.veh_all);
  io::write_tracks(output_dir / "tracks_veh_static.jsonl",
                   result.streams.veh_static);
  {
    auto out = io::open_for_write(output_dir / "report.json");
    out << result.report.to_json().dump(2) << "\n";
  }
  auto out = io::open_for_write(output_dir / "report.txt");
  out << result.report.to_text();
}

}  // namespace autolabel::pipeline

#endif  // AUTOLABEL_PIPELINE_HPP_
