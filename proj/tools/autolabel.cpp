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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "autolabel/io.hpp"
#include "autolabel/pipeline.hpp"
#include "autolabel/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace autolabel;

int log_level() {
  const char* env = std::getenv("AUTOLABEL_LOG");
  if (env == nullptr) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[autolabel] " << msg << "\n";
}

pipeline::RoundConfig load_config_or_default(const std::string& path,
                                             int round_override) {
  pipeline::RoundConfig cfg = path.empty()
                                  ? pipeline::default_round_config()
                                  : pipeline::load_round_config(path);
  if (round_override > 0) cfg.round_index = round_override;
  return cfg;
}

synth::SceneSpec parse_scene_spec(const nlohmann::json& j) {
  synth::SceneSpec spec;
  if (j.contains("n_frames")) spec.n_frames = j.at("n_frames").get<int>();
  if (j.contains("frame_dt")) spec.frame_dt = j.at("frame_dt").get<double>();
  if (j.contains("ego_path")) {
    const auto p = j.at("ego_path").get<std::string>();
    if (p == "straight") spec.ego_path = synth::EgoPathKind::Straight;
    else if (p == "arc") spec.ego_path = synth::EgoPathKind::Arc;
    else throw ConfigError("unknown ego_path: " + p);
  }
  if (j.contains("ego_speed")) spec.ego_speed = j.at("ego_speed").get<double>();
  if (j.contains("ego_turn_rate")) spec.ego_turn_rate = j.at("ego_turn_rate").get<double>();
  if (j.contains("static_vehicles")) spec.static_vehicles = j.at("static_vehicles").get<int>();
  if (j.contains("dynamic_vehicles")) spec.dynamic_vehicles = j.at("dynamic_vehicles").get<int>();
  if (j.contains("dynamic_pedestrians")) spec.dynamic_pedestrians = j.at("dynamic_pedestrians").get<int>();
  if (j.contains("static_pedestrians")) spec.static_pedestrians = j.at("static_pedestrians").get<int>();
  if (j.contains("pole_distractors")) spec.pole_distractors = j.at("pole_distractors").get<int>();
  if (j.contains("min_range")) spec.min_range = j.at("min_range").get<double>();
  if (j.contains("max_range")) spec.max_range = j.at("max_range").get<double>();
  if (j.contains("rng_seed")) spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  if (!spec.valid()) throw ConfigError("invalid scene spec");
  return spec;
}

int cmd_synth(const std::string& spec_path, const std::string& output_dir,
              std::uint64_t seed, const std::string& profiles_name) {
  synth::SceneSpec spec;
  spec.n_frames = 200;
  spec.static_vehicles = 14;
  spec.dynamic_vehicles = 8;
  spec.dynamic_pedestrians = 10;
  spec.static_pedestrians = 4;
  spec.pole_distractors = 6;
  if (!spec_path.empty()) spec = parse_scene_spec(io::read_json_file(spec_path));
  spec.rng_seed = seed;

  std::vector<synth::DetectorProfile> profiles;
  if (profiles_name == "round1") {
    profiles = synth::round1_profiles();
  } else if (profiles_name == "round2") {
    profiles = synth::round2_profiles();
  } else if (profiles_name == "both") {
    profiles = synth::round1_profiles();
    const auto r2 = synth::round2_profiles();
    profiles.insert(profiles.end(), r2.begin(), r2.end());
  } else {
    throw ConfigError("unknown profile family: " + profiles_name);
  }

  log_info("generating scene with seed " + std::to_string(seed));
  const auto truth = synth::generate_scene(spec);
  const fs::path out(output_dir);
  io::write_poses(out / "poses.jsonl", truth.poses);
  io::write_clouds(out / "clouds.jsonl", truth.clouds);
  io::write_frame_boxes(out / "ground_truth.jsonl", truth.gt);
  std::uint64_t det_seed = seed;
  for (const auto& profile : profiles) {
    const auto set = synth::simulate_detector(truth, profile, ++det_seed);
    io::write_detection_set(out / "detections", set);
    log_info("wrote detection set " + set.set_id);
  }
  return 0;
}

int cmd_fuse(const std::string& config_path, const std::string& input_dir,
             const std::string& output_dir, int jobs, int round_override) {
  const auto cfg = load_config_or_default(config_path, round_override);
  const auto violations = pipeline::validate_config(cfg);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "config: " << v << "\n";
    return 2;
  }
  const auto inputs = pipeline::load_round_inputs(input_dir);
  const auto spec = pipeline::resolve_ensemble_spec(cfg, inputs.sets);
  const auto frame_ids = pipeline::checked_frame_ids(inputs, spec);
  const auto b_kbf = pipeline::fuse_frames(inputs.sets, spec, frame_ids, jobs);

  ensemble::DetectionSet fused;
  fused.set_id = "kbf";
  fused.detector_id = "kbf";
  fused.source_domain = "ensemble";
  fused.frames = b_kbf;
  io::write_detection_set(output_dir, fused);
  log_info("wrote fused proposals for " + std::to_string(frame_ids.size()) +
           " frames");
  return 0;
}

int cmd_track(const std::string& config_path, const std::string& input_dir,
              const std::string& output_dir, int round_override) {
  const auto cfg = load_config_or_default(config_path, round_override);
  const auto poses = io::read_poses(fs::path(input_dir) / "poses.jsonl");
  const auto fused =
      io::read_detection_set(fs::path(output_dir) / "kbf.manifest.json");
  const auto streams = pipeline::track_streams(fused.frames, poses, cfg);
  const fs::path out(output_dir);
  io::write_tracks(out / "tracks_ped_all.jsonl", streams.ped_all);
  io::write_tracks(out / "tracks_veh_all.jsonl", streams.veh_all);
  io::write_tracks(out / "tracks_veh_static.jsonl", streams.veh_static);
  log_info("tracked: ped_all=" + std::to_string(streams.ped_all.size()) +
           " veh_all=" + std::to_string(streams.veh_all.size()) +
           " veh_static=" + std::to_string(streams.veh_static.size()));
  return 0;
}

int cmd_refine(const std::string& config_path, const std::string& output_dir,
               int round_override) {
  const auto cfg = load_config_or_default(config_path, round_override);
  const fs::path out(output_dir);
  pipeline::TrackStreams streams;
  streams.ped_all = io::read_tracks(out / "tracks_ped_all.jsonl");
  streams.veh_all = io::read_tracks(out / "tracks_veh_all.jsonl");
  streams.veh_static = io::read_tracks(out / "tracks_veh_static.jsonl");
  const auto refined = pipeline::refine_tracks(streams, cfg);
  io::write_frame_boxes(out / "refined_static.jsonl", refined.b_static);
  io::write_frame_boxes(out / "refined_veh.jsonl", refined.t_veh);
  io::write_frame_boxes(out / "refined_ped.jsonl", refined.t_ped);
  io::write_tracks(out / "refined_ped_tracks.jsonl", refined.refined_ped_tracks);
  log_info("refined static frames=" + std::to_string(refined.b_static.size()));
  return 0;
}

int cmd_label(const std::string& config_path, const std::string& input_dir,
              const std::string& output_dir, int jobs, int round_override) {
  const auto cfg = load_config_or_default(config_path, round_override);
  const fs::path out(output_dir);
  const auto poses = io::read_poses(fs::path(input_dir) / "poses.jsonl");
  const auto clouds = io::read_clouds(fs::path(input_dir) / "clouds.jsonl");
  const auto fused = io::read_detection_set(out / "kbf.manifest.json");
  pipeline::RefinedBoxes refined;
  refined.b_static = io::read_frame_boxes(out / "refined_static.jsonl");
  refined.t_veh = io::read_frame_boxes(out / "refined_veh.jsonl");
  refined.t_ped = io::read_frame_boxes(out / "refined_ped.jsonl");

  std::vector<int> frame_ids;
  for (const auto& p : poses) frame_ids.push_back(p.frame_id);
  std::sort(frame_ids.begin(), frame_ids.end());

  const auto labels_by_frame = pipeline::build_labels(
      fused.frames, refined, poses, clouds, cfg.label, frame_ids, jobs);
  io::write_labels(out / "labels.jsonl", labels_by_frame);
  std::size_t total = 0;
  for (const auto& [f, ls] : labels_by_frame) total += ls.size();
  log_info("wrote " + std::to_string(total) + " labels");
  return 0;
}

int cmd_round(const std::string& config_path, const std::string& input_dir,
              const std::string& output_dir, int jobs, int round_override) {
  auto cfg = load_config_or_default(config_path, round_override);
  const auto inputs = pipeline::load_round_inputs(input_dir);
  const auto result = pipeline::run_round(inputs, cfg, jobs);
  const fs::path out = output_dir.empty() ? fs::path(cfg.output_dir)
                                          : fs::path(output_dir);
  if (out.empty()) throw ConfigError("no output directory given");
  pipeline::write_round_outputs(result, out);
  std::cout << result.report.to_text();
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& output_path, double iou_vehicle,
             double iou_pedestrian) {
  const auto preds = io::read_frame_boxes(pred_path);
  const auto gts = io::read_frame_boxes(gt_path);
  std::vector<std::pair<std::vector<Box3D>, std::vector<Box3D>>> frames;
  std::set<int> ids;
  for (const auto& [f, b] : preds) ids.insert(f);
  for (const auto& [f, b] : gts) ids.insert(f);
  for (int f : ids) {
    const auto p = preds.find(f);
    const auto g = gts.find(f);
    frames.emplace_back(p == preds.end() ? std::vector<Box3D>{} : p->second,
                        g == gts.end() ? std::vector<Box3D>{} : g->second);
  }
  const PerClass<double> thresh{iou_vehicle, iou_pedestrian};
  const auto bins = eval::default_range_bins();

  nlohmann::json report;
  for (const auto mode : {eval::MatchMode::Bev, eval::MatchMode::ThreeD}) {
    const char* tag = mode == eval::MatchMode::Bev ? "bev" : "3d";
    const auto table = eval::pr_by_range(frames, bins, thresh, mode);
    nlohmann::json t;
    for (const auto& [cls, stats] : table) {
      nlohmann::json c;
      for (std::size_t i = 0; i < bins.size(); ++i) {
        std::ostringstream name;
        name << bins[i].first << "-" << bins[i].second;
        nlohmann::json s;
        s["tp"] = stats[i].tp;
        s["fp"] = stats[i].fp;
        s["fn"] = stats[i].fn;
        if (auto p = stats[i].precision()) s["precision"] = *p;
        else s["precision"] = nullptr;
        if (auto r = stats[i].recall()) s["recall"] = *r;
        else s["recall"] = nullptr;
        c[name.str()] = s;
      }
      t[to_string(cls)] = c;
    }
    report[std::string("pr_") + tag] = t;
    nlohmann::json ap;
    for (ClassLabel cls : {ClassLabel::Vehicle, ClassLabel::Pedestrian}) {
      ap[to_string(cls)] = eval::average_precision(frames, thresh, mode, cls);
    }
    report[std::string("ap_") + tag] = ap;
  }
  if (output_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    auto out = io::open_for_write(output_path);
    out << report.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autolabel: kernel-density box fusion, tracking and temporal "
               "refinement for 3D pseudo-labels"};
  app.require_subcommand(1);

  std::string config_path, input_dir, output_dir, spec_path;
  std::string pred_path, gt_path, eval_output;
  std::string profiles_name = "round1";
  std::uint64_t seed = 1;
  int jobs = 1;
  int round_override = 0;
  double iou_vehicle = 0.7, iou_pedestrian = 0.5;

  auto add_common = [&](CLI::App* sub, bool with_input, bool with_output) {
    sub->add_option("--config", config_path, "round config file (JSON)");
    if (with_input) sub->add_option("--input-dir", input_dir, "sequence input directory")->required();
    if (with_output) sub->add_option("--output-dir", output_dir, "output directory")->required();
    sub->add_option("--jobs", jobs, "worker threads for per-frame stages");
    sub->add_option("--round", round_override, "override round index");
  };

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic sequence with simulated detector outputs");
  synth_cmd->add_option("--spec", spec_path, "scene spec file (JSON)");
  synth_cmd->add_option("--seed", seed, "RNG seed");
  synth_cmd->add_option("--output-dir", output_dir, "output directory")->required();
  synth_cmd->add_option("--profiles", profiles_name, "detector profile family: round1|round2|both");

  auto* fuse_cmd = app.add_subcommand("fuse", "fuse detection sets into per-frame proposals (KBF)");
  add_common(fuse_cmd, true, true);
  auto* track_cmd = app.add_subcommand("track", "run the three tracker streams over fused proposals");
  add_common(track_cmd, true, true);
  auto* refine_cmd = app.add_subcommand("refine", "temporal refinement of the tracker streams");
  add_common(refine_cmd, false, true);
  auto* label_cmd = app.add_subcommand("label", "assemble and filter the final pseudo-labels");
  add_common(label_cmd, true, true);
  auto* round_cmd = app.add_subcommand("round", "run one full self-training round");
  add_common(round_cmd, true, true);

  auto* eval_cmd = app.add_subcommand("eval", "precision/recall and AP against ground truth");
  eval_cmd->add_option("--pred", pred_path, "predicted labels (JSONL)")->required();
  eval_cmd->add_option("--gt", gt_path, "ground-truth boxes (JSONL)")->required();
  eval_cmd->add_option("--output", eval_output, "report file (default: stdout)");
  eval_cmd->add_option("--iou-vehicle", iou_vehicle, "vehicle match IoU");
  eval_cmd->add_option("--iou-pedestrian", iou_pedestrian, "pedestrian match IoU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(spec_path, output_dir, seed, profiles_name);
    if (fuse_cmd->parsed()) return cmd_fuse(config_path, input_dir, output_dir, jobs, round_override);
    if (track_cmd->parsed()) return cmd_track(config_path, input_dir, output_dir, round_override);
    if (refine_cmd->parsed()) return cmd_refine(config_path, output_dir, round_override);
    if (label_cmd->parsed()) return cmd_label(config_path, input_dir, output_dir, jobs, round_override);
    if (round_cmd->parsed()) return cmd_round(config_path, input_dir, output_dir, jobs, round_override);
    if (eval_cmd->parsed()) return cmd_eval(pred_path, gt_path, eval_output, iou_vehicle, iou_pedestrian);
  } catch (const autolabel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const autolabel::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}
