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

#ifndef AUTOLABEL_SYNTH_HPP_
#define AUTOLABEL_SYNTH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "autolabel/ensemble.hpp"
#include "autolabel/eval.hpp"
#include "autolabel/geometry.hpp"

namespace autolabel::synth {

enum class EgoPathKind : std::uint8_t { Straight, Arc };

struct SceneSpec {
  int n_frames = 100;
  double frame_dt = 0.1;  // seconds
  EgoPathKind ego_path = EgoPathKind::Straight;
  double ego_speed = 8.0;      // m/s
  double ego_turn_rate = 0.0;  // rad/s, used by Arc
  int static_vehicles = 10;
  int dynamic_vehicles = 5;
  int dynamic_pedestrians = 5;
  int static_pedestrians = 2;
  int pole_distractors = 4;
  double min_range = 5.0;   // placement band relative to the ego path
  double max_range = 80.0;
  std::uint64_t rng_seed = 1;

  bool valid() const {
    return n_frames >= 2 && frame_dt > 0.0 && static_vehicles >= 0 &&
           dynamic_vehicles >= 0 && dynamic_pedestrians >= 0 &&
           static_pedestrians >= 0 && pole_distractors >= 0 &&
           min_range >= 0.0 && max_range > min_range;
  }
};

enum class ObjectKind : std::uint8_t {
  StaticVehicle,
  DynamicVehicle,
  DynamicPedestrian,
  StaticPedestrian,
  Pole
};

inline bool is_pole(ObjectKind k) { return k == ObjectKind::Pole; }

inline bool is_static(ObjectKind k) {
  return k == ObjectKind::StaticVehicle || k == ObjectKind::StaticPedestrian ||
         k == ObjectKind::Pole;
}

inline ClassLabel object_class(ObjectKind k) {
  return (k == ObjectKind::StaticVehicle || k == ObjectKind::DynamicVehicle)
             ? ClassLabel::Vehicle
             : ClassLabel::Pedestrian;
}

/// A ground-truth object with a closed-form world trajectory: constant
/// velocity, optionally with a gentle constant turn rate.
struct TruthObject {
  int object_id = 0;
  ObjectKind kind = ObjectKind::StaticVehicle;
  double x0 = 0.0, y0 = 0.0, heading0 = 0.0;
  double speed = 0.0;      // m/s along heading
  double turn_rate = 0.0;  // rad/s
  double l = 4.6, w = 1.9, h = 1.7;

  /// World-frame box at time t seconds.
  Box3D box_at(double t) const {
    Box3D b;
    double x = x0, y = y0, heading = heading0;
    if (speed != 0.0) {
      if (std::abs(turn_rate) > 1e-9) {
        const double r = speed / turn_rate;
        x = x0 + r * (std::sin(heading0 + turn_rate * t) - std::sin(heading0));
        y = y0 - r * (std::cos(heading0 + turn_rate * t) - std::cos(heading0));
        heading = heading0 + turn_rate * t;
      } else {
        x = x0 + speed * t * std::cos(heading0);
        y = y0 + speed * t * std::sin(heading0);
      }
    }
    b.cx = x;
    b.cy = y;
    b.cz = 0.5 * h;
    b.l = l;
    b.w = w;
    b.h = h;
    b.heading = normalize_heading(heading);
    b.score = 1.0;
    b.class_label = is_pole(kind) ? ClassLabel::Pedestrian : object_class(kind);
    return b;
  }
};

struct SceneTruth {
  SceneSpec spec;
  std::vector<TruthObject> objects;  // poles included, at the tail
  std::vector<FramePose> poses;      // sensor -> world, one per frame
  std::vector<PointCloud> clouds;    // sensor frame, XYZT
  std::map<int, std::vector<Box3D>> gt;  // sensor frame, poles excluded

  double time_of_frame(int frame_id) const { return frame_id * spec.frame_dt; }

  const FramePose& pose(int frame_id) const {
    return poses.at(static_cast<std::size_t>(frame_id));
  }
};

namespace detail {

inline FramePose ego_pose(const SceneSpec& spec, int frame_id) {
  const double t = frame_id * spec.frame_dt;
  double x = spec.ego_speed * t, y = 0.0, yaw = 0.0;
  if (spec.ego_path == EgoPathKind::Arc && std::abs(spec.ego_turn_rate) > 1e-9) {
    const double r = spec.ego_speed / spec.ego_turn_rate;
    x = r * std::sin(spec.ego_turn_rate * t);
    y = r * (1.0 - std::cos(spec.ego_turn_rate * t));
    yaw = spec.ego_turn_rate * t;
  }
  FramePose p;
  const double c = std::cos(yaw), s = std::sin(yaw);
  p.rotation = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
  p.translation = {x, y, 0.0};
  p.frame_id = frame_id;
  return p;
}

/// Uniform point on the surface of a box, face picked by area. Faces are
/// pulled fractionally inward so containment tests survive the float error
/// of a world-to-sensor round trip.
inline std::array<double, 3> sample_box_surface(const Box3D& b,
                                                std::mt19937_64& rng) {
  constexpr double kInset = 0.999;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double axy = b.l * b.w, axz = b.l * b.h, ayz = b.w * b.h;
  const double total = 2.0 * (axy + axz + ayz);
  const double pick = u01(rng) * total;
  double lx = (u01(rng) - 0.5) * b.l * kInset;
  double ly = (u01(rng) - 0.5) * b.w * kInset;
  double lz = (u01(rng) - 0.5) * b.h * kInset;
  if (pick < 2.0 * axy) {
    lz = (pick < axy ? -0.5 : 0.5) * b.h * kInset;
  } else if (pick < 2.0 * axy + 2.0 * axz) {
    ly = (pick - 2.0 * axy < axz ? -0.5 : 0.5) * b.w * kInset;
  } else {
    lx = (pick - 2.0 * axy - 2.0 * axz < ayz ? -0.5 : 0.5) * b.l * kInset;
  }
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  return {b.cx + c * lx - s * ly, b.cy + s * lx + c * ly, b.cz + lz};
}

}  // namespace detail

/// Builds a deterministic synthetic scene: ego trajectory, object
/// trajectories, per-frame ground-truth boxes (sensor frame) and point
/// clouds. Cloud density falls off with squared range; every in-range object
/// keeps at least one current-frame point so the min-points label filter
/// never removes a true object. Clouds carry one historical sweep at
/// t = -frame_dt, which smears moving objects the way accumulation does.
inline SceneTruth generate_scene(const SceneSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("generate_scene: bad spec");
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> range_dist(spec.min_range,
                                                    spec.max_range);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SceneTruth truth;
  truth.spec = spec;
  for (int f = 0; f < spec.n_frames; ++f) {
    truth.poses.push_back(detail::ego_pose(spec, f));
  }

  auto place = [&](ObjectKind kind, int id) {
    TruthObject obj;
    obj.object_id = id;
    obj.kind = kind;
    const int anchor = static_cast<int>(u01(rng) * (spec.n_frames - 1));
    const auto& pose = truth.poses[static_cast<std::size_t>(anchor)];
    const double r = range_dist(rng);
    const double phi = angle(rng);
    obj.x0 = pose.translation[0] + r * std::cos(phi);
    obj.y0 = pose.translation[1] + r * std::sin(phi);
    obj.heading0 = angle(rng);
    switch (kind) {
      case ObjectKind::StaticVehicle:
      case ObjectKind::DynamicVehicle:
        obj.l = std::max(3.5, 4.6 + 0.25 * gauss(rng));
        obj.w = std::max(1.5, 1.9 + 0.08 * gauss(rng));
        obj.h = std::max(1.3, 1.7 + 0.08 * gauss(rng));
        if (kind == ObjectKind::DynamicVehicle) {
          obj.speed = 2.0 + 6.0 * u01(rng);
          obj.turn_rate = u01(rng) < 0.5 ? 0.0 : 0.3 * (u01(rng) - 0.5);
        }
        break;
      case ObjectKind::DynamicPedestrian:
      case ObjectKind::StaticPedestrian:
        obj.l = obj.w = std::max(0.5, 0.75 + 0.08 * gauss(rng));
        obj.h = std::max(1.4, 1.75 + 0.1 * gauss(rng));
        if (kind == ObjectKind::DynamicPedestrian) {
          obj.speed = 1.0 + 1.0 * u01(rng);
          obj.turn_rate = u01(rng) < 0.7 ? 0.0 : 0.2 * (u01(rng) - 0.5);
        }
        break;
      case ObjectKind::Pole:
        obj.l = obj.w = 0.3 + 0.2 * u01(rng);
        obj.h = 3.0 + 3.0 * u01(rng);
        break;
    }
    truth.objects.push_back(obj);
  };

  int next_id = 0;
  for (int i = 0; i < spec.static_vehicles; ++i) place(ObjectKind::StaticVehicle, next_id++);
  for (int i = 0; i < spec.dynamic_vehicles; ++i) place(ObjectKind::DynamicVehicle, next_id++);
  for (int i = 0; i < spec.dynamic_pedestrians; ++i) place(ObjectKind::DynamicPedestrian, next_id++);
  for (int i = 0; i < spec.static_pedestrians; ++i) place(ObjectKind::StaticPedestrian, next_id++);
  for (int i = 0; i < spec.pole_distractors; ++i) place(ObjectKind::Pole, next_id++);

  constexpr double kPointBudget = 20000.0;  // pts at 1 m, falls with range^2
  constexpr int kGroundPoints = 300;

  for (int f = 0; f < spec.n_frames; ++f) {
    const auto& pose = truth.poses[static_cast<std::size_t>(f)];
    const double t_now = truth.time_of_frame(f);
    PointCloud cloud;
    cloud.frame_id = f;

    std::vector<Box3D> frame_gt;
    for (const auto& obj : truth.objects) {
      const Box3D world = obj.box_at(t_now);
      const Box3D sensor = pose.box_to_sensor(world);
      const double r = sensor.bev_range();
      if (r > spec.max_range) continue;

      const int n_pts = std::clamp(
          static_cast<int>(std::lround(kPointBudget / std::max(1.0, r * r))), 1,
          400);
      for (int k = 0; k < n_pts; ++k) {
        const auto wp = detail::sample_box_surface(world, rng);
        const auto sp = pose.apply_inverse(wp);
        cloud.points.push_back({sp[0], sp[1], sp[2], 0.0});
      }
      // One trailing sweep: the object sampled where it was one frame ago,
      // projected into the current sensor frame.
      if (f > 0) {
        const Box3D prev = obj.box_at(t_now - spec.frame_dt);
        const int n_prev = std::max(1, n_pts / 2);
        for (int k = 0; k < n_prev; ++k) {
          const auto wp = detail::sample_box_surface(prev, rng);
          const auto sp = pose.apply_inverse(wp);
          cloud.points.push_back({sp[0], sp[1], sp[2], -spec.frame_dt});
        }
      }
      if (!is_pole(obj.kind)) frame_gt.push_back(sensor);
    }

    for (int k = 0; k < kGroundPoints; ++k) {
      const double r = spec.max_range * std::sqrt(u01(rng));
      const double phi = angle(rng);
      cloud.points.push_back({r * std::cos(phi), r * std::sin(phi), 0.0, 0.0});
    }

    truth.gt[f] = std::move(frame_gt);
    truth.clouds.push_back(std::move(cloud));
  }
  return truth;
}

/// Error and score model for one simulated pre-trained detector. Recall
/// degrades by range bin, mimicking the widening scan-pattern gap; TP and FP
/// score distributions overlap to model cross-domain miscalibration.
struct DetectorProfile {
  std::string set_id = "sim";
  std::string detector_id = "sim";
  std::string source_domain = "sim";
  double t_delta_max = 0.0;
  std::string tta_variant = "none";
  std::vector<std::pair<double, double>> range_bins = eval::default_range_bins();
  std::vector<double> recall_curve = {0.9, 0.7, 0.45};
  double center_noise_sigma = 0.2;   // meters
  double dims_noise_sigma = 0.08;    // meters
  double heading_noise_sigma = 0.05; // radians
  double heading_flip_prob = 0.1;
  struct ScoreModel {
    double mean = 0.7;
    double sigma = 0.1;
  };
  ScoreModel tp_score{0.7, 0.1};
  ScoreModel fp_score{0.45, 0.08};
  double fp_rate_per_frame = 1.0;
  double ped_from_pole_prob = 0.5;

  bool valid() const {
    if (recall_curve.size() != range_bins.size()) return false;
    for (double r : recall_curve) {
      if (r < 0.0 || r > 1.0) return false;
    }
    return center_noise_sigma >= 0.0 && dims_noise_sigma >= 0.0 &&
           heading_noise_sigma >= 0.0 && heading_flip_prob >= 0.0 &&
           heading_flip_prob <= 1.0 && fp_rate_per_frame >= 0.0 &&
           ped_from_pole_prob >= 0.0 && ped_from_pole_prob <= 1.0;
  }

  double recall_at(double range) const {
    for (std::size_t i = 0; i < range_bins.size(); ++i) {
      if (range >= range_bins[i].first && range < range_bins[i].second) {
        return recall_curve[i];
      }
    }
    return 0.0;
  }
};

/// Runs the detector model over the scene: per frame, each in-range truth
/// object is detected with its range-bin recall, perturbed, and scored; pole
/// distractors leak in as pedestrian boxes; clutter arrives as Poisson false
/// positives. Deterministic for a fixed seed.
inline ensemble::DetectionSet simulate_detector(const SceneTruth& truth,
                                                const DetectorProfile& profile,
                                                std::uint64_t seed) {
  if (!profile.valid()) {
    throw std::invalid_argument("simulate_detector: bad profile");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<int> clutter(profile.fp_rate_per_frame);

  auto clamp_score = [](double s) { return std::clamp(s, 0.01, 0.999); };

  ensemble::DetectionSet set;
  set.set_id = profile.set_id;
  set.detector_id = profile.detector_id;
  set.source_domain = profile.source_domain;
  set.t_delta_max = profile.t_delta_max;
  set.tta_variant = profile.tta_variant;

  for (int f = 0; f < truth.spec.n_frames; ++f) {
    const auto& pose = truth.pose(f);
    const double t_now = truth.time_of_frame(f);
    std::vector<Box3D> boxes;

    for (const auto& obj : truth.objects) {
      const Box3D sensor = pose.box_to_sensor(obj.box_at(t_now));
      const double r = sensor.bev_range();
      if (r > truth.spec.max_range) continue;

      Box3D det = sensor;
      bool emit = false;
      if (is_pole(obj.kind)) {
        if (u01(rng) < profile.ped_from_pole_prob) {
          emit = true;
          det.l = det.w = 0.7;  // the detector hallucinates a pedestrian
          det.h = 1.8;
          det.cz = 0.9;
          det.class_label = ClassLabel::Pedestrian;
          det.score = clamp_score(profile.fp_score.mean +
                                  profile.fp_score.sigma * gauss(rng));
        }
      } else if (u01(rng) < profile.recall_at(r)) {
        emit = true;
        det.score = clamp_score(profile.tp_score.mean +
                                profile.tp_score.sigma * gauss(rng));
      }
      if (!emit) continue;

      det.cx += profile.center_noise_sigma * gauss(rng);
      det.cy += profile.center_noise_sigma * gauss(rng);
      det.cz += 0.5 * profile.center_noise_sigma * gauss(rng);
      det.l = std::max(0.2, det.l + profile.dims_noise_sigma * gauss(rng));
      det.w = std::max(0.2, det.w + profile.dims_noise_sigma * gauss(rng));
      det.h = std::max(0.2, det.h + profile.dims_noise_sigma * gauss(rng));
      double heading = det.heading + profile.heading_noise_sigma * gauss(rng);
      if (u01(rng) < profile.heading_flip_prob) heading += kPi;
      det.heading = normalize_heading(heading);
      det.provenance = {{profile.set_id}, profile.detector_id};
      boxes.push_back(det);
    }

    const int n_fp = profile.fp_rate_per_frame > 0.0 ? clutter(rng) : 0;
    for (int k = 0; k < n_fp; ++k) {
      Box3D fp;
      const double r = truth.spec.max_range * std::sqrt(u01(rng));
      const double phi = angle(rng);
      fp.cx = r * std::cos(phi);
      fp.cy = r * std::sin(phi);
      fp.class_label =
          u01(rng) < 0.5 ? ClassLabel::Vehicle : ClassLabel::Pedestrian;
      if (fp.class_label == ClassLabel::Vehicle) {
        fp.l = 4.0 + 1.5 * u01(rng);
        fp.w = 1.7 + 0.4 * u01(rng);
        fp.h = 1.5 + 0.5 * u01(rng);
      } else {
        fp.l = fp.w = 0.6 + 0.3 * u01(rng);
        fp.h = 1.6 + 0.4 * u01(rng);
      }
      fp.cz = 0.5 * fp.h;
      fp.heading = angle(rng);
      fp.score = clamp_score(profile.fp_score.mean +
                             profile.fp_score.sigma * gauss(rng));
      fp.provenance = {{profile.set_id}, profile.detector_id};
      boxes.push_back(fp);
    }
    set.frames[f] = std::move(boxes);
  }
  return set;
}

/// The stock round-1 ensemble: two detectors whose source lidar resembles
/// the target (stronger, cleaner) and two from a sparser source domain
/// (weaker at range, noisier, more clutter).
inline std::vector<DetectorProfile> round1_profiles() {
  std::vector<DetectorProfile> out(4);
  out[0].set_id = "near_a";
  out[0].detector_id = "det_a";
  out[0].source_domain = "dense64";
  out[0].t_delta_max = 0.2;
  out[0].recall_curve = {0.92, 0.72, 0.45};
  out[0].center_noise_sigma = 0.15;
  out[0].dims_noise_sigma = 0.06;
  out[0].heading_noise_sigma = 0.04;
  out[0].heading_flip_prob = 0.05;
  out[0].tp_score = {0.72, 0.09};
  out[0].fp_score = {0.45, 0.08};
  out[0].fp_rate_per_frame = 1.0;
  out[0].ped_from_pole_prob = 0.45;

  out[1] = out[0];
  out[1].set_id = "near_b";
  out[1].detector_id = "det_b";
  out[1].t_delta_max = 0.4;
  out[1].recall_curve = {0.9, 0.68, 0.42};
  out[1].center_noise_sigma = 0.18;
  out[1].heading_flip_prob = 0.06;
  out[1].tp_score = {0.7, 0.1};
  out[1].fp_rate_per_frame = 1.2;
  out[1].ped_from_pole_prob = 0.5;

  out[2].set_id = "far_a";
  out[2].detector_id = "det_c";
  out[2].source_domain = "sparse32";
  out[2].t_delta_max = 0.2;
  out[2].recall_curve = {0.82, 0.5, 0.22};
  out[2].center_noise_sigma = 0.25;
  out[2].dims_noise_sigma = 0.1;
  out[2].heading_noise_sigma = 0.08;
  out[2].heading_flip_prob = 0.12;
  out[2].tp_score = {0.64, 0.11};
  out[2].fp_score = {0.42, 0.09};
  out[2].fp_rate_per_frame = 1.8;
  out[2].ped_from_pole_prob = 0.65;

  out[3] = out[2];
  out[3].set_id = "far_b";
  out[3].detector_id = "det_d";
  out[3].t_delta_max = 0.45;
  out[3].recall_curve = {0.8, 0.46, 0.2};
  out[3].center_noise_sigma = 0.28;
  out[3].heading_flip_prob = 0.15;
  out[3].tp_score = {0.62, 0.12};
  out[3].fp_rate_per_frame = 2.0;
  out[3].ped_from_pole_prob = 0.7;
  return out;
}

/// Round-2 stand-ins for detectors re-trained on round-1 pseudo-labels:
/// wider recall, tighter localization and well-separated score
/// distributions.
inline std::vector<DetectorProfile> round2_profiles() {
  std::vector<DetectorProfile> out(2);
  out[0].set_id = "retrained_a";
  out[0].detector_id = "det_ra";
  out[0].source_domain = "target";
  out[0].t_delta_max = 0.3;
  out[0].recall_curve = {0.97, 0.85, 0.62};
  out[0].center_noise_sigma = 0.12;
  out[0].dims_noise_sigma = 0.05;
  out[0].heading_noise_sigma = 0.03;
  out[0].heading_flip_prob = 0.03;
  out[0].tp_score = {0.85, 0.05};
  out[0].fp_score = {0.3, 0.06};
  out[0].fp_rate_per_frame = 0.8;
  out[0].ped_from_pole_prob = 0.25;

  out[1] = out[0];
  out[1].set_id = "retrained_b";
  out[1].detector_id = "det_rb";
  out[1].tta_variant = "flip_x";
  out[1].recall_curve = {0.96, 0.83, 0.6};
  out[1].center_noise_sigma = 0.13;
  return out;
}

}  // namespace autolabel::synth

#endif  // AUTOLABEL_SYNTH_HPP_
