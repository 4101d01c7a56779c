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

#ifndef AUTOLABEL_TRACKING_HPP_
#define AUTOLABEL_TRACKING_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autolabel/errors.hpp"
#include "autolabel/geometry.hpp"

namespace autolabel::tracking {

enum class StreamName : std::uint8_t { PedAll, VehAll, VehStatic };

inline const char* to_string(StreamName s) {
  switch (s) {
    case StreamName::PedAll: return "ped_all";
    case StreamName::VehAll: return "veh_all";
    case StreamName::VehStatic: return "veh_static";
  }
  return "?";
}

inline ClassLabel stream_class(StreamName s) {
  return s == StreamName::PedAll ? ClassLabel::Pedestrian : ClassLabel::Vehicle;
}

struct TrackerStreamConfig {
  StreamName stream_name = StreamName::VehAll;
  double input_score_thresh = 0.4;
  double assoc_iou_thresh = 0.2;
  int max_coast_frames = 3;
  int min_hits = 3;
  double process_noise = 1.0;
  double measurement_noise = 0.25;
  bool use_hungarian = false;  // default: greedy descending-score association
};

enum class ObservationKind : std::uint8_t { Observed, Interpolated, Extrapolated };

inline const char* to_string(ObservationKind k) {
  switch (k) {
    case ObservationKind::Observed: return "observed";
    case ObservationKind::Interpolated: return "interpolated";
    case ObservationKind::Extrapolated: return "extrapolated";
  }
  return "?";
}

enum class MotionClass : std::uint8_t { Unclassified, Static, Dynamic };

inline const char* to_string(MotionClass m) {
  switch (m) {
    case MotionClass::Unclassified: return "unclassified";
    case MotionClass::Static: return "static";
    case MotionClass::Dynamic: return "dynamic";
  }
  return "?";
}

/// One per-frame entry of a track. The box is stored in world coordinates
/// exactly as matched (Observed) or synthesized (Interpolated/Extrapolated).
struct TrackObservation {
  Box3D box;
  ObservationKind kind = ObservationKind::Observed;
};

struct Track {
  int track_id = 0;
  ClassLabel class_label = ClassLabel::Vehicle;
  std::map<int, TrackObservation> observations;
  MotionClass motion = MotionClass::Unclassified;

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (const auto& [f, obs] : observations) {
      if (obs.kind == ObservationKind::Observed) ++n;
    }
    return n;
  }

  int first_frame() const { return observations.begin()->first; }
  int last_frame() const { return observations.rbegin()->first; }

  double max_observed_score() const {
    double best = 0.0;
    for (const auto& [f, obs] : observations) {
      if (obs.kind == ObservationKind::Observed) {
        best = std::max(best, obs.box.score);
      }
    }
    return best;
  }
};

namespace detail {

/// Constant-velocity BEV Kalman filter. State: [x, y, yaw, vx, vy, vyaw];
/// measurements are [x, y, yaw]. z and dims are smoothed outside the filter.
class BevKalman {
 public:
  BevKalman(double x, double y, double yaw, double r) {
    state_ = {x, y, yaw, 0.0, 0.0, 0.0};
    for (auto& row : p_) row.fill(0.0);
    p_[0][0] = p_[1][1] = r;
    p_[2][2] = r;
    p_[3][3] = p_[4][4] = 100.0;  // wide prior: velocity unknown at spawn
    p_[5][5] = 10.0;
  }

  void predict(double dt, double q) {
    state_[0] += state_[3] * dt;
    state_[1] += state_[4] * dt;
    state_[2] = normalize_heading(state_[2] + state_[5] * dt);
    // P = F P F^T + Q with F the constant-velocity transition.
    std::array<std::array<double, 6>, 6> fp{};
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        fp[i][j] = p_[i][j] + (i < 3 ? dt * p_[i + 3][j] : 0.0);
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        p_[i][j] = fp[i][j] + (j < 3 ? dt * fp[i][j + 3] : 0.0);
      }
    }
    const double dt2 = dt * dt;
    p_[0][0] += q * 0.25 * dt2;
    p_[1][1] += q * 0.25 * dt2;
    p_[2][2] += q * 0.1 * dt2;
    p_[3][3] += q * dt2;
    p_[4][4] += q * dt2;
    p_[5][5] += q * 0.4 * dt2;
  }

  /// Update with measurement (x, y, yaw). The yaw innovation is wrapped into
  /// [-pi/2, pi/2) so pi-flipped detections do not spin the track.
  void update(double mx, double my, double myaw, double r) {
    std::array<double, 3> innov{mx - state_[0], my - state_[1],
                                yaw_innovation(myaw)};
    // S = H P H^T + R (H selects the first three states).
    std::array<std::array<double, 3>, 3> s{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) s[i][j] = p_[i][j];
      s[i][i] += r;
    }
    const auto sinv = invert3(s);
    // K = P H^T S^-1 (6x3).
    std::array<std::array<double, 3>, 6> k{};
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int m = 0; m < 3; ++m) k[i][j] += p_[i][m] * sinv[m][j];
      }
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 3; ++j) state_[i] += k[i][j] * innov[j];
    }
    state_[2] = normalize_heading(state_[2]);
    // P = (I - K H) P.
    std::array<std::array<double, 6>, 6> np{};
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        np[i][j] = p_[i][j];
        for (int m = 0; m < 3; ++m) np[i][j] -= k[i][m] * p_[m][j];
      }
    }
    p_ = np;
  }

  double x() const { return state_[0]; }
  double y() const { return state_[1]; }
  double yaw() const { return state_[2]; }
  double vx() const { return state_[3]; }
  double vy() const { return state_[4]; }
  double vyaw() const { return state_[5]; }

 private:
  double yaw_innovation(double measured) const {
    double d = normalize_heading(measured - state_[2]);
    if (d >= 0.5 * kPi) d -= kPi;
    if (d < -0.5 * kPi) d += kPi;
    return d;
  }

  static std::array<std::array<double, 3>, 3> invert3(
      const std::array<std::array<double, 3>, 3>& m) {
    const double det =
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
        m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
        m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    const double inv = 1.0 / det;
    std::array<std::array<double, 3>, 3> r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
    return r;
  }

  std::array<double, 6> state_;
  std::array<std::array<double, 6>, 6> p_;
};

/// Max-weight bipartite matching (Hungarian algorithm on -weight). Entries
/// below `min_weight` are infeasible. Returns per-row column or -1.
inline std::vector<int> max_weight_assignment(
    const std::vector<std::vector<double>>& weight, double min_weight) {
  const int n = static_cast<int>(weight.size());
  const int m = n == 0 ? 0 : static_cast<int>(weight[0].size());
  if (n == 0 || m == 0) return std::vector<int>(n, -1);
  const int dim = std::max(n, m);
  const double kInf = std::numeric_limits<double>::infinity();
  const double kBig = 1e9;  // cost of an infeasible or padded pairing
  auto cost = [&](int i, int j) {
    if (i >= n || j >= m) return kBig;
    return weight[i][j] >= min_weight ? 1.0 - weight[i][j] : kBig;
  };
  std::vector<double> u(dim + 1), v(dim + 1);
  std::vector<int> p(dim + 1), way(dim + 1);
  for (int i = 1; i <= dim; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(dim + 1, kInf);
    std::vector<char> used(dim + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= dim; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= dim; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(n, -1);
  for (int j = 1; j <= dim; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= n && j <= m && weight[i - 1][j - 1] >= min_weight) {
      match[i - 1] = j - 1;
    }
  }
  return match;
}

struct ActiveTrack {
  BevKalman kf;
  Track track;
  double ema_z, ema_l, ema_w, ema_h;
  int last_observed = 0;
  int coast = 0;

  ActiveTrack(int id, const Box3D& world_box, int frame_id, double r)
      : kf(world_box.cx, world_box.cy, world_box.heading, r),
        ema_z(world_box.cz),
        ema_l(world_box.l),
        ema_w(world_box.w),
        ema_h(world_box.h),
        last_observed(frame_id) {
    track.track_id = id;
    track.class_label = world_box.class_label;
    track.observations[frame_id] = {world_box, ObservationKind::Observed};
  }

  Box3D predicted_box() const {
    Box3D b;
    b.cx = kf.x();
    b.cy = kf.y();
    b.cz = ema_z;
    b.l = ema_l;
    b.w = ema_w;
    b.h = ema_h;
    b.heading = kf.yaw();
    b.score = 1.0;
    b.class_label = track.class_label;
    return b;
  }

  void absorb(const Box3D& world_box, int frame_id, double r) {
    constexpr double kEma = 0.3;
    kf.update(world_box.cx, world_box.cy, world_box.heading, r);
    ema_z = (1.0 - kEma) * ema_z + kEma * world_box.cz;
    ema_l = (1.0 - kEma) * ema_l + kEma * world_box.l;
    ema_w = (1.0 - kEma) * ema_w + kEma * world_box.w;
    ema_h = (1.0 - kEma) * ema_h + kEma * world_box.h;
    track.observations[frame_id] = {world_box, ObservationKind::Observed};
    last_observed = frame_id;
    coast = 0;
  }
};

}  // namespace detail

/// Runs one tracker stream over per-frame proposals given in sensor
/// coordinates. Boxes are moved to world coordinates through the frame pose
/// before association, so ego motion does not read as object motion. Only
/// boxes of the stream's class at or above input_score_thresh participate.
/// Returns tracks with at least min_hits observed entries; observation boxes
/// are the matched world-frame detections, unmodified.
inline std::vector<Track> run_tracker(
    std::span<const std::pair<int, std::vector<Box3D>>> frames,
    std::span<const FramePose> poses, const TrackerStreamConfig& cfg) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].first <= frames[i - 1].first) {
      throw std::invalid_argument("run_tracker: frames must be ascending");
    }
  }
  std::map<int, const FramePose*> pose_by_frame;
  for (const auto& p : poses) pose_by_frame[p.frame_id] = &p;

  const ClassLabel cls = stream_class(cfg.stream_name);
  std::vector<detail::ActiveTrack> active;
  std::vector<Track> finished;
  int next_id = 0;
  int prev_frame = 0;
  bool first = true;

  auto retire = [&](detail::ActiveTrack& t) {
    if (static_cast<int>(t.track.observed_count()) >= cfg.min_hits) {
      finished.push_back(std::move(t.track));
    }
  };

  for (const auto& [frame_id, raw_boxes] : frames) {
    const int dt = first ? 0 : frame_id - prev_frame;
    first = false;
    prev_frame = frame_id;

    std::vector<Box3D> dets;
    if (!raw_boxes.empty()) {
      auto it = pose_by_frame.find(frame_id);
      if (it == pose_by_frame.end()) {
        throw InputError("run_tracker: no pose for frame " +
                         std::to_string(frame_id));
      }
      for (const auto& b : raw_boxes) {
        if (b.class_label != cls || b.score < cfg.input_score_thresh) continue;
        dets.push_back(it->second->box_to_world(b));
      }
    }

    if (dt > 0) {
      for (auto& t : active) t.kf.predict(dt, cfg.process_noise);
    }

    std::vector<Box3D> predictions;
    predictions.reserve(active.size());
    for (const auto& t : active) predictions.push_back(t.predicted_box());

    std::vector<int> det_to_track(dets.size(), -1);
    std::vector<bool> track_matched(active.size(), false);
    if (!dets.empty() && !active.empty()) {
      if (cfg.use_hungarian) {
        std::vector<std::vector<double>> iou(dets.size(),
                                             std::vector<double>(active.size()));
        for (std::size_t d = 0; d < dets.size(); ++d) {
          for (std::size_t t = 0; t < active.size(); ++t) {
            iou[d][t] = bev_iou(dets[d], predictions[t]);
          }
        }
        det_to_track =
            detail::max_weight_assignment(iou, cfg.assoc_iou_thresh);
        for (int t : det_to_track) {
          if (t >= 0) track_matched[static_cast<std::size_t>(t)] = true;
        }
      } else {
        std::vector<std::size_t> order(dets.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
          return a < b;
        });
        for (std::size_t d : order) {
          double best_iou = -1.0;
          int best_track = -1;
          for (std::size_t t = 0; t < active.size(); ++t) {
            if (track_matched[t]) continue;
            const double v = bev_iou(dets[d], predictions[t]);
            if (v >= cfg.assoc_iou_thresh && v > best_iou) {
              best_iou = v;
              best_track = static_cast<int>(t);
            }
          }
          if (best_track >= 0) {
            det_to_track[d] = best_track;
            track_matched[static_cast<std::size_t>(best_track)] = true;
          }
        }
      }
    }

    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (det_to_track[d] >= 0) {
        active[static_cast<std::size_t>(det_to_track[d])].absorb(
            dets[d], frame_id, cfg.measurement_noise);
      }
    }

    std::vector<detail::ActiveTrack> still_active;
    still_active.reserve(active.size() + dets.size());
    for (std::size_t t = 0; t < active.size(); ++t) {
      if (!track_matched[t]) {
        active[t].coast += dt > 0 ? dt : 1;
        if (active[t].coast > cfg.max_coast_frames) {
          retire(active[t]);
          continue;
        }
      }
      still_active.push_back(std::move(active[t]));
    }
    active = std::move(still_active);

    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (det_to_track[d] < 0) {
        active.emplace_back(next_id++, dets[d], frame_id,
                            cfg.measurement_noise);
      }
    }
  }

  for (auto& t : active) retire(t);
  std::sort(finished.begin(), finished.end(),
            [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
  return finished;
}

/// Static iff the begin-to-end BEV displacement of observed centers stays
/// under dist_thresh AND the per-axis center variance stays under var_thresh.
/// Needs at least two observed entries to decide.
inline MotionClass classify_motion(const Track& track, double dist_thresh,
                                   double var_thresh) {
  std::vector<const Box3D*> obs;
  for (const auto& [f, o] : track.observations) {
    if (o.kind == ObservationKind::Observed) obs.push_back(&o.box);
  }
  if (obs.size() < 2) return MotionClass::Unclassified;
  const double dist = std::hypot(obs.back()->cx - obs.front()->cx,
                                 obs.back()->cy - obs.front()->cy);
  double mx = 0.0, my = 0.0;
  for (const auto* b : obs) {
    mx += b->cx;
    my += b->cy;
  }
  mx /= static_cast<double>(obs.size());
  my /= static_cast<double>(obs.size());
  double vx = 0.0, vy = 0.0;
  for (const auto* b : obs) {
    vx += (b->cx - mx) * (b->cx - mx);
    vy += (b->cy - my) * (b->cy - my);
  }
  vx /= static_cast<double>(obs.size());
  vy /= static_cast<double>(obs.size());
  const bool is_static =
      dist < dist_thresh && vx < var_thresh && vy < var_thresh;
  return is_static ? MotionClass::Static : MotionClass::Dynamic;
}

}  // namespace autolabel::tracking

#endif  // AUTOLABEL_TRACKING_HPP_
