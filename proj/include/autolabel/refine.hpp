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

#ifndef AUTOLABEL_REFINE_HPP_
#define AUTOLABEL_REFINE_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "autolabel/geometry.hpp"
#include "autolabel/kbf.hpp"
#include "autolabel/tracking.hpp"

namespace autolabel::refine {

using tracking::MotionClass;
using tracking::ObservationKind;
using tracking::Track;
using tracking::TrackObservation;

struct RefineConfig {
  PerClass<double> s_pos{0.6, 0.5};
  PerClass<int> n_pos{3, 3};
  int history_window = 8;  // frames fused per static-vehicle box
  bool use_static_pedestrians = false;
  int extrapolation_limit = 3;

  bool valid() const {
    return s_pos.vehicle >= 0.0 && s_pos.vehicle <= 1.0 &&
           s_pos.pedestrian >= 0.0 && s_pos.pedestrian <= 1.0 &&
           n_pos.vehicle >= 1 && n_pos.pedestrian >= 1 &&
           history_window >= 1 && extrapolation_limit >= 0;
  }
};

/// Keeps exactly the tracks holding at least n_pos observed detections with
/// score strictly above s_pos for their class. Kept tracks are returned
/// whole, low-score observations included: confirmation is retroactive.
inline std::vector<Track> retroactive_filter(std::span<const Track> tracks,
                                             const RefineConfig& cfg) {
  std::vector<Track> kept;
  for (const auto& t : tracks) {
    const double s_pos = cfg.s_pos[t.class_label];
    const int n_pos = cfg.n_pos[t.class_label];
    int confident = 0;
    for (const auto& [f, obs] : t.observations) {
      if (obs.kind == ObservationKind::Observed && obs.box.score > s_pos) {
        ++confident;
      }
    }
    if (confident >= n_pos) kept.push_back(t);
  }
  return kept;
}

namespace detail {

inline Box3D lerp_box(const Box3D& a, const Box3D& b, double alpha,
                      double score) {
  Box3D out = a;
  out.cx = a.cx + alpha * (b.cx - a.cx);
  out.cy = a.cy + alpha * (b.cy - a.cy);
  out.cz = a.cz + alpha * (b.cz - a.cz);
  out.l = 0.5 * (a.l + b.l);
  out.w = 0.5 * (a.w + b.w);
  out.h = 0.5 * (a.h + b.h);
  const double dyaw = normalize_heading(b.heading - a.heading);
  out.heading = normalize_heading(a.heading + alpha * dyaw);
  out.score = score;
  return out;
}

/// Interpolates gaps between observed entries and extends both ends by
/// constant-velocity prediction, up to `limit` frames. Velocities come from
/// the two observed entries nearest each end, matching the tracker's
/// constant-velocity model. Observed entries are left untouched.
inline Track fill_track_gaps(const Track& track, int limit) {
  std::vector<std::pair<int, const TrackObservation*>> observed;
  for (const auto& [f, obs] : track.observations) {
    if (obs.kind == ObservationKind::Observed) observed.emplace_back(f, &obs);
  }
  if (observed.empty()) return track;

  Track out;
  out.track_id = track.track_id;
  out.class_label = track.class_label;
  out.motion = track.motion;
  const double fill_score = track.max_observed_score();

  for (const auto& [f, obs] : observed) out.observations[f] = *obs;

  for (std::size_t i = 0; i + 1 < observed.size(); ++i) {
    const auto [f0, o0] = observed[i];
    const auto [f1, o1] = observed[i + 1];
    for (int f = f0 + 1; f < f1; ++f) {
      const double alpha = static_cast<double>(f - f0) / (f1 - f0);
      out.observations[f] = {lerp_box(o0->box, o1->box, alpha, fill_score),
                             ObservationKind::Interpolated};
    }
  }

  if (limit > 0 && observed.size() >= 2) {
    // Constant-velocity estimate from the trailing observations of each end
    // (least-squares over up to five points, the batch form of the tracker's
    // CV filter). A plain two-point difference amplifies observation noise
    // enough for extrapolated boxes to suppress better-localized proposals
    // downstream.
    auto extend = [&](bool tail) {
      const int n_fit =
          static_cast<int>(std::min<std::size_t>(5, observed.size()));
      std::vector<std::pair<int, const Box3D*>> pts;
      for (int i = 0; i < n_fit; ++i) {
        const auto& [f, obs] =
            observed[tail ? observed.size() - n_fit + i : i];
        pts.emplace_back(f, &obs->box);
      }
      const auto& [end_frame, end_obs] =
          tail ? observed.back() : observed.front();
      const Box3D& end_box = end_obs->box;

      double mean_t = 0.0;
      for (const auto& [f, b] : pts) mean_t += f;
      mean_t /= pts.size();
      double sxx = 0.0, sxy_x = 0.0, sxy_y = 0.0, sxy_yaw = 0.0;
      for (const auto& [f, b] : pts) {
        const double dt = f - mean_t;
        sxx += dt * dt;
        sxy_x += dt * b->cx;
        sxy_y += dt * b->cy;
        sxy_yaw += dt * normalize_heading(b->heading - end_box.heading);
      }
      const double vx = sxx > 0.0 ? sxy_x / sxx : 0.0;
      const double vy = sxx > 0.0 ? sxy_y / sxx : 0.0;
      const double vyaw = sxx > 0.0 ? sxy_yaw / sxx : 0.0;
      const int direction = tail ? 1 : -1;
      for (int k = 1; k <= limit; ++k) {
        Box3D b = end_box;
        b.cx += vx * direction * k;
        b.cy += vy * direction * k;
        b.heading = normalize_heading(end_box.heading + vyaw * direction * k);
        b.score = fill_score;
        out.observations[end_frame + direction * k] = {
            b, ObservationKind::Extrapolated};
      }
    };
    extend(false);
    extend(true);
  }
  return out;
}

}  // namespace detail

/// Fuses, for every frame in the track's span, the observed world-frame
/// boxes of the trailing history window [i - H, i]. Frames whose window is
/// empty inherit the nearest fused box, so the whole span is labeled.
inline std::map<int, Box3D> refine_static_vehicle(const Track& track,
                                                  const RefineConfig& cfg,
                                                  const kbf::KbfConfig& kbf_cfg) {
  if (track.motion != MotionClass::Static) {
    throw std::invalid_argument("refine_static_vehicle: track is not static");
  }
  std::vector<std::pair<int, const Box3D*>> observed;
  for (const auto& [f, obs] : track.observations) {
    if (obs.kind == ObservationKind::Observed) {
      observed.emplace_back(f, &obs.box);
    }
  }
  std::map<int, Box3D> out;
  if (observed.empty()) return out;

  kbf::KbfConfig window_cfg = kbf_cfg;
  window_cfg.min_cluster_size = 1;  // any non-empty window fuses

  const int first = observed.front().first;
  const int last = observed.back().first;
  std::vector<int> fused_frames;
  for (int i = first; i <= last; ++i) {
    std::vector<Box3D> window;
    for (const auto& [f, box] : observed) {
      if (f >= i - cfg.history_window && f <= i) window.push_back(*box);
    }
    if (window.empty()) continue;
    std::vector<double> weights(window.size(), window_cfg.default_weight);
    out[i] = *kbf::fuse_cluster(window, weights, window_cfg);
    fused_frames.push_back(i);
  }
  // Retroactive propagation into frames with an empty window.
  for (int i = first; i <= last; ++i) {
    if (out.count(i) > 0) continue;
    int nearest = fused_frames.front();
    for (int f : fused_frames) {
      if (std::abs(f - i) < std::abs(nearest - i)) nearest = f;
    }
    out[i] = out.at(nearest);
  }
  return out;
}

/// Gap-fills a confident dynamic track: linear interpolation inside the
/// span, capped constant-velocity extrapolation at the ends. Interpolated
/// and extrapolated entries inherit the track's maximum observed score.
inline Track fill_dynamic_track(const Track& track, const RefineConfig& cfg) {
  if (track.motion != MotionClass::Dynamic) {
    throw std::invalid_argument("fill_dynamic_track: track is not dynamic");
  }
  return detail::fill_track_gaps(track, cfg.extrapolation_limit);
}

/// Pedestrian refinement: retroactively confirmed tracks are kept when
/// dynamic; static pedestrian tracks only join once use_static_pedestrians
/// is enabled (later self-training rounds). Kept tracks come back gap-filled.
inline std::vector<Track> refine_pedestrians(std::span<const Track> tracks,
                                             const RefineConfig& cfg) {
  std::vector<Track> kept;
  for (const auto& t : retroactive_filter(tracks, cfg)) {
    if (t.class_label != ClassLabel::Pedestrian) continue;
    const bool dynamic = t.motion == MotionClass::Dynamic;
    if (!dynamic && !cfg.use_static_pedestrians) continue;
    kept.push_back(detail::fill_track_gaps(t, cfg.extrapolation_limit));
  }
  return kept;
}

}  // namespace autolabel::refine

#endif  // AUTOLABEL_REFINE_HPP_
