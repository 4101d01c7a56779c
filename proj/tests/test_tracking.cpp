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

#include "autolabel/tracking.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace autolabel;
using namespace autolabel::tracking;

namespace {

std::vector<FramePose> identity_poses(int n) {
  std::vector<FramePose> poses(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) poses[static_cast<std::size_t>(i)].frame_id = i;
  return poses;
}

Box3D vehicle_at(double x, double y, double heading = 0.0, double score = 0.9) {
  Box3D b;
  b.cx = x;
  b.cy = y;
  b.cz = 0.85;
  b.l = 4.6;
  b.w = 1.9;
  b.h = 1.7;
  b.heading = normalize_heading(heading);
  b.score = score;
  b.class_label = ClassLabel::Vehicle;
  return b;
}

TrackerStreamConfig veh_all_config() {
  return {StreamName::VehAll, 0.4, 0.2, 3, 3, 1.0, 0.25, false};
}

struct SimObject {
  double x0, y0, vx, vy;
  double score = 0.9;
  double pos_x(int f) const { return x0 + vx * f; }
  double pos_y(int f) const { return y0 + vy * f; }
};

std::vector<std::pair<int, std::vector<Box3D>>> simulate(
    const std::vector<SimObject>& objects, int n_frames, double noise_sigma,
    std::mt19937& rng, double drop_prob = 0.0) {
  std::normal_distribution<double> noise(0.0, noise_sigma);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int, std::vector<Box3D>>> frames;
  for (int f = 0; f < n_frames; ++f) {
    std::vector<Box3D> boxes;
    for (const auto& obj : objects) {
      if (drop_prob > 0.0 && u(rng) < drop_prob) continue;
      const double nx = noise_sigma > 0.0 ? noise(rng) : 0.0;
      const double ny = noise_sigma > 0.0 ? noise(rng) : 0.0;
      boxes.push_back(vehicle_at(obj.pos_x(f) + nx, obj.pos_y(f) + ny,
                                 std::atan2(obj.vy, obj.vx + 1e-12), obj.score));
    }
    frames.emplace_back(f, std::move(boxes));
  }
  return frames;
}

}  // namespace

TEST(RunTracker, SingleObjectEveryFrameGivesOneFullyObservedTrack) {
  const int n = 20;
  SimObject obj{0.0, 0.0, 1.0, 0.0};
  std::mt19937 rng(51);
  const auto frames = simulate({obj}, n, 0.0, rng);
  const auto poses = identity_poses(n);
  const auto tracks = run_tracker(frames, poses, veh_all_config());
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].observations.size(), static_cast<std::size_t>(n));
  for (const auto& [f, obs] : tracks[0].observations) {
    EXPECT_EQ(obs.kind, ObservationKind::Observed);
  }
}

TEST(RunTracker, NoiselessRecoveryIsExactAtObservedFrames) {
  // Observations store the matched detection box unchanged, so a noiseless
  // constant-velocity object is recovered with zero position error.
  const int n = 30;
  SimObject obj{5.0, -3.0, 0.8, 0.4};
  std::mt19937 rng(52);
  const auto frames = simulate({obj}, n, 0.0, rng);
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  ASSERT_EQ(tracks.size(), 1u);
  for (const auto& [f, obs] : tracks[0].observations) {
    if (f < 3) continue;  // convergence window
    EXPECT_NEAR(obs.box.cx, obj.pos_x(f), 1e-6);
    EXPECT_NEAR(obs.box.cy, obj.pos_y(f), 1e-6);
  }
}

TEST(RunTracker, CoastBridgesSingleFrameGap) {
  const int n = 12;
  SimObject obj{0.0, 0.0, 0.5, 0.0};
  std::mt19937 rng(53);
  auto frames = simulate({obj}, n, 0.0, rng);
  frames[5].second.clear();  // one missed frame
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(tracks[0].first_frame(), 0);
  EXPECT_EQ(tracks[0].last_frame(), n - 1);
  EXPECT_EQ(tracks[0].observations.count(5), 0u);
}

TEST(RunTracker, GapBeyondCoastSplitsTrack) {
  const int n = 20;
  SimObject obj{0.0, 0.0, 0.5, 0.0};
  std::mt19937 rng(54);
  auto frames = simulate({obj}, n, 0.0, rng);
  for (int f = 8; f < 14; ++f) frames[f].second.clear();  // 6-frame outage
  const auto cfg = veh_all_config();
  ASSERT_LT(cfg.max_coast_frames, 6);
  const auto tracks = run_tracker(frames, identity_poses(n), cfg);
  EXPECT_EQ(tracks.size(), 2u);
}

TEST(RunTracker, TenWellSeparatedObjectsTrackCleanly) {
  std::mt19937 rng(55);
  std::vector<SimObject> objects;
  for (int i = 0; i < 10; ++i) {
    objects.push_back({0.0, i * 20.0, 0.5 + 0.05 * i, 0.0});
  }
  const int n = 100;
  const auto frames = simulate(objects, n, 0.1, rng);
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  ASSERT_EQ(tracks.size(), 10u);

  // Identity check: every observation of a track belongs to one object.
  for (const auto& t : tracks) {
    int owner = -1;
    for (const auto& [f, obs] : t.observations) {
      int nearest = 0;
      double best = 1e30;
      for (std::size_t o = 0; o < objects.size(); ++o) {
        const double d = std::hypot(obs.box.cx - objects[o].pos_x(f),
                                    obs.box.cy - objects[o].pos_y(f));
        if (d < best) {
          best = d;
          nearest = static_cast<int>(o);
        }
      }
      if (owner < 0) owner = nearest;
      EXPECT_EQ(owner, nearest) << "identity switch in track " << t.track_id;
    }
  }
}

TEST(RunTracker, LowScoreDetectionsAreIgnored) {
  const int n = 10;
  std::mt19937 rng(56);
  SimObject weak{0.0, 0.0, 0.5, 0.0};
  weak.score = 0.2;  // below the 0.4 stream threshold
  const auto frames = simulate({weak}, n, 0.0, rng);
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  EXPECT_TRUE(tracks.empty());
}

TEST(RunTracker, WrongClassIsIgnored) {
  const int n = 10;
  std::vector<std::pair<int, std::vector<Box3D>>> frames;
  for (int f = 0; f < n; ++f) {
    Box3D ped = vehicle_at(f * 0.5, 0.0);
    ped.class_label = ClassLabel::Pedestrian;
    frames.emplace_back(f, std::vector<Box3D>{ped});
  }
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  EXPECT_TRUE(tracks.empty());
}

TEST(RunTracker, MinHitsFiltersShortTracks) {
  const int n = 10;
  std::mt19937 rng(57);
  auto frames = simulate({SimObject{0.0, 0.0, 0.5, 0.0}}, n, 0.0, rng);
  for (int f = 2; f < n; ++f) frames[f].second.clear();  // only 2 hits
  auto cfg = veh_all_config();
  cfg.min_hits = 3;
  EXPECT_TRUE(run_tracker(frames, identity_poses(n), cfg).empty());
  cfg.min_hits = 2;
  EXPECT_EQ(run_tracker(frames, identity_poses(n), cfg).size(), 1u);
}

TEST(RunTracker, UnorderedFramesViolateContract) {
  std::vector<std::pair<int, std::vector<Box3D>>> frames;
  frames.emplace_back(3, std::vector<Box3D>{});
  frames.emplace_back(1, std::vector<Box3D>{});
  EXPECT_THROW(run_tracker(frames, identity_poses(5), veh_all_config()),
               std::invalid_argument);
}

TEST(RunTracker, PosesCompensateEgoMotion) {
  // A world-static object seen from a moving ego must classify as Static.
  const int n = 40;
  std::vector<FramePose> poses(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    poses[static_cast<std::size_t>(f)].frame_id = f;
    poses[static_cast<std::size_t>(f)].translation = {2.0 * f, 0.0, 0.0};
  }
  std::vector<std::pair<int, std::vector<Box3D>>> frames;
  const double wx = 45.0, wy = 6.0;
  for (int f = 0; f < n; ++f) {
    const Box3D world = vehicle_at(wx, wy);
    frames.emplace_back(f, std::vector<Box3D>{
                               poses[static_cast<std::size_t>(f)].box_to_sensor(
                                   world)});
  }
  const auto tracks = run_tracker(frames, poses, veh_all_config());
  ASSERT_EQ(tracks.size(), 1u);
  EXPECT_EQ(classify_motion(tracks[0], 2.0, 0.5), MotionClass::Static);
  for (const auto& [f, obs] : tracks[0].observations) {
    EXPECT_NEAR(obs.box.cx, wx, 1e-9);
    EXPECT_NEAR(obs.box.cy, wy, 1e-9);
  }
}

TEST(RunTracker, NoTwoTracksShareAnObservation) {
  std::mt19937 rng(58);
  std::vector<SimObject> objects;
  for (int i = 0; i < 6; ++i) objects.push_back({0.0, i * 8.0, 0.3, 0.0});
  const int n = 60;
  const auto frames = simulate(objects, n, 0.15, rng, 0.2);
  const auto tracks = run_tracker(frames, identity_poses(n), veh_all_config());
  std::set<std::pair<int, std::pair<double, double>>> seen;
  for (const auto& t : tracks) {
    for (const auto& [f, obs] : t.observations) {
      const auto key = std::make_pair(f, std::make_pair(obs.box.cx, obs.box.cy));
      EXPECT_TRUE(seen.insert(key).second) << "shared observation at frame " << f;
    }
  }
}

TEST(RunTracker, ObservationGapsNeverExceedCoastWindow) {
  std::mt19937 rng(59);
  const int n = 80;
  const auto frames =
      simulate({SimObject{0.0, 0.0, 0.4, 0.0}}, n, 0.1, rng, 0.25);
  const auto cfg = veh_all_config();
  const auto tracks = run_tracker(frames, identity_poses(n), cfg);
  for (const auto& t : tracks) {
    int prev = -1;
    for (const auto& [f, obs] : t.observations) {
      if (prev >= 0) EXPECT_LE(f - prev, cfg.max_coast_frames + 1);
      prev = f;
    }
  }
}

// With per-object constant score levels, raising the input threshold removes
// whole objects and can only shrink the track count.
TEST(RunTracker, ScoreThresholdMonotonicityOnConstantScoreObjects) {
  std::mt19937 rng(60);
  std::vector<SimObject> objects;
  for (int i = 0; i < 8; ++i) {
    SimObject o{0.0, i * 15.0, 0.4, 0.0};
    o.score = 0.35 + 0.08 * i;
    objects.push_back(o);
  }
  const int n = 50;
  const auto frames = simulate(objects, n, 0.05, rng);
  std::size_t prev_count = 100;
  for (double thresh : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.95}) {
    auto cfg = veh_all_config();
    cfg.input_score_thresh = thresh;
    const auto tracks = run_tracker(frames, identity_poses(n), cfg);
    EXPECT_LE(tracks.size(), prev_count) << "at threshold " << thresh;
    prev_count = tracks.size();
  }
}

TEST(RunTracker, HungarianAssignmentAgreesOnCleanScenes) {
  std::mt19937 rng(61);
  std::vector<SimObject> objects;
  for (int i = 0; i < 5; ++i) objects.push_back({0.0, i * 25.0, 0.5, 0.0});
  const int n = 40;
  const auto frames = simulate(objects, n, 0.1, rng);
  auto cfg = veh_all_config();
  const auto greedy = run_tracker(frames, identity_poses(n), cfg);
  cfg.use_hungarian = true;
  const auto optimal = run_tracker(frames, identity_poses(n), cfg);
  ASSERT_EQ(greedy.size(), optimal.size());
  for (std::size_t i = 0; i < greedy.size(); ++i) {
    EXPECT_EQ(greedy[i].observations.size(), optimal[i].observations.size());
  }
}

TEST(ClassifyMotion, StationaryTrackIsStatic) {
  Track t;
  t.class_label = ClassLabel::Vehicle;
  for (int f = 0; f < 20; ++f) {
    t.observations[f] = {vehicle_at(10.0, 5.0), ObservationKind::Observed};
  }
  EXPECT_EQ(classify_motion(t, 2.0, 0.5), MotionClass::Static);
}

TEST(ClassifyMotion, MovingTrackIsDynamic) {
  Track t;
  for (int f = 0; f < 20; ++f) {
    t.observations[f] = {vehicle_at(f * 1.0, 0.0), ObservationKind::Observed};
  }
  EXPECT_EQ(classify_motion(t, 2.0, 0.5), MotionClass::Dynamic);
}

TEST(ClassifyMotion, TooFewObservationsAreUnclassified) {
  Track t;
  t.observations[0] = {vehicle_at(0.0, 0.0), ObservationKind::Observed};
  EXPECT_EQ(classify_motion(t, 2.0, 0.5), MotionClass::Unclassified);
}

TEST(ClassifyMotion, NoisyStaticTracksClassifyReliably) {
  std::mt19937 rng(62);
  std::normal_distribution<double> noise(0.0, 0.2);
  int correct = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Track t;
    for (int f = 0; f < 25; ++f) {
      t.observations[f] = {vehicle_at(30.0 + noise(rng), -7.0 + noise(rng)),
                           ObservationKind::Observed};
    }
    if (classify_motion(t, 1.0, 0.25) == MotionClass::Static) ++correct;
  }
  EXPECT_GE(correct, 99);
}

TEST(ClassifyMotion, InterpolatedEntriesDoNotCount) {
  Track t;
  t.observations[0] = {vehicle_at(0.0, 0.0), ObservationKind::Observed};
  t.observations[1] = {vehicle_at(50.0, 0.0), ObservationKind::Interpolated};
  EXPECT_EQ(classify_motion(t, 2.0, 0.5), MotionClass::Unclassified);
}
