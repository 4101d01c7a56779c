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

#include "autolabel/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "autolabel/synth.hpp"
#include "test_support.hpp"

using namespace autolabel;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("autolabel_io_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(IoDetectionSets, RoundTripPreservesEverything) {
  TempDir tmp;
  std::mt19937 rng(101);
  ensemble::DetectionSet set;
  set.set_id = "veh_test";
  set.detector_id = "det_x";
  set.source_domain = "dense64";
  set.t_delta_max = 0.4;
  set.tta_variant = "flip_x";
  for (int f = 0; f < 5; ++f) {
    std::vector<Box3D> boxes;
    for (int i = 0; i < 4; ++i) {
      Box3D b = testsupport::random_box(rng);
      b.provenance = {{"veh_test"}, "det_x"};
      boxes.push_back(b);
    }
    set.frames[f] = boxes;
  }
  io::write_detection_set(tmp.path(), set);
  const auto loaded =
      io::read_detection_set(tmp.path() / "veh_test.manifest.json");
  EXPECT_EQ(loaded.set_id, set.set_id);
  EXPECT_EQ(loaded.detector_id, set.detector_id);
  EXPECT_EQ(loaded.source_domain, set.source_domain);
  EXPECT_EQ(loaded.t_delta_max, set.t_delta_max);
  EXPECT_EQ(loaded.tta_variant, set.tta_variant);
  ASSERT_EQ(loaded.frames.size(), set.frames.size());
  for (const auto& [f, boxes] : set.frames) {
    const auto& other = loaded.frames.at(f);
    ASSERT_EQ(other.size(), boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      EXPECT_EQ(other[i].cx, boxes[i].cx);
      EXPECT_EQ(other[i].heading, boxes[i].heading);
      EXPECT_EQ(other[i].score, boxes[i].score);
      EXPECT_EQ(other[i].class_label, boxes[i].class_label);
      EXPECT_EQ(other[i].provenance.set_ids,
                std::vector<std::string>{"veh_test"});
    }
  }
}

TEST(IoDetectionSets, DirectoryScanFindsAllSets) {
  TempDir tmp;
  for (const std::string id : {"alpha", "beta"}) {
    ensemble::DetectionSet set;
    set.set_id = id;
    set.detector_id = id;
    io::write_detection_set(tmp.path() / "detections", set);
  }
  const auto sets = io::read_detection_sets(tmp.path() / "detections");
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].set_id, "alpha");
  EXPECT_EQ(sets[1].set_id, "beta");
}

TEST(IoPoses, RoundTripAndOrthonormalityCheck) {
  TempDir tmp;
  synth::SceneSpec spec;
  spec.n_frames = 6;
  spec.ego_path = synth::EgoPathKind::Arc;
  spec.ego_turn_rate = 0.2;
  const auto truth = synth::generate_scene(spec);
  io::write_poses(tmp.path() / "poses.jsonl", truth.poses);
  const auto loaded = io::read_poses(tmp.path() / "poses.jsonl");
  ASSERT_EQ(loaded.size(), truth.poses.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].frame_id, truth.poses[i].frame_id);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(loaded[i].rotation[r][c], truth.poses[i].rotation[r][c]);
      }
    }
  }
  // A corrupted rotation fails the orthonormality gate.
  auto out = io::open_for_write(tmp.path() / "bad.jsonl");
  out << R"({"frame_id":0,"rotation":[[1,0,0],[0,2,0],[0,0,1]],"translation":[0,0,0]})"
      << "\n";
  out.close();
  EXPECT_THROW(io::read_poses(tmp.path() / "bad.jsonl"), InputError);
}

TEST(IoClouds, RoundTrip) {
  TempDir tmp;
  std::vector<PointCloud> clouds(2);
  clouds[0].frame_id = 0;
  clouds[0].points = {{1.0, 2.0, 0.5, 0.0}, {3.0, -1.0, 0.2, -0.1}};
  clouds[1].frame_id = 1;
  io::write_clouds(tmp.path() / "clouds.jsonl", clouds);
  const auto loaded = io::read_clouds(tmp.path() / "clouds.jsonl");
  ASSERT_EQ(loaded.size(), 2u);
  ASSERT_EQ(loaded[0].points.size(), 2u);
  EXPECT_EQ(loaded[0].points[1].t, -0.1);
  EXPECT_TRUE(loaded[1].points.empty());
}

TEST(IoTracks, RoundTripWithKindsAndMotion) {
  TempDir tmp;
  std::mt19937 rng(102);
  tracking::Track t;
  t.track_id = 42;
  t.class_label = ClassLabel::Pedestrian;
  t.motion = tracking::MotionClass::Dynamic;
  for (int f = 0; f < 4; ++f) {
    Box3D b = testsupport::random_box(rng, 5.0, ClassLabel::Pedestrian);
    t.observations[f] = {b, f == 2 ? tracking::ObservationKind::Interpolated
                                   : tracking::ObservationKind::Observed};
  }
  io::write_tracks(tmp.path() / "tracks.jsonl", std::vector<tracking::Track>{t});
  const auto loaded = io::read_tracks(tmp.path() / "tracks.jsonl");
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].track_id, 42);
  EXPECT_EQ(loaded[0].class_label, ClassLabel::Pedestrian);
  EXPECT_EQ(loaded[0].motion, tracking::MotionClass::Dynamic);
  ASSERT_EQ(loaded[0].observations.size(), 4u);
  EXPECT_EQ(loaded[0].observations.at(2).kind,
            tracking::ObservationKind::Interpolated);
  for (const auto& [f, obs] : t.observations) {
    EXPECT_EQ(loaded[0].observations.at(f).box.cx, obs.box.cx);
    EXPECT_EQ(loaded[0].observations.at(f).box.score, obs.box.score);
  }
}

TEST(IoLabels, RoundTripWithSourceTags) {
  TempDir tmp;
  std::mt19937 rng(103);
  std::map<int, std::vector<labels::PseudoLabel>> by_frame;
  for (int f = 0; f < 3; ++f) {
    std::vector<labels::PseudoLabel> ls;
    ls.push_back({testsupport::random_box(rng), labels::SourceTag::Fused});
    ls.push_back({testsupport::random_box(rng), labels::SourceTag::StaticRefined});
    by_frame[f] = ls;
  }
  io::write_labels(tmp.path() / "labels.jsonl", by_frame);
  const auto loaded = io::read_labels(tmp.path() / "labels.jsonl");
  ASSERT_EQ(loaded.size(), 3u);
  for (const auto& [f, ls] : by_frame) {
    const auto& other = loaded.at(f);
    ASSERT_EQ(other.size(), ls.size());
    for (std::size_t i = 0; i < ls.size(); ++i) {
      EXPECT_EQ(other[i].source, ls[i].source);
      EXPECT_EQ(other[i].box.cx, ls[i].box.cx);
    }
  }
  // The evaluator view reads the same file as plain boxes.
  const auto as_boxes = io::read_frame_boxes(tmp.path() / "labels.jsonl");
  EXPECT_EQ(as_boxes.at(0).size(), 2u);
}

TEST(IoErrors, MissingAndMalformedFilesThrowInputError) {
  TempDir tmp;
  EXPECT_THROW(io::read_jsonl(tmp.path() / "nope.jsonl"), InputError);
  auto out = io::open_for_write(tmp.path() / "broken.jsonl");
  out << "{not json\n";
  out.close();
  EXPECT_THROW(io::read_jsonl(tmp.path() / "broken.jsonl"), InputError);
  EXPECT_THROW(io::read_detection_sets(tmp.path() / "missing_dir"), InputError);
}
