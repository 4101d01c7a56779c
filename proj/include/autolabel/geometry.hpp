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

#ifndef AUTOLABEL_GEOMETRY_HPP_
#define AUTOLABEL_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace autolabel {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into [-pi, pi). Angles already in range pass through
/// unchanged, so normalizing is bit-exact on normalized input.
inline double normalize_heading(double rad) {
  if (rad >= -kPi && rad < kPi) return rad;
  double a = std::fmod(rad + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

enum class ClassLabel : std::uint8_t { Vehicle, Pedestrian };

inline const char* to_string(ClassLabel c) {
  return c == ClassLabel::Vehicle ? "Vehicle" : "Pedestrian";
}

inline ClassLabel class_from_string(const std::string& s) {
  if (s == "Vehicle") return ClassLabel::Vehicle;
  if (s == "Pedestrian") return ClassLabel::Pedestrian;
  throw std::invalid_argument("unknown class label: " + s);
}

/// Small per-class value holder for thresholds keyed by ClassLabel.
template <typename T>
struct PerClass {
  T vehicle{};
  T pedestrian{};

  T& operator[](ClassLabel c) {
    return c == ClassLabel::Vehicle ? vehicle : pedestrian;
  }
  const T& operator[](ClassLabel c) const {
    return c == ClassLabel::Vehicle ? vehicle : pedestrian;
  }
};

/// Which detection sets contributed a box. Raw detections carry a single
/// set_id; fused boxes accumulate the ids of every contributing set.
struct Provenance {
  std::vector<std::string> set_ids;
  std::string detector_id;

  /// Stable key for deterministic tie-breaking (lowest set_id wins).
  std::string key() const {
    if (set_ids.empty()) return {};
    return *std::min_element(set_ids.begin(), set_ids.end());
  }
};

/// One oriented 3D detection in whatever frame the producer used.
/// Dims are full extents; heading rotates the +x (length) axis about z.
struct Box3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double l = 1.0, w = 1.0, h = 1.0;
  double heading = 0.0;  // radians, [-pi, pi)
  double score = 0.0;    // [0, 1]
  ClassLabel class_label = ClassLabel::Vehicle;
  Provenance provenance;

  bool valid() const {
    return l > 0.0 && w > 0.0 && h > 0.0 && score >= 0.0 && score <= 1.0 &&
           heading >= -kPi && heading < kPi;
  }

  double bev_area() const { return l * w; }
  double volume() const { return l * w * h; }
  double bev_range() const { return std::hypot(cx, cy); }
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

/// XYZT point: t is the time delta (seconds, <= 0) from the current frame.
struct Point4 {
  double x = 0.0, y = 0.0, z = 0.0, t = 0.0;
};

struct PointCloud {
  std::vector<Point4> points;
  int frame_id = 0;
};

/// Sensor-to-world rigid transform at one frame.
struct FramePose {
  std::array<std::array<double, 3>, 3> rotation = {
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<double, 3> translation = {0, 0, 0};
  int frame_id = 0;

  bool orthonormal(double tol = 1e-6) const {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += rotation[i][k] * rotation[j][k];
        if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol) return false;
      }
    }
    return true;
  }

  double yaw() const { return std::atan2(rotation[1][0], rotation[0][0]); }

  std::array<double, 3> apply(const std::array<double, 3>& p) const {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
      out[i] = translation[i];
      for (int k = 0; k < 3; ++k) out[i] += rotation[i][k] * p[k];
    }
    return out;
  }

  std::array<double, 3> apply_inverse(const std::array<double, 3>& p) const {
    std::array<double, 3> d{p[0] - translation[0], p[1] - translation[1],
                            p[2] - translation[2]};
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) {
      out[i] = 0.0;
      for (int k = 0; k < 3; ++k) out[i] += rotation[k][i] * d[k];
    }
    return out;
  }

  Box3D box_to_world(const Box3D& b) const {
    Box3D out = b;
    auto c = apply({b.cx, b.cy, b.cz});
    out.cx = c[0];
    out.cy = c[1];
    out.cz = c[2];
    out.heading = normalize_heading(b.heading + yaw());
    return out;
  }

  Box3D box_to_sensor(const Box3D& b) const {
    Box3D out = b;
    auto c = apply_inverse({b.cx, b.cy, b.cz});
    out.cx = c[0];
    out.cy = c[1];
    out.cz = c[2];
    out.heading = normalize_heading(b.heading - yaw());
    return out;
  }
};

/// BEV corners of the heading-rotated footprint, counter-clockwise.
inline std::array<Vec2, 4> bev_corners(const Box3D& b) {
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  const double hl = 0.5 * b.l, hw = 0.5 * b.w;
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out{};
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.cx + c * local[i].x - s * local[i].y,
              b.cy + s * local[i].x + c * local[i].y};
  }
  return out;
}

namespace detail {

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Shoelace area of a simple polygon (absolute value).
inline double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p.x * q.y - p.y * q.x;
  }
  return 0.5 * std::abs(acc);
}

/// Sutherland-Hodgman clip of `subject` against convex CCW `clip`.
/// Points exactly on a clip edge are kept, so rectangles that only share
/// an edge still intersect (with zero area).
inline std::vector<Vec2> clip_convex(std::span<const Vec2> subject,
                                     std::span<const Vec2> clip) {
  std::vector<Vec2> poly(subject.begin(), subject.end());
  std::vector<Vec2> next;
  for (std::size_t e = 0; e < clip.size() && !poly.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      const double dp = cross(a, b, p);
      const double dq = cross(a, b, q);
      if (dp >= 0.0) next.push_back(p);
      if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
        const double t = dp / (dp - dq);
        next.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
      }
    }
    poly = next;
  }
  return poly;
}

}  // namespace detail

/// Area of intersection of the two heading-rotated BEV footprints.
inline double bev_intersection_area(const Box3D& a, const Box3D& b) {
  // Cheap reject: circumscribed-circle distance test.
  const double ra = 0.5 * std::hypot(a.l, a.w);
  const double rb = 0.5 * std::hypot(b.l, b.w);
  if (std::hypot(a.cx - b.cx, a.cy - b.cy) > ra + rb) return 0.0;
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  const auto inter = detail::clip_convex(ca, cb);
  return detail::polygon_area(inter);
}

/// BEV IoU of two oriented boxes; ignores z and h.
inline double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.bev_area() + b.bev_area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// 3D IoU: BEV intersection area times vertical overlap, over volume union.
inline double iou_3d(const Box3D& a, const Box3D& b) {
  const double za0 = a.cz - 0.5 * a.h, za1 = a.cz + 0.5 * a.h;
  const double zb0 = b.cz - 0.5 * b.h, zb1 = b.cz + 0.5 * b.h;
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * dz;
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Greedy suppression following a caller-supplied priority order (indices
/// into `boxes`, best first). Returns surviving indices, in that order.
/// Suppression only applies within a class.
inline std::vector<std::size_t> greedy_nms_order(std::span<const Box3D> boxes,
                                                 std::span<const std::size_t> order,
                                                 double iou_thresh) {
  std::vector<bool> suppressed(boxes.size(), false);
  std::vector<std::size_t> keep;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    keep.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (suppressed[j]) continue;
      if (boxes[i].class_label != boxes[j].class_label) continue;
      if (bev_iou(boxes[i], boxes[j]) >= iou_thresh) suppressed[j] = true;
    }
  }
  return keep;
}

/// Default NMS priority: score descending, ties by lowest provenance
/// set_id, then input order.
inline std::vector<std::size_t> nms_default_order(std::span<const Box3D> boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (boxes[i].score != boxes[j].score) return boxes[i].score > boxes[j].score;
    const auto ki = boxes[i].provenance.key();
    const auto kj = boxes[j].provenance.key();
    if (ki != kj) return ki < kj;
    return i < j;
  });
  return order;
}

/// Greedy descending-score BEV NMS. Output sorted by score descending.
inline std::vector<Box3D> nms_bev(std::span<const Box3D> boxes, double iou_thresh) {
  if (iou_thresh <= 0.0 || iou_thresh > 1.0) {
    throw std::invalid_argument("nms_bev: iou_thresh must be in (0, 1]");
  }
  const auto order = nms_default_order(boxes);
  const auto keep = greedy_nms_order(boxes, order, iou_thresh);
  std::vector<Box3D> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(boxes[i]);
  return out;
}

/// True if (x,y,z) lies inside the heading-rotated cuboid, boundaries
/// inclusive.
inline bool point_in_box(const Box3D& b, double x, double y, double z) {
  const double dx = x - b.cx, dy = y - b.cy, dz = z - b.cz;
  if (std::abs(dz) > 0.5 * b.h) return false;
  const double c = std::cos(b.heading), s = std::sin(b.heading);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * b.l && std::abs(ly) <= 0.5 * b.w;
}

/// Number of cloud points inside the box (all time slices).
inline std::size_t points_in_box(const Box3D& b, const PointCloud& cloud) {
  std::size_t n = 0;
  for (const auto& p : cloud.points) {
    if (point_in_box(b, p.x, p.y, p.z)) ++n;
  }
  return n;
}

/// Connected components of the overlap graph (edge where bev_iou >= thresh).
/// Clusters are ordered by their smallest member index; members keep input
/// order. The clusters partition the input indices.
inline std::vector<std::vector<std::size_t>> cluster_by_iou(
    std::span<const Box3D> boxes, double thresh) {
  if (thresh <= 0.0 || thresh >= 1.0) {
    throw std::invalid_argument("cluster_by_iou: thresh must be in (0, 1)");
  }
  const std::size_t n = boxes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (bev_iou(boxes[i], boxes[j]) >= thresh) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<int> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return clusters;
}

}  // namespace autolabel

#endif  // AUTOLABEL_GEOMETRY_HPP_
