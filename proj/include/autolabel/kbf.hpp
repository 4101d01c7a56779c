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

#ifndef AUTOLABEL_KBF_HPP_
#define AUTOLABEL_KBF_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "autolabel/geometry.hpp"

namespace autolabel::kbf {

enum class Kernel : std::uint8_t { Gaussian, Epanechnikov };

enum class ScoreFusion : std::uint8_t { Kde, Max };

/// Per-attribute kernel bandwidths, in the attribute's own units.
struct Bandwidths {
  double center = 0.5;   // meters
  double dims = 0.25;    // meters
  double heading = 0.1;  // radians
  double score = 0.1;
};

struct KbfConfig {
  Kernel kernel = Kernel::Gaussian;
  Bandwidths bandwidth;
  std::size_t min_cluster_size = 1;
  double default_weight = 1.0;
  ScoreFusion score_fusion = ScoreFusion::Kde;

  bool valid() const {
    return bandwidth.center > 0.0 && bandwidth.dims > 0.0 &&
           bandwidth.heading > 0.0 && bandwidth.score > 0.0 &&
           min_cluster_size >= 1 && default_weight > 0.0;
  }
};

inline double kernel_value(Kernel k, double u) {
  switch (k) {
    case Kernel::Gaussian:
      return std::exp(-0.5 * u * u);
    case Kernel::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

/// Weighted-KDE mode restricted to the sample locations: returns the sample
/// x_j maximizing f(x_j) = (1/h) * sum_i w_i * K((x_j - x_i) / h).
/// Ties resolve to the earliest sample. Invariant under positive scaling of
/// the weights.
inline double kde_mode(std::span<const double> samples,
                       std::span<const double> weights, double bandwidth,
                       Kernel kernel = Kernel::Gaussian) {
  if (samples.empty()) throw std::invalid_argument("kde_mode: empty samples");
  if (samples.size() != weights.size()) {
    throw std::invalid_argument("kde_mode: samples/weights length mismatch");
  }
  if (bandwidth <= 0.0) throw std::invalid_argument("kde_mode: bandwidth <= 0");
  std::size_t best = 0;
  double best_density = -1.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    double density = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      density += weights[i] * kernel_value(kernel, (samples[j] - samples[i]) / bandwidth);
    }
    if (density > best_density) {
      best_density = density;
      best = j;
    }
  }
  return samples[best];
}

/// Maps every heading onto the mod-pi representative nearest the anchor
/// (cuboids are symmetric under a pi flip). The anchor is the heading of the
/// highest-weight box, ties broken by highest score then input order.
/// Outputs land in [anchor - pi/2, anchor + pi/2].
inline std::vector<double> canonicalize_headings(
    std::span<const Box3D> boxes, std::span<const double> weights = {}) {
  if (boxes.empty()) {
    throw std::invalid_argument("canonicalize_headings: empty boxes");
  }
  if (!weights.empty() && weights.size() != boxes.size()) {
    throw std::invalid_argument("canonicalize_headings: weights length mismatch");
  }
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < boxes.size(); ++i) {
    const double wi = weights.empty() ? 1.0 : weights[i];
    const double wa = weights.empty() ? 1.0 : weights[anchor];
    if (wi > wa || (wi == wa && boxes[i].score > boxes[anchor].score)) anchor = i;
  }
  const double ref = boxes[anchor].heading;
  std::vector<double> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    double d = std::fmod(b.heading - ref, kPi);
    if (d < -0.5 * kPi) d += kPi;
    if (d >= 0.5 * kPi) d -= kPi;
    out.push_back(ref + d);
  }
  return out;
}

/// Kernel-density box fusion: each attribute is fused independently by
/// weighted KDE mode over the cluster's samples; headings are canonicalized
/// first. Returns nullopt when the cluster is smaller than min_cluster_size.
inline std::optional<Box3D> fuse_cluster(std::span<const Box3D> boxes,
                                         std::span<const double> weights,
                                         const KbfConfig& config) {
  if (boxes.empty()) throw std::invalid_argument("fuse_cluster: empty cluster");
  if (boxes.size() != weights.size()) {
    throw std::invalid_argument("fuse_cluster: boxes/weights length mismatch");
  }
  for (const auto& b : boxes) {
    if (b.class_label != boxes.front().class_label) {
      throw std::invalid_argument("fuse_cluster: mixed class labels");
    }
  }
  if (boxes.size() < config.min_cluster_size) return std::nullopt;

  const std::size_t n = boxes.size();
  std::vector<double> attr(n);
  auto mode_of = [&](auto getter, double h) {
    for (std::size_t i = 0; i < n; ++i) attr[i] = getter(boxes[i]);
    return kde_mode(attr, weights, h, config.kernel);
  };

  Box3D fused;
  fused.class_label = boxes.front().class_label;
  fused.cx = mode_of([](const Box3D& b) { return b.cx; }, config.bandwidth.center);
  fused.cy = mode_of([](const Box3D& b) { return b.cy; }, config.bandwidth.center);
  fused.cz = mode_of([](const Box3D& b) { return b.cz; }, config.bandwidth.center);
  fused.l = mode_of([](const Box3D& b) { return b.l; }, config.bandwidth.dims);
  fused.w = mode_of([](const Box3D& b) { return b.w; }, config.bandwidth.dims);
  fused.h = mode_of([](const Box3D& b) { return b.h; }, config.bandwidth.dims);

  const auto headings = canonicalize_headings(boxes, weights);
  fused.heading = normalize_heading(
      kde_mode(headings, weights, config.bandwidth.heading, config.kernel));

  if (config.score_fusion == ScoreFusion::Max) {
    double best = 0.0;
    for (const auto& b : boxes) best = std::max(best, b.score);
    fused.score = best;
  } else {
    fused.score = mode_of([](const Box3D& b) { return b.score; },
                          config.bandwidth.score);
  }

  std::set<std::string> ids;
  for (const auto& b : boxes) {
    ids.insert(b.provenance.set_ids.begin(), b.provenance.set_ids.end());
  }
  fused.provenance.set_ids.assign(ids.begin(), ids.end());
  fused.provenance.detector_id = "kbf";
  return fused;
}

}  // namespace autolabel::kbf

#endif  // AUTOLABEL_KBF_HPP_
