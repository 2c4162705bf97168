#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/sensor.hpp"

#include <vector>

namespace marsupial {

/// Ring-curvature feature classification. The top `edge_fraction` of scored
/// points become edges (if above `edge_min_curvature`); the bottom
/// `planar_fraction`, plus anything at or below `planar_max_curvature`, become
/// planar. Everything else is dropped.
struct FeatureParams {
  int neighbors{4};  // k, split evenly on both sides along the ring
  double edge_fraction{0.10};
  double planar_fraction{0.40};
  double edge_min_curvature{2e-4};
  double planar_max_curvature{1e-6};
};

struct ScoredPoint {
  int ring{0};
  int column{0};
  Vec3 point;  // sensor frame
  double curvature{0.0};
};

/// Normalized ring curvature: |sum_n (p_n - p)|^2 / (k^2 |p|^2) over the k nearest
/// valid ring neighbours. Rings with fewer than k+1 hits contribute nothing.
std::vector<ScoredPoint> score_curvature(const ScanPointCloud& scan, int neighbors);

/// Classified feature points expressed in the unified frame via `pose`.
std::vector<LabeledPoint> extract_features(const ScanPointCloud& scan, const Pose& pose,
                                           const FeatureParams& params = {});

}  // namespace marsupial
