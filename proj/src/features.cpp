#include "marsupial/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marsupial {

std::vector<ScoredPoint> score_curvature(const ScanPointCloud& scan, int neighbors) {
  std::vector<ScoredPoint> out;
  const int half = neighbors / 2;
  std::vector<const ScanPoint*> ring_hits;
  for (int ring = 0; ring < scan.rays_v; ++ring) {
    ring_hits.clear();
    for (int col = 0; col < scan.rays_h; ++col) {
      const auto& sp = scan.at(ring, col);
      if (sp.hit) ring_hits.push_back(&sp);
    }
    if (static_cast<int>(ring_hits.size()) < neighbors + 1) continue;
    for (int m = half; m + half < static_cast<int>(ring_hits.size()); ++m) {
      const Vec3& p = ring_hits[m]->point;
      Vec3 sum = Vec3::Zero();
      for (int o = 1; o <= half; ++o) {
        sum += ring_hits[m - o]->point - p;
        sum += ring_hits[m + o]->point - p;
      }
      const double norm2 = p.squaredNorm();
      if (norm2 <= 0.0) continue;
      const double k = 2.0 * half;
      out.push_back({ring, ring_hits[m]->column, p, sum.squaredNorm() / (k * k * norm2)});
    }
  }
  return out;
}

std::vector<LabeledPoint> extract_features(const ScanPointCloud& scan, const Pose& pose,
                                           const FeatureParams& params) {
  const auto scored = score_curvature(scan, params.neighbors);
  const std::size_t n = scored.size();
  if (n == 0) return {};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].curvature < scored[b].curvature;
  });

  const auto n_edge = static_cast<std::size_t>(std::ceil(params.edge_fraction * n));
  const auto n_planar = static_cast<std::size_t>(std::floor(params.planar_fraction * n));

  std::vector<LabeledPoint> out;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const auto& s = scored[order[rank]];
    const Vec3 w = pose.transform(s.point);
    if (rank >= n - n_edge && s.curvature > params.edge_min_curvature) {
      out.push_back({w, FeatureLabel::Edge});
    } else if (rank < n_planar || s.curvature <= params.planar_max_curvature) {
      out.push_back({w, FeatureLabel::Planar});
    }
  }
  return out;
}

}  // namespace marsupial
