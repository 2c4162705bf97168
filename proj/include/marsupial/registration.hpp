#pragma once

#include "marsupial/features.hpp"
#include "marsupial/geometry.hpp"
#include "marsupial/mapstore.hpp"
#include "marsupial/sensor.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace marsupial {

struct RegistrationParams {
  int max_iterations{30};
  double epsilon_trans{0.01};  // m
  double epsilon_rot{0.005};   // rad
  double corr_max_dist{1.0};   // m
  double residual_reject{0.2};  // mean point-to-feature distance above which a fit is refused
  double robust_scale{0.15};    // Cauchy kernel width for the normal equations
  FeatureParams features;

  void validate() const;
};

enum class RegistrationStatus {
  Converged,
  NotConverged,         // iteration cap reached
  EmptyCorrespondences, // nothing within corr_max_dist
  ResidualRejected,     // increments settled but the fit is poor (wrong basin)
};

std::string to_string(RegistrationStatus s);

struct RegistrationResult {
  Pose pose;
  bool converged{false};
  int iterations_used{0};
  double residual{0.0};
  RegistrationStatus status{RegistrationStatus::NotConverged};
  std::vector<double> residual_history;  // one entry per accepted iterate, starting at init

  bool success() const { return status == RegistrationStatus::Converged; }
};

/// Nearest-neighbour lookup over a fixed point set, bucketed on a hash grid whose
/// cell edge equals the search radius.
class PointIndex {
 public:
  PointIndex(std::vector<Vec3> points, double radius);

  /// Up to k points within the radius, closest first (ties by coordinates).
  std::vector<Vec3> nearest(const Vec3& q, int k) const;
  bool empty() const { return points_.empty(); }

 private:
  std::vector<Vec3> points_;
  double radius_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  std::uint64_t key(const Vec3& p, int dx = 0, int dy = 0, int dz = 0) const;
};

/// Mean point-to-line / point-to-plane distance of the sensor-frame features at
/// `pose`, with the same correspondence rules as the solver. Returns -1 when no
/// correspondence survives gating.
double registration_cost(const std::vector<LabeledPoint>& sensor_features, const PointIndex& edges,
                         const PointIndex& planes, const Pose& pose);

/// 4-DoF (x, y, z, yaw) scan-to-map registration with damped Gauss-Newton
/// iterations on point-to-line and point-to-plane residuals.
RegistrationResult register_scan(const ScanPointCloud& scan, const UnifiedMap& map,
                                 const Pose& init, const RegistrationParams& params);

/// Deployment-time co-localization: initial guess = ground_pose * extrinsics.
RegistrationResult colocalize(const ScanPointCloud& aerial_scan, const UnifiedMap& shared_map,
                              const Pose& ground_pose, const Pose& extrinsics,
                              const RegistrationParams& params);

}  // namespace marsupial
