#include "marsupial/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace marsupial {

void RegistrationParams::validate() const {
  if (max_iterations <= 0 || !(epsilon_trans > 0) || !(epsilon_rot > 0) || !(corr_max_dist > 0))
    throw std::invalid_argument("registration parameters must be strictly positive");
  if (!(epsilon_trans < corr_max_dist) || !(epsilon_rot < corr_max_dist))
    throw std::invalid_argument("registration epsilons must be below corr_max_dist");
}

std::string to_string(RegistrationStatus s) {
  switch (s) {
    case RegistrationStatus::Converged: return "converged";
    case RegistrationStatus::NotConverged: return "not_converged";
    case RegistrationStatus::EmptyCorrespondences: return "empty_correspondences";
    case RegistrationStatus::ResidualRejected: return "residual_rejected";
  }
  return "unknown";
}

PointIndex::PointIndex(std::vector<Vec3> points, double radius)
    : points_(std::move(points)), radius_(radius) {
  for (std::uint32_t i = 0; i < points_.size(); ++i) cells_[key(points_[i])].push_back(i);
}

std::uint64_t PointIndex::key(const Vec3& p, int dx, int dy, int dz) const {
  const auto c = [&](double v, int d) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / radius_)) + d +
                                      (1 << 20)) &
           0x1FFFFF;
  };
  return (c(p.x(), dx) << 42) | (c(p.y(), dy) << 21) | c(p.z(), dz);
}

std::vector<Vec3> PointIndex::nearest(const Vec3& q, int k) const {
  std::vector<std::pair<double, std::uint32_t>> cand;
  const double r2 = radius_ * radius_;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key(q, dx, dy, dz));
        if (it == cells_.end()) continue;
        for (const auto i : it->second) {
          const double d2 = (points_[i] - q).squaredNorm();
          if (d2 <= r2) cand.emplace_back(d2, i);
        }
      }
  const auto take = std::min<std::size_t>(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + take, cand.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return lex_less(points_[a.second], points_[b.second]);
  });
  std::vector<Vec3> out;
  out.reserve(take);
  for (std::size_t n = 0; n < take; ++n) out.push_back(points_[cand[n].second]);
  return out;
}

namespace {

struct Residual {
  double r;     // signed distance along n
  Vec3 normal;  // unit direction of the residual in the world frame
};

// Correspondence for one world-frame feature point.
std::optional<Residual> correspond(const LabeledPoint& f, const Vec3& w, const PointIndex& edges,
                                   const PointIndex& planes) {
  if (f.label == FeatureLabel::Edge) {
    const auto nn = edges.nearest(w, 2);
    if (nn.size() < 2) return std::nullopt;
    const Vec3 d = nn[1] - nn[0];
    if (d.norm() < 1e-9) return std::nullopt;
    const Vec3 u = d.normalized();
    const Vec3 rel = w - nn[0];
    const Vec3 perp = rel - rel.dot(u) * u;
    const double dist = perp.norm();
    if (dist < 1e-12) return Residual{0.0, Vec3::Zero()};
    return Residual{dist, perp / dist};
  }
  const auto nn = planes.nearest(w, 6);
  if (nn.size() < 3) return std::nullopt;
  const Vec3& a = nn[0];
  const Vec3 ab = nn[1] - a;
  for (std::size_t c = 2; c < nn.size(); ++c) {
    const Vec3 ac = nn[c] - a;
    const Vec3 n = ab.cross(ac);
    if (n.norm() > 0.1 * ab.norm() * ac.norm()) {
      const Vec3 unit = n.normalized();
      return Residual{unit.dot(w - a), unit};
    }
  }
  return std::nullopt;
}

struct System {
  Eigen::Matrix4d H{Eigen::Matrix4d::Zero()};
  Eigen::Vector4d g{Eigen::Vector4d::Zero()};
  double mean_abs{0.0};
  std::size_t count{0};
};

System build_system(const std::vector<LabeledPoint>& feats, const PointIndex& edges,
                    const PointIndex& planes, const Pose& pose, double robust_scale) {
  System sys;
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  double sum = 0.0;
  for (const auto& f : feats) {
    const Vec3 w = pose.transform(f.position);
    const auto res = correspond(f, w, edges, planes);
    if (!res) continue;
    ++sys.count;
    sum += std::abs(res->r);
    if (res->normal.isZero()) continue;
    const Vec3& p = f.position;
    const Vec3 dyaw(-s * p.x() - c * p.y(), c * p.x() - s * p.y(), 0.0);
    Eigen::Vector4d J;
    J << res->normal, res->normal.dot(dyaw);
    const double u = res->r / robust_scale;
    const double wgt = 1.0 / (1.0 + u * u);
    sys.H += wgt * J * J.transpose();
    sys.g += wgt * J * res->r;
  }
  if (sys.count > 0) sys.mean_abs = sum / static_cast<double>(sys.count);
  return sys;
}

std::vector<LabeledPoint> sensor_features(const ScanPointCloud& scan, const FeatureParams& fp) {
  return extract_features(scan, Pose{}, fp);
}

PointIndex index_of_label(const UnifiedMap& map, FeatureLabel label, double radius) {
  return PointIndex(map.points(label), radius);
}

}  // namespace

double registration_cost(const std::vector<LabeledPoint>& feats, const PointIndex& edges,
                         const PointIndex& planes, const Pose& pose) {
  const System sys = build_system(feats, edges, planes, pose, 1.0);
  return sys.count == 0 ? -1.0 : sys.mean_abs;
}

RegistrationResult register_scan(const ScanPointCloud& scan, const UnifiedMap& map,
                                 const Pose& init, const RegistrationParams& params) {
  params.validate();
  RegistrationResult result;
  result.pose = init;

  const auto feats = sensor_features(scan, params.features);
  const PointIndex edges = index_of_label(map, FeatureLabel::Edge, params.corr_max_dist);
  const PointIndex planes = index_of_label(map, FeatureLabel::Planar, params.corr_max_dist);

  Pose x = init;
  System sys = build_system(feats, edges, planes, x, params.robust_scale);
  if (sys.count == 0) {
    result.status = RegistrationStatus::EmptyCorrespondences;
    return result;
  }
  result.residual = sys.mean_abs;
  result.residual_history.push_back(sys.mean_abs);

  double damping = 1e-6;
  bool settled = false;
  int it = 0;
  while (it < params.max_iterations) {
    ++it;
    Eigen::Matrix4d A = sys.H;
    A.diagonal() += damping * (sys.H.diagonal().array() + 1e-9).matrix();
    const Eigen::Vector4d delta = A.ldlt().solve(-sys.g);
    if (!delta.allFinite()) break;

    const Pose candidate(x.position + delta.head<3>(), x.yaw + delta[3]);
    System next = build_system(feats, edges, planes, candidate, params.robust_scale);
    const bool small =
        delta.head<3>().norm() < params.epsilon_trans && std::abs(delta[3]) < params.epsilon_rot;

    if (next.count > 0 && next.mean_abs <= sys.mean_abs) {
      x = candidate;
      sys = std::move(next);
      result.residual_history.push_back(sys.mean_abs);
      damping = std::max(damping * 0.1, 1e-9);
    } else {
      damping *= 10.0;
    }
    if (small) {
      settled = true;
      break;
    }
  }

  result.pose = x;
  result.iterations_used = it;
  result.residual = sys.mean_abs;
  if (!settled) {
    result.status = RegistrationStatus::NotConverged;
  } else if (sys.mean_abs > params.residual_reject) {
    result.status = RegistrationStatus::ResidualRejected;
  } else {
    result.status = RegistrationStatus::Converged;
    result.converged = true;
  }
  return result;
}

RegistrationResult colocalize(const ScanPointCloud& aerial_scan, const UnifiedMap& shared_map,
                              const Pose& ground_pose, const Pose& extrinsics,
                              const RegistrationParams& params) {
  const Pose init = ground_pose.compose(extrinsics);
  if (shared_map.empty()) {
    RegistrationResult r;
    r.pose = init;
    r.status = RegistrationStatus::EmptyCorrespondences;
    return r;
  }
  return register_scan(aerial_scan, shared_map, init, params);
}

}  // namespace marsupial
