#pragma once

#include "marsupial/geometry.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace marsupial {

enum class GraphKind { LocalGround, LocalAerial, GlobalGround, GlobalAerial, Deployment };

std::string to_string(GraphKind k);

/// Unknown voxels visible from a viewpoint and the volume they span.
struct VolumetricGain {
  std::int64_t unknown_voxels{0};
  double volume{0.0};

  static VolumetricGain from_count(std::int64_t count, double resolution) {
    return {count, static_cast<double>(count) * resolution * resolution * resolution};
  }
  bool operator==(const VolumetricGain&) const = default;
};

struct Vertex {
  int id{0};
  Pose pose;
  VolumetricGain gain;
  bool frontier{false};
  bool home{false};
  std::uint64_t gain_stamp{0};  // map stamp the gain was computed against; 0 = never
};

struct Edge {
  int to{0};
  double weight{0.0};
};

struct DisconnectedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Undirected graph with Euclidean edge weights. Vertex ids are dense indices.
class ExplorationGraph {
 public:
  explicit ExplorationGraph(GraphKind kind = GraphKind::LocalGround) : kind_(kind) {}

  GraphKind kind() const { return kind_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  std::size_t edge_count() const;

  const std::vector<Vertex>& vertices() const { return vertices_; }
  Vertex& vertex(int id) { return vertices_.at(id); }
  const Vertex& vertex(int id) const { return vertices_.at(id); }
  const std::vector<Edge>& neighbors(int id) const { return adjacency_.at(id); }

  int add_vertex(const Pose& pose);
  /// Adds (a,b) with weight |a-b|; no-op for self loops and existing edges.
  void add_edge(int a, int b);
  void add_edge(int a, int b, double weight);
  bool has_edge(int a, int b) const;

  /// Closest vertex to p (ties by smallest id); -1 when empty.
  int nearest(const Vec3& p) const;
  /// Ids within radius of p, sorted by distance then id.
  std::vector<int> within(const Vec3& p, double radius) const;
  /// First vertex flagged home; -1 when none.
  int home() const;

  /// Subgraph reachable from `root`, ids renumbered in ascending original order.
  ExplorationGraph component_of(int root) const;

 private:
  GraphKind kind_;
  std::vector<Vertex> vertices_;
  std::vector<std::vector<Edge>> adjacency_;
};

struct ShortestPathTree {
  int source{0};
  std::vector<double> dist;  // +inf when unreachable
  std::vector<int> pred;     // -1 for the source and unreachable vertices

  bool reachable(int v) const;
  /// Vertex ids source..v inclusive.
  std::vector<int> path_to(int v) const;
};

/// Dijkstra from `source`. Among equal-length paths the lexicographically smallest
/// vertex-id sequence wins.
ShortestPathTree dijkstra(const ExplorationGraph& g, int source);

struct GraphPath {
  std::vector<int> ids;
  std::vector<Pose> poses;
  double length{0.0};
};

/// Minimal-weight path. from == to yields an empty path of length 0; throws
/// DisconnectedError when no path exists.
GraphPath shortest_path(const ExplorationGraph& g, int from, int to);

/// Text export: `V id x y z gain flags` then `E id1 id2 w` (id1 < id2). Gain is the
/// volume in m^3; flags are any of `F` (frontier), `H` (home), or `-`.
std::string export_graph(const ExplorationGraph& g);
/// Inverse of export_graph; unknown voxel counts are recovered from the volume and
/// `resolution` (skipped when resolution <= 0).
ExplorationGraph import_graph(const std::string& text, GraphKind kind, double resolution = 0.0);

}  // namespace marsupial
