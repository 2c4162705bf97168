#include "marsupial/graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace marsupial {

std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::LocalGround: return "local_ground";
    case GraphKind::LocalAerial: return "local_aerial";
    case GraphKind::GlobalGround: return "global_ground";
    case GraphKind::GlobalAerial: return "global_aerial";
    case GraphKind::Deployment: return "deployment";
  }
  return "unknown";
}

std::size_t ExplorationGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency_) n += a.size();
  return n / 2;
}

int ExplorationGraph::add_vertex(const Pose& pose) {
  Vertex v;
  v.id = static_cast<int>(vertices_.size());
  v.pose = pose;
  vertices_.push_back(v);
  adjacency_.emplace_back();
  return v.id;
}

void ExplorationGraph::add_edge(int a, int b) {
  add_edge(a, b, (vertices_.at(a).pose.position - vertices_.at(b).pose.position).norm());
}

void ExplorationGraph::add_edge(int a, int b, double weight) {
  if (a == b || has_edge(a, b)) return;
  auto insert_sorted = [](std::vector<Edge>& list, Edge e) {
    const auto it = std::lower_bound(list.begin(), list.end(), e.to,
                                     [](const Edge& x, int to) { return x.to < to; });
    list.insert(it, e);
  };
  insert_sorted(adjacency_.at(a), {b, weight});
  insert_sorted(adjacency_.at(b), {a, weight});
}

bool ExplorationGraph::has_edge(int a, int b) const {
  const auto& list = adjacency_.at(a);
  const auto it = std::lower_bound(list.begin(), list.end(), b,
                                   [](const Edge& x, int to) { return x.to < to; });
  return it != list.end() && it->to == b;
}

int ExplorationGraph::nearest(const Vec3& p) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& v : vertices_) {
    const double d = (v.pose.position - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = v.id;
    }
  }
  return best;
}

std::vector<int> ExplorationGraph::within(const Vec3& p, double radius) const {
  std::vector<std::pair<double, int>> hits;
  const double r2 = radius * radius;
  for (const auto& v : vertices_) {
    const double d = (v.pose.position - p).squaredNorm();
    if (d <= r2) hits.emplace_back(d, v.id);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<int> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

int ExplorationGraph::home() const {
  for (const auto& v : vertices_)
    if (v.home) return v.id;
  return -1;
}

ExplorationGraph ExplorationGraph::component_of(int root) const {
  std::vector<char> seen(vertices_.size(), 0);
  std::vector<int> stack{root};
  seen.at(root) = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& e : adjacency_[v])
      if (!seen[e.to]) {
        seen[e.to] = 1;
        stack.push_back(e.to);
      }
  }
  std::vector<int> remap(vertices_.size(), -1);
  ExplorationGraph out(kind_);
  for (const auto& v : vertices_) {
    if (!seen[v.id]) continue;
    const int id = out.add_vertex(v.pose);
    Vertex& nv = out.vertex(id);
    nv.gain = v.gain;
    nv.frontier = v.frontier;
    nv.home = v.home;
    nv.gain_stamp = v.gain_stamp;
    remap[v.id] = id;
  }
  for (const auto& v : vertices_) {
    if (!seen[v.id]) continue;
    for (const auto& e : adjacency_[v.id])
      if (v.id < e.to) out.add_edge(remap[v.id], remap[e.to], e.weight);
  }
  return out;
}

bool ShortestPathTree::reachable(int v) const { return std::isfinite(dist.at(v)); }

std::vector<int> ShortestPathTree::path_to(int v) const {
  std::vector<int> path;
  if (!reachable(v)) return path;
  for (int u = v; u != -1; u = pred[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

ShortestPathTree dijkstra(const ExplorationGraph& g, int source) {
  const std::size_t n = g.size();
  ShortestPathTree t;
  t.source = source;
  t.dist.assign(n, std::numeric_limits<double>::infinity());
  t.pred.assign(n, -1);
  std::vector<char> settled(n, 0);
  t.dist.at(source) = 0.0;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u] || d > t.dist[u]) continue;
    settled[u] = 1;
    for (const auto& e : g.neighbors(u)) {
      if (settled[e.to]) continue;
      const double nd = d + e.weight;
      const double cur = t.dist[e.to];
      if (nd < cur) {
        t.dist[e.to] = nd;
        t.pred[e.to] = u;
        queue.emplace(nd, e.to);
      } else if (nd == cur && t.pred[e.to] != u) {
        // Equal length: keep the lexicographically smaller id sequence.
        auto a = t.path_to(u);
        auto b = t.path_to(t.pred[e.to]);
        a.push_back(e.to);
        b.push_back(e.to);
        if (std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end())) t.pred[e.to] = u;
      }
    }
  }
  return t;
}

GraphPath shortest_path(const ExplorationGraph& g, int from, int to) {
  if (from < 0 || to < 0 || from >= static_cast<int>(g.size()) || to >= static_cast<int>(g.size()))
    throw std::out_of_range("shortest_path: vertex id out of range");
  GraphPath out;
  if (from == to) return out;
  const auto tree = dijkstra(g, from);
  if (!tree.reachable(to))
    throw DisconnectedError(fmt::format("no path between vertices {} and {}", from, to));
  out.ids = tree.path_to(to);
  out.length = tree.dist[to];
  for (const int id : out.ids) out.poses.push_back(g.vertex(id).pose);
  return out;
}

std::string export_graph(const ExplorationGraph& g) {
  std::string out;
  for (const auto& v : g.vertices()) {
    std::string flags;
    if (v.frontier) flags += 'F';
    if (v.home) flags += 'H';
    if (flags.empty()) flags = "-";
    out += fmt::format("V {} {} {} {} {} {}\n", v.id, v.pose.position.x(), v.pose.position.y(),
                       v.pose.position.z(), v.gain.volume, flags);
  }
  for (const auto& v : g.vertices())
    for (const auto& e : g.neighbors(v.id))
      if (v.id < e.to) out += fmt::format("E {} {} {}\n", v.id, e.to, e.weight);
  return out;
}

ExplorationGraph import_graph(const std::string& text, GraphKind kind, double resolution) {
  ExplorationGraph g(kind);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "V") {
      int id;
      double x, y, z, gain;
      std::string flags;
      if (!(ls >> id >> x >> y >> z >> gain >> flags) || id != static_cast<int>(g.size()))
        throw std::invalid_argument(fmt::format("graph text line {}: malformed vertex", line_no));
      const int nid = g.add_vertex(Pose(x, y, z, 0.0));
      Vertex& v = g.vertex(nid);
      v.gain.volume = gain;
      if (resolution > 0.0)
        v.gain.unknown_voxels = std::llround(gain / (resolution * resolution * resolution));
      v.frontier = flags.find('F') != std::string::npos;
      v.home = flags.find('H') != std::string::npos;
    } else if (tag == "E") {
      int a, b;
      double w;
      if (!(ls >> a >> b >> w) || a < 0 || b < 0 || a >= static_cast<int>(g.size()) ||
          b >= static_cast<int>(g.size()))
        throw std::invalid_argument(fmt::format("graph text line {}: malformed edge", line_no));
      g.add_edge(a, b, w);
    } else {
      throw std::invalid_argument(fmt::format("graph text line {}: unknown record '{}'", line_no, tag));
    }
  }
  return g;
}

}  // namespace marsupial
