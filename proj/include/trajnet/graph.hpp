#pragma once

#include <string>
#include <utility>
#include <vector>

namespace trajnet {

/// Undirected graph without self-loops on nodes 0..p-1. Edges are stored as
/// flags over the upper triangle in row-major order (0,1), (0,2), ..., (p-2,p-1).
class Graph {
 public:
  Graph() = default;
  explicit Graph(int p);

  static Graph complete(int p);
  /// Graph whose i-th edge flag is bit i of `mask` (p <= 11).
  static Graph from_mask(int p, unsigned long mask);

  int p() const { return p_; }
  int max_edges() const { return p_ * (p_ - 1) / 2; }
  int edge_count() const;

  bool has_edge(int h, int k) const;
  void set_edge(int h, int k, bool present);
  void toggle_edge_index(int index);
  bool edge_at_index(int index) const { return bits_[static_cast<std::size_t>(index)] == '1'; }

  static int edge_index(int p, int h, int k);
  static std::pair<int, int> edge_pair(int p, int index);

  std::vector<std::pair<int, int>> edges() const;
  std::vector<int> neighbors(int v) const;
  bool is_complete() const { return edge_count() == max_edges(); }

  /// Compact identity usable as a hash key.
  const std::string& key() const { return bits_; }

  bool operator==(const Graph& other) const = default;

 private:
  int p_ = 0;
  std::string bits_;
};

/// {"nodes": [...], "edges": [[h,k], ...]} with node labels when given.
std::string graph_to_json(const Graph& g, const std::vector<std::string>& node_names = {});

}  // namespace trajnet
