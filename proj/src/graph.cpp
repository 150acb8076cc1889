#include "trajnet/graph.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "trajnet/errors.hpp"

namespace trajnet {

Graph::Graph(int p) : p_(p), bits_(static_cast<std::size_t>(p * (p - 1) / 2), '0') {
  if (p < 1) throw ContractError("Graph: node count must be positive");
}

Graph Graph::complete(int p) {
  Graph g(p);
  std::fill(g.bits_.begin(), g.bits_.end(), '1');
  return g;
}

Graph Graph::from_mask(int p, unsigned long mask) {
  Graph g(p);
  for (int i = 0; i < g.max_edges(); ++i) {
    if ((mask >> i) & 1UL) g.bits_[static_cast<std::size_t>(i)] = '1';
  }
  return g;
}

int Graph::edge_count() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), '1')); }

int Graph::edge_index(int p, int h, int k) {
  if (h > k) std::swap(h, k);
  if (h == k || h < 0 || k >= p) throw ContractError("Graph: invalid edge");
  // Edges before row h: sum_{r<h} (p-1-r).
  return h * (2 * p - h - 1) / 2 + (k - h - 1);
}

std::pair<int, int> Graph::edge_pair(int p, int index) {
  int h = 0;
  while (index >= p - 1 - h) {
    index -= p - 1 - h;
    ++h;
  }
  return {h, h + 1 + index};
}

bool Graph::has_edge(int h, int k) const {
  if (h == k) return false;
  return bits_[static_cast<std::size_t>(edge_index(p_, h, k))] == '1';
}

void Graph::set_edge(int h, int k, bool present) {
  bits_[static_cast<std::size_t>(edge_index(p_, h, k))] = present ? '1' : '0';
}

void Graph::toggle_edge_index(int index) {
  char& b = bits_[static_cast<std::size_t>(index)];
  b = (b == '1') ? '0' : '1';
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < max_edges(); ++i) {
    if (bits_[static_cast<std::size_t>(i)] == '1') out.push_back(edge_pair(p_, i));
  }
  return out;
}

std::vector<int> Graph::neighbors(int v) const {
  std::vector<int> out;
  for (int u = 0; u < p_; ++u) {
    if (u != v && has_edge(u, v)) out.push_back(u);
  }
  return out;
}

std::string graph_to_json(const Graph& g, const std::vector<std::string>& node_names) {
  nlohmann::ordered_json j;
  if (node_names.empty()) {
    std::vector<int> nodes(static_cast<std::size_t>(g.p()));
    for (int i = 0; i < g.p(); ++i) nodes[static_cast<std::size_t>(i)] = i;
    j["nodes"] = nodes;
  } else {
    j["nodes"] = node_names;
  }
  auto edges = nlohmann::ordered_json::array();
  for (auto [h, k] : g.edges()) edges.push_back({h, k});
  j["edges"] = edges;
  return j.dump() + "\n";
}

}  // namespace trajnet
