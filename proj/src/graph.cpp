#include "jsrl/graph.hpp"

#include <stdexcept>
#include <string>

namespace jsrl {

Graph::Graph(Mat node_features, std::vector<Edge> edges, Mat edge_attrs)
    : node_features_(std::move(node_features)),
      edges_(std::move(edges)),
      edge_attrs_(std::move(edge_attrs)) {
  const int n = node_features_.rows;
  if (edge_attrs_.rows != static_cast<int>(edges_.size()))
    throw std::invalid_argument("Graph: edge_attrs rows (" + std::to_string(edge_attrs_.rows) +
                                ") != edge count (" + std::to_string(edges_.size()) + ")");
  for (size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.sender < 0 || ed.sender >= n || ed.receiver < 0 || ed.receiver >= n)
      throw std::invalid_argument("Graph: edge " + std::to_string(e) + " references node (" +
                                  std::to_string(ed.sender) + "," + std::to_string(ed.receiver) +
                                  ") outside [0," + std::to_string(n) + ")");
  }
  incoming_.resize(n);
  for (size_t e = 0; e < edges_.size(); ++e)
    incoming_[edges_[e].receiver].push_back({edges_[e].sender, static_cast<int>(e)});
}

const std::vector<IncomingEdge>& Graph::incoming(int node) const {
  if (node < 0 || node >= num_nodes()) throw std::out_of_range("Graph::incoming: bad node id");
  return incoming_[node];
}

Graph Graph::permuted(std::span<const int> perm) const {
  const int n = num_nodes();
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("Graph::permuted: permutation size != node count");
  std::vector<char> seen(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) throw std::invalid_argument("Graph::permuted: not a permutation");
    seen[p] = 1;
  }
  Mat feats(n, node_dim());
  for (int i = 0; i < n; ++i) {
    auto src = node_features_.row(i);
    auto dst = feats.row(perm[i]);
    for (int c = 0; c < node_dim(); ++c) dst[c] = src[c];
  }
  std::vector<Edge> edges(edges_.size());
  for (size_t e = 0; e < edges_.size(); ++e)
    edges[e] = {perm[edges_[e].sender], perm[edges_[e].receiver]};
  return Graph(std::move(feats), std::move(edges), edge_attrs_);
}

}  // namespace jsrl
