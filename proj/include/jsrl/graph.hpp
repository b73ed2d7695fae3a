#pragma once

#include <span>
#include <vector>

#include "jsrl/matrix.hpp"

namespace jsrl {

/// Directed edge, sender -> receiver.
struct Edge {
  int sender = 0;
  int receiver = 0;
  bool operator==(const Edge&) const = default;
};

struct IncomingEdge {
  int sender = 0;
  int edge = 0;  // index into the edge list
  bool operator==(const IncomingEdge&) const = default;
};

/// Immutable directed graph with float node features and edge attributes.
/// Parallel edges and self-loops are allowed. Edge order is part of the
/// value: incoming() lists edges in ascending edge index.
class Graph {
 public:
  Graph(Mat node_features, std::vector<Edge> edges, Mat edge_attrs);

  int num_nodes() const { return node_features_.rows; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int node_dim() const { return node_features_.cols; }
  int edge_dim() const { return edge_attrs_.cols; }

  const Mat& node_features() const { return node_features_; }
  const Mat& edge_attrs() const { return edge_attrs_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Edges whose receiver is `node`, ascending edge index.
  const std::vector<IncomingEdge>& incoming(int node) const;

  /// Relabels node i as perm[i]; edge order is preserved.
  Graph permuted(std::span<const int> perm) const;

  bool operator==(const Graph&) const = default;

 private:
  Mat node_features_;
  std::vector<Edge> edges_;
  Mat edge_attrs_;
  std::vector<std::vector<IncomingEdge>> incoming_;
};

}  // namespace jsrl
