#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jsrl/dense_net.hpp"
#include "jsrl/graph.hpp"

namespace jsrl {

/// Kernel execution strategy. Parallel uses OpenMP but is written so results
/// are bit-identical to serial for any thread count: each output element is
/// owned by exactly one iteration and reductions keep a fixed order.
enum class ExecMode { kSerial, kParallel };

/// Shared per-round networks of the graph encoder. The update net maps back
/// to the node feature width, so embeddings keep that width across rounds.
struct EncoderParams {
  DenseNet message_net;  // input node_dim + edge_dim, output message_dim
  DenseNet update_net;   // input node_dim + message_dim, output node_dim
  int rounds = 1;

  int node_dim() const { return update_net.layer_sizes.back(); }
  int edge_dim() const { return message_net.input_dim() - node_dim(); }
  int message_dim() const { return message_net.output_dim(); }
};

EncoderParams init_encoder(int node_dim, int edge_dim, int message_dim, int hidden, int rounds,
                           Activation activation, uint64_t seed);

struct NodeEmbeddings {
  Mat h;                // one row per node
  int round_index = 0;  // how many rounds produced it
};

/// Round 0 embeddings: the raw node features.
NodeEmbeddings assign_initial(const Graph& g);

/// Forward caches for one round, indexed like the graph's edges and nodes.
struct RoundCache {
  std::vector<ForwardCache> edge_message;
  std::vector<ForwardCache> node_update;
};

struct EncodeCache {
  std::vector<Mat> embeddings;  // h^0 .. h^rounds
  std::vector<RoundCache> rounds;
};

/// One round: every edge sends message_net(sender embedding, edge attrs) to
/// its receiver; each node sums incoming messages in ascending edge order and
/// applies update_net(own embedding, summed message).
NodeEmbeddings message_round(const NodeEmbeddings& in, const Graph& g, const EncoderParams& p,
                             ExecMode mode = ExecMode::kSerial, RoundCache* cache = nullptr);

/// assign_initial followed by p.rounds message rounds.
NodeEmbeddings encode(const Graph& g, const EncoderParams& p, ExecMode mode = ExecMode::kSerial,
                      EncodeCache* cache = nullptr);

/// Which slice of the embeddings a consumer reads.
struct ReadoutSpec {
  enum class Kind { kFlatten, kNode };
  Kind kind = Kind::kFlatten;
  int node = 0;  // used by kNode

  static ReadoutSpec flatten() { return {Kind::kFlatten, 0}; }
  static ReadoutSpec single_node(int node) { return {Kind::kNode, node}; }
  bool operator==(const ReadoutSpec&) const = default;
};

/// Row-major concatenation of all rows (kFlatten) or one row (kNode).
Vec readout(const NodeEmbeddings& emb, const ReadoutSpec& spec);
int readout_dim(const ReadoutSpec& spec, int num_nodes, int node_dim);

/// Concatenation of every row in node-id order.
Vec flatten_readout(const NodeEmbeddings& emb);
/// Selected rows in request order; repeats allowed.
std::vector<Vec> node_readout(const NodeEmbeddings& emb, std::span<const int> nodes);

/// Scatters a gradient w.r.t. the readout back to a dense num_nodes x node_dim
/// matrix, accumulating into `upstream`.
void add_readout_grad(const ReadoutSpec& spec, std::span<const double> grad, Mat& upstream);

struct EncoderGrads {
  NetGrads message;
  NetGrads update;
};

EncoderGrads make_zero_encoder_grads(const EncoderParams& p);

/// Backpropagates d loss / d h^rounds (`upstream`) through every round,
/// accumulating parameter gradients. The cache must come from encode() on the
/// same graph and parameters.
void encoder_backward_into(const Graph& g, const EncoderParams& p, const EncodeCache& cache,
                           const Mat& upstream, EncoderGrads& grads);
EncoderGrads encoder_backward(const Graph& g, const EncoderParams& p, const EncodeCache& cache,
                              const Mat& upstream);

/// Compares encoder_backward against central finite differences over every
/// parameter of both nets, under a random linear loss on the final
/// embeddings. Same error convention as check_gradients.
GradCheckReport check_encoder_gradients(const EncoderParams& p, const Graph& g, double tolerance,
                                        uint64_t seed = 12345);

}  // namespace jsrl
