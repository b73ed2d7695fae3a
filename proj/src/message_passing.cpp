#include "jsrl/message_passing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jsrl/rng.hpp"

namespace jsrl {

EncoderParams init_encoder(int node_dim, int edge_dim, int message_dim, int hidden, int rounds,
                           Activation activation, uint64_t seed) {
  if (rounds < 1) throw std::invalid_argument("init_encoder: rounds must be >= 1");
  EncoderParams p;
  p.message_net = init_dense({node_dim + edge_dim, hidden, message_dim}, activation,
                             derive_seed(seed, 0xae));
  p.update_net = init_dense({node_dim + message_dim, hidden, node_dim}, activation,
                            derive_seed(seed, 0xbe));
  p.rounds = rounds;
  return p;
}

NodeEmbeddings assign_initial(const Graph& g) { return {g.node_features(), 0}; }

NodeEmbeddings message_round(const NodeEmbeddings& in, const Graph& g, const EncoderParams& p,
                             ExecMode mode, RoundCache* cache) {
  const int n = g.num_nodes();
  const int ne = g.num_edges();
  const int dh = p.node_dim();
  const int dm = p.message_dim();
  if (in.h.rows != n || in.h.cols != dh)
    throw std::invalid_argument("message_round: embeddings shape does not match graph/encoder");
  if (g.edge_dim() != p.edge_dim())
    throw std::invalid_argument("message_round: edge attr width does not match encoder");

  if (cache) {
    cache->edge_message.assign(ne, {});
    cache->node_update.assign(n, {});
  }

  // Messages are per edge and independent, so the edge loop parallelizes
  // without changing results.
  Mat messages(ne, dm);
  const bool par = mode == ExecMode::kParallel;
#ifdef JSRL_HAS_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int e = 0; e < ne; ++e) {
    Vec msg_in(dh + p.edge_dim());
    auto hs = in.h.row(g.edges()[e].sender);
    auto attrs = g.edge_attrs().row(e);
    std::copy(hs.begin(), hs.end(), msg_in.begin());
    std::copy(attrs.begin(), attrs.end(), msg_in.begin() + dh);
    Vec out = forward(p.message_net, msg_in, cache ? &cache->edge_message[e] : nullptr);
    std::copy(out.begin(), out.end(), messages.row(e).begin());
  }
  (void)par;

  // Each node owns its own output row; the incoming sum runs in ascending
  // edge order inside the iteration, so the parallel loop stays bit-exact.
  NodeEmbeddings out{Mat(n, dh), in.round_index + 1};
#ifdef JSRL_HAS_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int i = 0; i < n; ++i) {
    Vec upd_in(dh + dm, 0.0);
    auto hi = in.h.row(i);
    std::copy(hi.begin(), hi.end(), upd_in.begin());
    for (const IncomingEdge& ie : g.incoming(i))
      axpy(1.0, messages.row(ie.edge), std::span<double>(upd_in).subspan(dh, dm));
    Vec hi_next = forward(p.update_net, upd_in, cache ? &cache->node_update[i] : nullptr);
    std::copy(hi_next.begin(), hi_next.end(), out.h.row(i).begin());
  }
  return out;
}

NodeEmbeddings encode(const Graph& g, const EncoderParams& p, ExecMode mode, EncodeCache* cache) {
  NodeEmbeddings emb = assign_initial(g);
  if (g.node_dim() != p.node_dim())
    throw std::invalid_argument("encode: node feature width " + std::to_string(g.node_dim()) +
                                " does not match encoder width " + std::to_string(p.node_dim()));
  if (cache) {
    cache->embeddings.clear();
    cache->rounds.assign(p.rounds, {});
    cache->embeddings.push_back(emb.h);
  }
  for (int t = 0; t < p.rounds; ++t) {
    emb = message_round(emb, g, p, mode, cache ? &cache->rounds[t] : nullptr);
    if (cache) cache->embeddings.push_back(emb.h);
  }
  return emb;
}

Vec readout(const NodeEmbeddings& emb, const ReadoutSpec& spec) {
  if (spec.kind == ReadoutSpec::Kind::kFlatten) return emb.h.data;
  if (spec.node < 0 || spec.node >= emb.h.rows)
    throw std::out_of_range("readout: node " + std::to_string(spec.node) + " out of range");
  auto row = emb.h.row(spec.node);
  return Vec(row.begin(), row.end());
}

int readout_dim(const ReadoutSpec& spec, int num_nodes, int node_dim) {
  return spec.kind == ReadoutSpec::Kind::kFlatten ? num_nodes * node_dim : node_dim;
}

Vec flatten_readout(const NodeEmbeddings& emb) { return emb.h.data; }

std::vector<Vec> node_readout(const NodeEmbeddings& emb, std::span<const int> nodes) {
  std::vector<Vec> out;
  out.reserve(nodes.size());
  for (int n : nodes) out.push_back(readout(emb, ReadoutSpec::single_node(n)));
  return out;
}

void add_readout_grad(const ReadoutSpec& spec, std::span<const double> grad, Mat& upstream) {
  if (static_cast<int>(grad.size()) != readout_dim(spec, upstream.rows, upstream.cols))
    throw std::invalid_argument("add_readout_grad: gradient size mismatch");
  if (spec.kind == ReadoutSpec::Kind::kFlatten) {
    for (size_t i = 0; i < grad.size(); ++i) upstream.data[i] += grad[i];
  } else {
    axpy(1.0, grad, upstream.row(spec.node));
  }
}

EncoderGrads make_zero_encoder_grads(const EncoderParams& p) {
  return {make_zero_grads(p.message_net), make_zero_grads(p.update_net)};
}

void encoder_backward_into(const Graph& g, const EncoderParams& p, const EncodeCache& cache,
                           const Mat& upstream, EncoderGrads& grads) {
  const int n = g.num_nodes();
  const int ne = g.num_edges();
  const int dh = p.node_dim();
  const int dm = p.message_dim();
  if (static_cast<int>(cache.rounds.size()) != p.rounds)
    throw std::invalid_argument("encoder_backward: cache round count mismatch");
  if (upstream.rows != n || upstream.cols != dh)
    throw std::invalid_argument("encoder_backward: upstream shape mismatch");

  Mat dh_cur = upstream;  // gradient w.r.t. h^{t+1} while unwinding round t
  NetGrads upd_g = make_zero_grads(p.update_net);
  NetGrads msg_g = make_zero_grads(p.message_net);
  for (int t = p.rounds - 1; t >= 0; --t) {
    const RoundCache& rc = cache.rounds[t];
    Mat dh_prev(n, dh);
    Mat dmsg(ne, dm);
    for (int i = 0; i < n; ++i) {
      upd_g.input.assign(dh + dm, 0.0);
      backward_into(p.update_net, rc.node_update[i], dh_cur.row(i), upd_g);
      axpy(1.0, std::span<const double>(upd_g.input).first(dh), dh_prev.row(i));
      // The summed message distributes its gradient to every incoming edge.
      auto dm_slice = std::span<const double>(upd_g.input).subspan(dh, dm);
      for (const IncomingEdge& ie : g.incoming(i)) axpy(1.0, dm_slice, dmsg.row(ie.edge));
    }
    for (int e = 0; e < ne; ++e) {
      msg_g.input.assign(dh + p.edge_dim(), 0.0);
      backward_into(p.message_net, rc.edge_message[e], dmsg.row(e), msg_g);
      axpy(1.0, std::span<const double>(msg_g.input).first(dh), dh_prev.row(g.edges()[e].sender));
    }
    dh_cur = std::move(dh_prev);
  }
  upd_g.input.assign(upd_g.input.size(), 0.0);
  msg_g.input.assign(msg_g.input.size(), 0.0);
  grads.update.add(upd_g);
  grads.message.add(msg_g);
}

EncoderGrads encoder_backward(const Graph& g, const EncoderParams& p, const EncodeCache& cache,
                              const Mat& upstream) {
  EncoderGrads grads = make_zero_encoder_grads(p);
  encoder_backward_into(g, p, cache, upstream, grads);
  return grads;
}

GradCheckReport check_encoder_gradients(const EncoderParams& p, const Graph& g, double tolerance,
                                        uint64_t seed) {
  auto rng = make_rng(seed);
  Mat upstream(g.num_nodes(), p.node_dim());
  for (double& v : upstream.data) v = unit_uniform(rng) < 0.5 ? -1.0 : 1.0;

  EncodeCache cache;
  encode(g, p, ExecMode::kSerial, &cache);
  EncoderGrads analytic = encoder_backward(g, p, cache, upstream);

  EncoderParams probe = p;  // perturbed in place below
  const double h = 1e-5;
  auto loss = [&] {
    NodeEmbeddings emb = encode(g, probe, ExecMode::kSerial);
    return dot(emb.h.data, upstream.data);
  };
  GradCheckReport report;
  auto check_param = [&](double& slot, double analytic_grad) {
    const double saved = slot;
    slot = saved + h;
    const double up = loss();
    slot = saved - h;
    const double down = loss();
    slot = saved;
    const double fd = (up - down) / (2 * h);
    const double rel =
        std::abs(analytic_grad - fd) / std::max({1.0, std::abs(analytic_grad), std::abs(fd)});
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.checked;
  };
  auto sweep = [&](DenseNet& net, const NetGrads& grads) {
    for (size_t l = 0; l < net.weights.size(); ++l) {
      for (size_t i = 0; i < net.weights[l].data.size(); ++i)
        check_param(net.weights[l].data[i], grads.weights[l].data[i]);
      for (size_t i = 0; i < net.biases[l].size(); ++i)
        check_param(net.biases[l][i], grads.biases[l][i]);
    }
  };
  sweep(probe.message_net, analytic.message);
  sweep(probe.update_net, analytic.update);
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace jsrl
