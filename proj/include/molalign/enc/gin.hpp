#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molalign/chem/featurize.hpp"
#include "molalign/nn/param_store.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/nn/tape.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::enc {

struct GinConfig {
  int layers = 5;
  int hidden_dim = 256;
  double epsilon = 0.0;
  bool sum_readout = false; // default mean
  int atomic_vocab = 118;
  int chirality_vocab = 3;
  int bond_vocab = 4;
  int direction_vocab = 3;
};

// Several molecules packed into one disjoint graph so a batch is a single
// forward pass; graph_of_node drives the pooling segments.
struct BatchedGraph {
  std::vector<std::int64_t> node_atomic;
  std::vector<std::int64_t> node_chirality;
  std::vector<std::int64_t> edge_src;
  std::vector<std::int64_t> edge_dst;
  std::vector<std::int64_t> edge_bond_type;
  std::vector<std::int64_t> edge_direction;
  std::vector<std::int64_t> graph_of_node;
  std::size_t num_graphs = 0;

  std::size_t num_nodes() const { return node_atomic.size(); }
};

inline BatchedGraph batch_graphs(const std::vector<chem::MolecularGraph> &graphs) {
  BatchedGraph batch;
  batch.num_graphs = graphs.size();
  std::int64_t node_offset = 0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const chem::MolecularGraph &graph = graphs[g];
    if (graph.num_nodes == 0)
      throw ValueError("graph " + std::to_string(g) + " has zero atoms");
    for (int v = 0; v < graph.num_nodes; ++v) {
      batch.node_atomic.push_back(graph.node_atomic[static_cast<std::size_t>(v)]);
      batch.node_chirality.push_back(graph.node_chirality[static_cast<std::size_t>(v)]);
      batch.graph_of_node.push_back(static_cast<std::int64_t>(g));
    }
    for (int e = 0; e < graph.num_edges(); ++e) {
      batch.edge_src.push_back(graph.edge_src[static_cast<std::size_t>(e)] + node_offset);
      batch.edge_dst.push_back(graph.edge_dst[static_cast<std::size_t>(e)] + node_offset);
      batch.edge_bond_type.push_back(graph.edge_bond_type[static_cast<std::size_t>(e)]);
      batch.edge_direction.push_back(graph.edge_direction[static_cast<std::size_t>(e)]);
    }
    node_offset += graph.num_nodes;
  }
  return batch;
}

namespace detail {

inline std::string gin_layer_name(int layer, const char *suffix) {
  return "gin/l" + std::to_string(layer) + "/" + suffix;
}

} // namespace detail

inline void init_gin_params(nn::ParameterStore &store, const GinConfig &cfg, nn::Rng &rng) {
  std::size_t d = static_cast<std::size_t>(cfg.hidden_dim);
  store.add("gin/node_emb/atomic",
            nn::xavier_uniform(static_cast<std::size_t>(cfg.atomic_vocab), d, rng));
  store.add("gin/node_emb/chirality",
            nn::xavier_uniform(static_cast<std::size_t>(cfg.chirality_vocab), d, rng));
  for (int l = 0; l < cfg.layers; ++l) {
    store.add(detail::gin_layer_name(l, "edge_emb/bond"),
              nn::xavier_uniform(static_cast<std::size_t>(cfg.bond_vocab), d, rng));
    store.add(detail::gin_layer_name(l, "edge_emb/dir"),
              nn::xavier_uniform(static_cast<std::size_t>(cfg.direction_vocab), d, rng));
    store.add(detail::gin_layer_name(l, "mlp/w1"), nn::xavier_uniform(d, d, rng));
    store.add(detail::gin_layer_name(l, "mlp/b1"), nn::Tensor(d));
    store.add(detail::gin_layer_name(l, "mlp/w2"), nn::xavier_uniform(d, d, rng));
    store.add(detail::gin_layer_name(l, "mlp/b2"), nn::Tensor(d));
  }
}

// m_v = (1+eps)*h_v + sum over incoming edges of relu(h_u + e_uv), then the
// two-layer MLP; inter-layer relu everywhere except after the last layer.
// Returns the pooled per-graph embeddings, shape [num_graphs, hidden_dim].
inline nn::Tape::NodeId gin_forward(nn::Tape &tape, nn::ParameterStore &store,
                                    const GinConfig &cfg, const BatchedGraph &batch) {
  if (batch.num_graphs == 0)
    throw ValueError("empty batch: no graphs to encode");
  auto atomic_emb = tape.param(store, "gin/node_emb/atomic");
  auto chir_emb = tape.param(store, "gin/node_emb/chirality");
  auto h = tape.add(tape.gather_rows(atomic_emb, batch.node_atomic),
                    tape.gather_rows(chir_emb, batch.node_chirality));
  for (int l = 0; l < cfg.layers; ++l) {
    nn::Tape::NodeId aggregated;
    if (!batch.edge_src.empty()) {
      auto bond_emb = tape.param(store, detail::gin_layer_name(l, "edge_emb/bond"));
      auto dir_emb = tape.param(store, detail::gin_layer_name(l, "edge_emb/dir"));
      auto edge_feat = tape.add(tape.gather_rows(bond_emb, batch.edge_bond_type),
                                tape.gather_rows(dir_emb, batch.edge_direction));
      auto messages = tape.relu(tape.add(tape.gather_rows(h, batch.edge_src), edge_feat));
      aggregated = tape.scatter_add_rows(messages, batch.edge_dst, batch.num_nodes());
    } else {
      aggregated = tape.input(nn::Tensor(batch.num_nodes(), static_cast<std::size_t>(cfg.hidden_dim)));
    }
    auto m = tape.add(tape.scale(h, 1.0 + cfg.epsilon), aggregated);
    auto w1 = tape.param(store, detail::gin_layer_name(l, "mlp/w1"));
    auto b1 = tape.param(store, detail::gin_layer_name(l, "mlp/b1"));
    auto w2 = tape.param(store, detail::gin_layer_name(l, "mlp/w2"));
    auto b2 = tape.param(store, detail::gin_layer_name(l, "mlp/b2"));
    auto hidden = tape.relu(tape.add_bias(tape.matmul(m, w1), b1));
    auto out = tape.add_bias(tape.matmul(hidden, w2), b2);
    h = (l + 1 < cfg.layers) ? tape.relu(out) : out;
  }
  if (cfg.sum_readout) {
    // sum readout = scatter over the segment index
    return tape.scatter_add_rows(h, batch.graph_of_node, batch.num_graphs);
  }
  return tape.segment_mean(h, batch.graph_of_node, batch.num_graphs);
}

// single-molecule convenience over a throwaway tape
inline nn::Tensor encode_graph(nn::ParameterStore &store, const GinConfig &cfg,
                               const chem::MolecularGraph &graph) {
  nn::Tape tape;
  BatchedGraph batch = batch_graphs({graph});
  auto pooled = gin_forward(tape, store, cfg, batch);
  return tape.value(pooled);
}

} // namespace molalign::enc
