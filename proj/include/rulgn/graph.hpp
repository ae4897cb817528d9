#pragma once

#include "rulgn/ops.hpp"
#include "rulgn/tensor.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace rulgn {

/// Directed attributed graph. Node attributes are the rows of `node_attrs`,
/// edge attributes the rows of `edge_attrs`; edge k runs senders[k] ->
/// receivers[k]. Self-edges are permitted. Graphs are immutable values.
struct AttributedGraph {
  Tensor node_attrs;  // [N x d_v]
  Tensor edge_attrs;  // [E x d_e]
  std::vector<int> senders;
  std::vector<int> receivers;

  int num_nodes() const { return node_attrs.ndim() == 2 ? node_attrs.rows() : 0; }
  int num_edges() const { return static_cast<int>(senders.size()); }

  /// Index bounds, N >= 1, and edge-list consistency.
  void validate() const;
};

enum class Aggregation { Mean, Sum, Max, Min };

/// Per-receiver aggregation of edge rows into [n_nodes x d_e]. Nodes with no
/// incoming edges receive the zero vector.
Tensor aggregate_edges(const Tensor& edge_rows, const std::vector<int>& receivers, int n_nodes,
                       Aggregation kind);
Tensor aggregate_mean(const Tensor& edge_rows, const std::vector<int>& receivers, int n_nodes);

/// Full block: edge function, per-node aggregation of incoming updated
/// edges, node function.
struct GNBlock {
  // edge_fn(e [E x d_e], v_recv [E x d_v], v_send [E x d_v]) -> [E x d_e']
  std::function<Tensor(const Tensor&, const Tensor&, const Tensor&)> edge_fn;
  // node_fn(agg [N x d_e'], v [N x d_v]) -> [N x d_v']
  std::function<Tensor(const Tensor&, const Tensor&)> node_fn;
  Aggregation aggregation = Aggregation::Mean;
};

/// Block without message passing: pointwise maps over edge and node rows.
struct GraphIndependent {
  std::function<Tensor(const Tensor&)> node_fn;
  std::function<Tensor(const Tensor&)> edge_fn;
};

/// One message-passing step: e'_k = edge_fn(e_k, v_recv, v_send), per-node
/// aggregation over incoming e', v'_i = node_fn(agg_i, v_i). Topology is
/// unchanged; the returned edges hold the updated e'.
AttributedGraph gn_block_apply(const AttributedGraph& g, const GNBlock& block);

AttributedGraph graph_independent_apply(const AttributedGraph& g, const GraphIndependent& block);

/// enc once, the same core block n_core times (shared parameters), dec once.
AttributedGraph encode_process_decode(const AttributedGraph& g, const GraphIndependent& enc,
                                      const GNBlock& core, const GraphIndependent& dec,
                                      int n_core);

/// Disjoint union with node-index offsets; offsets recover per-graph rows.
struct GraphBatch {
  AttributedGraph graph;
  std::vector<int> node_offsets;  // size k+1
  std::vector<int> edge_offsets;  // size k+1

  int size() const { return static_cast<int>(node_offsets.size()) - 1; }
};

GraphBatch batch_graphs(const std::vector<AttributedGraph>& graphs);

/// Per-graph slice of a batched graph (attrs and re-based edge indices).
AttributedGraph unbatch_graph(const GraphBatch& batch, int index);

/// Plain-text listing of nodes, edges (sender -> receiver, first edge
/// attribute) and attribute norms.
void dump_graph(const AttributedGraph& g, std::ostream& os);

}  // namespace rulgn
