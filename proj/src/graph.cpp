#include "rulgn/graph.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rulgn {

void AttributedGraph::validate() const {
  if (node_attrs.ndim() != 2 || num_nodes() < 1) {
    throw std::invalid_argument("graph: node attributes must be [N x d_v] with N >= 1");
  }
  if (num_edges() > 0 && edge_attrs.ndim() != 2) {
    throw std::invalid_argument("graph: edge attributes must be [E x d_e]");
  }
  if (senders.size() != receivers.size()) {
    throw std::invalid_argument("graph: sender/receiver lists differ in length");
  }
  if (num_edges() != (edge_attrs.ndim() == 2 ? edge_attrs.rows() : 0)) {
    throw std::invalid_argument("graph: edge attribute rows do not match edge count");
  }
  for (int k = 0; k < num_edges(); ++k) {
    if (senders[k] < 0 || senders[k] >= num_nodes() || receivers[k] < 0 ||
        receivers[k] >= num_nodes()) {
      throw std::invalid_argument("graph: edge index out of range");
    }
  }
}

Tensor aggregate_edges(const Tensor& edge_rows, const std::vector<int>& receivers, int n_nodes,
                       Aggregation kind) {
  if (n_nodes < 1) throw std::invalid_argument("aggregate_edges: need n_nodes >= 1");
  const int e = edge_rows.ndim() == 2 ? edge_rows.rows() : 0;
  if (e != static_cast<int>(receivers.size())) {
    throw std::invalid_argument("aggregate_edges: receiver list does not match edge rows");
  }
  const int d = edge_rows.ndim() == 2 ? edge_rows.cols() : 0;

  std::vector<int> counts(n_nodes, 0);
  for (int r : receivers) {
    if (r < 0 || r >= n_nodes) throw std::invalid_argument("aggregate_edges: receiver out of range");
    ++counts[r];
  }

  Array out = Array::Zero(n_nodes * d);
  MatMap om(out.data(), n_nodes, d);
  // For Max/Min the winning edge row per (node, column), -1 where empty.
  std::vector<int> winner;

  if (e > 0) {
    ConstMatMap em(edge_rows.values().data(), e, d);
    switch (kind) {
      case Aggregation::Sum:
      case Aggregation::Mean:
        for (int k = 0; k < e; ++k) om.row(receivers[k]) += em.row(k);
        if (kind == Aggregation::Mean) {
          for (int i = 0; i < n_nodes; ++i) {
            if (counts[i] > 0) om.row(i) /= counts[i];
          }
        }
        break;
      case Aggregation::Max:
      case Aggregation::Min: {
        const double sign = kind == Aggregation::Max ? 1.0 : -1.0;
        winner.assign(n_nodes * d, -1);
        MatrixRM best = MatrixRM::Constant(n_nodes, d, -std::numeric_limits<double>::infinity());
        for (int k = 0; k < e; ++k) {
          const int i = receivers[k];
          for (int j = 0; j < d; ++j) {
            const double v = sign * em(k, j);
            if (v > best(i, j)) {
              best(i, j) = v;
              winner[i * d + j] = k;
            }
          }
        }
        for (int i = 0; i < n_nodes; ++i) {
          if (counts[i] > 0) om.row(i) = sign * best.row(i);
        }
        break;
      }
    }
  }

  Tensor result({n_nodes, d}, std::move(out));
  Tape* tp = common_tape({&edge_rows});
  if (!tp || e == 0) return result;
  if (kind == Aggregation::Sum || kind == Aggregation::Mean) {
    auto recv = receivers;
    auto cnt = counts;
    const bool divide = kind == Aggregation::Mean;
    return tp->emit(std::move(result), {&edge_rows},
                    [recv, cnt, d, e, divide](const Array& g, GradSink& sink) {
      ConstMatMap gm(g.data(), static_cast<int>(cnt.size()), d);
      Array de(e * d);
      MatMap dem(de.data(), e, d);
      for (int k = 0; k < e; ++k) {
        const int i = recv[k];
        dem.row(k) = divide ? (gm.row(i) / cnt[i]).eval() : gm.row(i).eval();
      }
      sink.add(0, de);
    });
  }
  auto win = winner;
  return tp->emit(std::move(result), {&edge_rows},
                  [win, d, e](const Array& g, GradSink& sink) {
    Array de = Array::Zero(e * d);
    MatMap dem(de.data(), e, d);
    const int n = static_cast<int>(win.size()) / d;
    ConstMatMap gm(g.data(), n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        const int k = win[i * d + j];
        if (k >= 0) dem(k, j) += gm(i, j);
      }
    }
    sink.add(0, de);
  });
}

Tensor aggregate_mean(const Tensor& edge_rows, const std::vector<int>& receivers, int n_nodes) {
  return aggregate_edges(edge_rows, receivers, n_nodes, Aggregation::Mean);
}

AttributedGraph gn_block_apply(const AttributedGraph& g, const GNBlock& block) {
  g.validate();
  const int d_e = g.edge_attrs.ndim() == 2 ? g.edge_attrs.cols() : 0;
  Tensor v_recv = gather_rows(g.node_attrs, g.receivers);
  Tensor v_send = gather_rows(g.node_attrs, g.senders);
  Tensor edge_in = g.num_edges() > 0 ? g.edge_attrs : Tensor::zeros({0, d_e});
  Tensor updated_edges = block.edge_fn(edge_in, v_recv, v_send);
  Tensor agg = aggregate_edges(updated_edges, g.receivers, g.num_nodes(), block.aggregation);
  Tensor updated_nodes = block.node_fn(agg, g.node_attrs);
  return AttributedGraph{updated_nodes, updated_edges, g.senders, g.receivers};
}

AttributedGraph graph_independent_apply(const AttributedGraph& g, const GraphIndependent& block) {
  g.validate();
  Tensor nodes = block.node_fn(g.node_attrs);
  Tensor edges = g.edge_attrs.ndim() == 2 ? block.edge_fn(g.edge_attrs) : g.edge_attrs;
  return AttributedGraph{nodes, edges, g.senders, g.receivers};
}

AttributedGraph encode_process_decode(const AttributedGraph& g, const GraphIndependent& enc,
                                      const GNBlock& core, const GraphIndependent& dec,
                                      int n_core) {
  if (n_core < 1) throw std::invalid_argument("encode_process_decode: n_core must be >= 1");
  AttributedGraph h = graph_independent_apply(g, enc);
  for (int i = 0; i < n_core; ++i) h = gn_block_apply(h, core);
  return graph_independent_apply(h, dec);
}

GraphBatch batch_graphs(const std::vector<AttributedGraph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("batch_graphs: empty batch");
  GraphBatch batch;
  batch.node_offsets.push_back(0);
  batch.edge_offsets.push_back(0);
  std::vector<Tensor> node_parts, edge_parts;
  std::vector<int> senders, receivers;
  const int d_v = graphs[0].node_attrs.cols();
  const int d_e = graphs[0].edge_attrs.ndim() == 2 ? graphs[0].edge_attrs.cols() : 0;
  for (const AttributedGraph& g : graphs) {
    g.validate();
    if (g.node_attrs.cols() != d_v) throw std::invalid_argument("batch_graphs: node width mismatch");
    if (g.num_edges() > 0 && g.edge_attrs.cols() != d_e) {
      throw std::invalid_argument("batch_graphs: edge width mismatch");
    }
    const int base = batch.node_offsets.back();
    node_parts.push_back(g.node_attrs);
    if (g.num_edges() > 0) edge_parts.push_back(g.edge_attrs);
    for (int s : g.senders) senders.push_back(base + s);
    for (int r : g.receivers) receivers.push_back(base + r);
    batch.node_offsets.push_back(base + g.num_nodes());
    batch.edge_offsets.push_back(batch.edge_offsets.back() + g.num_edges());
  }
  Tensor nodes = concat(node_parts, 0);
  Tensor edges = edge_parts.empty() ? Tensor::zeros({0, d_e}) : concat(edge_parts, 0);
  batch.graph = AttributedGraph{nodes, edges, std::move(senders), std::move(receivers)};
  return batch;
}

AttributedGraph unbatch_graph(const GraphBatch& batch, int index) {
  if (index < 0 || index >= batch.size()) throw std::invalid_argument("unbatch_graph: index");
  const int n0 = batch.node_offsets[index], n1 = batch.node_offsets[index + 1];
  const int e0 = batch.edge_offsets[index], e1 = batch.edge_offsets[index + 1];
  AttributedGraph g;
  g.node_attrs = slice(batch.graph.node_attrs, 0, n0, n1 - n0);
  g.edge_attrs = e1 > e0 ? slice(batch.graph.edge_attrs, 0, e0, e1 - e0)
                         : Tensor::zeros({0, batch.graph.edge_attrs.cols()});
  for (int k = e0; k < e1; ++k) {
    g.senders.push_back(batch.graph.senders[k] - n0);
    g.receivers.push_back(batch.graph.receivers[k] - n0);
  }
  return g;
}

void dump_graph(const AttributedGraph& g, std::ostream& os) {
  g.validate();
  os << "graph: " << g.num_nodes() << " nodes, " << g.num_edges() << " edges\n";
  ConstMatMap vm(g.node_attrs.values().data(), g.num_nodes(), g.node_attrs.cols());
  for (int i = 0; i < g.num_nodes(); ++i) {
    os << "  node " << i << " |v|=" << vm.row(i).norm() << "\n";
  }
  if (g.num_edges() == 0) return;
  ConstMatMap em(g.edge_attrs.values().data(), g.num_edges(), g.edge_attrs.cols());
  for (int k = 0; k < g.num_edges(); ++k) {
    os << "  edge " << g.senders[k] << " -> " << g.receivers[k] << " attr0=" << em(k, 0)
       << " |e|=" << em.row(k).norm() << "\n";
  }
}

}  // namespace rulgn
