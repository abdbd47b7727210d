#pragma once

#include <cstddef>
#include <utility>

#include "molalign/nn/tape.hpp"
#include "molalign/nn/tensor.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::align {

struct LossReport {
  double l_graph = 0.0;
  double l_text = 0.0;
  double l = 0.0;
  double retrieval_g2t = 0.0;
  double retrieval_t2g = 0.0;
};

struct LossNodes {
  nn::Tape::NodeId l_graph;
  nn::Tape::NodeId l_text;
  nn::Tape::NodeId l;
};

// entry (i,j) = (Hg_i . Ht_j) / tau
inline nn::Tape::NodeId similarity_logits(nn::Tape &tape, nn::Tape::NodeId hg,
                                          nn::Tape::NodeId ht, double tau) {
  if (tau <= 0.0)
    throw ValueError("temperature must be positive");
  const nn::Tensor &G = tape.value(hg);
  const nn::Tensor &T = tape.value(ht);
  if (G.rank() != 2 || T.rank() != 2 || G.rows() != T.rows() || G.cols() != T.cols())
    throw ValueError("similarity_logits shape mismatch: " + G.shape_string() + " vs " +
                     T.shape_string());
  return tape.scale(tape.matmul(hg, tape.transpose(ht)), 1.0 / tau);
}

namespace detail {

// -(1/N) sum_i log softmax-row_i(i), stabilized by the per-row max shift
// (which cancels exactly, see row_max_detached).
inline nn::Tape::NodeId diagonal_cross_entropy(nn::Tape &tape, nn::Tape::NodeId logits) {
  auto shifted = tape.sub_bcast_col(logits, tape.row_max_detached(logits));
  auto exps = tape.exp(shifted);
  auto probs = tape.divide(tape.take_diag(exps), tape.sum_rows(exps));
  return tape.scale(tape.mean_all(tape.log(probs)), -1.0);
}

} // namespace detail

// The two directional losses and their average. Graph direction softmaxes
// over rows (each graph against all texts), text direction over columns.
inline LossNodes symmetric_info_nce_nodes(nn::Tape &tape, nn::Tape::NodeId logits) {
  LossNodes nodes;
  nodes.l_graph = detail::diagonal_cross_entropy(tape, logits);
  nodes.l_text = detail::diagonal_cross_entropy(tape, tape.transpose(logits));
  nodes.l = tape.scale(tape.add(nodes.l_graph, nodes.l_text), 0.5);
  return nodes;
}

// diagonal-argmax fractions; a tied argmax counts as a miss
inline std::pair<double, double> retrieval_accuracy(const nn::Tensor &hg, const nn::Tensor &ht) {
  if (hg.rank() != 2 || ht.rank() != 2 || hg.rows() != ht.rows() || hg.cols() != ht.cols())
    throw ValueError("retrieval_accuracy shape mismatch");
  std::size_t n = hg.rows();
  if (n == 0)
    return {0.0, 0.0};
  auto dot = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < hg.cols(); ++k)
      s += hg.at(i, k) * ht.at(j, k);
    return s;
  };
  std::size_t hits_g2t = 0;
  std::size_t hits_t2g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double own = dot(i, i);
    bool g2t_best = true;
    bool t2g_best = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i)
        continue;
      if (dot(i, j) >= own)
        g2t_best = false;
      if (dot(j, i) >= own)
        t2g_best = false;
    }
    hits_g2t += g2t_best ? 1 : 0;
    hits_t2g += t2g_best ? 1 : 0;
  }
  return {static_cast<double>(hits_g2t) / static_cast<double>(n),
          static_cast<double>(hits_t2g) / static_cast<double>(n)};
}

// Convenience evaluation over plain tensors (no training involved).
inline LossReport symmetric_info_nce(const nn::Tensor &hg, const nn::Tensor &ht, double tau) {
  nn::Tape tape;
  auto g = tape.input(hg);
  auto t = tape.input(ht);
  auto logits = similarity_logits(tape, g, t, tau);
  LossNodes nodes = symmetric_info_nce_nodes(tape, logits);
  LossReport report;
  report.l_graph = tape.value(nodes.l_graph).data[0];
  report.l_text = tape.value(nodes.l_text).data[0];
  report.l = tape.value(nodes.l).data[0];
  auto [g2t, t2g] = retrieval_accuracy(hg, ht);
  report.retrieval_g2t = g2t;
  report.retrieval_t2g = t2g;
  return report;
}

} // namespace molalign::align
