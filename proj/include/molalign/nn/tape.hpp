#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "molalign/nn/param_store.hpp"
#include "molalign/nn/tensor.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::nn {

// Reverse-mode tape over eagerly evaluated ops. Values are computed at op
// creation; backward() walks the nodes in reverse and accumulates into
// gradients, then flushes leaf gradients into their bound ParameterStore
// entries (trainable ones only).
class Tape {
public:
  using NodeId = int;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  NodeId input(Tensor value) { return make_node(std::move(value), "input", {}); }

  NodeId param(ParameterStore &store, const std::string &name) {
    NodeId id = make_node(store.value(name), "param", {});
    nodes_[static_cast<std::size_t>(id)].bound_store = &store;
    nodes_[static_cast<std::size_t>(id)].bound_name = name;
    return id;
  }

  const Tensor &value(NodeId id) const { return node(id).value; }
  const Tensor &grad(NodeId id) const { return node(id).grad; }

  NodeId matmul(NodeId a, NodeId b) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(b).value;
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows())
      throw ValueError("matmul shape mismatch: " + A.shape_string() + " x " + B.shape_string());
    Tensor C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t k = 0; k < A.cols(); ++k) {
        double aik = A.at(i, k);
        if (aik == 0.0)
          continue;
        for (std::size_t j = 0; j < B.cols(); ++j)
          C.at(i, j) += aik * B.at(k, j);
      }
    NodeId out = make_node(std::move(C), "matmul", {a, b});
    set_backward(out, [a, b, out](Tape &t) {
      const Tensor &A = t.node(a).value;
      const Tensor &B = t.node(b).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(b).grad;
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < B.cols(); ++j) {
          double g = dC.at(i, j);
          if (g == 0.0)
            continue;
          for (std::size_t k = 0; k < A.cols(); ++k) {
            dA.at(i, k) += g * B.at(k, j);
            dB.at(k, j) += g * A.at(i, k);
          }
        }
    });
    return out;
  }

  NodeId transpose(NodeId a) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2)
      throw ValueError("transpose needs rank 2, got " + A.shape_string());
    Tensor T(A.cols(), A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j)
        T.at(j, i) = A.at(i, j);
    NodeId out = make_node(std::move(T), "transpose", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &dT = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dA.rows(); ++i)
        for (std::size_t j = 0; j < dA.cols(); ++j)
          dA.at(i, j) += dT.at(j, i);
    });
    return out;
  }

  NodeId add(NodeId a, NodeId b) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(b).value;
    if (!A.same_shape(B))
      throw ValueError("add shape mismatch: " + A.shape_string() + " vs " + B.shape_string());
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i)
      C.data[i] += B.data[i];
    NodeId out = make_node(std::move(C), "add", {a, b});
    set_backward(out, [a, b, out](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(b).grad;
      for (std::size_t i = 0; i < dC.size(); ++i) {
        dA.data[i] += dC.data[i];
        dB.data[i] += dC.data[i];
      }
    });
    return out;
  }

  // rows of a plus a rank-1 bias
  NodeId add_bias(NodeId a, NodeId bias) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(bias).value;
    if (A.rank() != 2 || B.rank() != 1 || A.cols() != B.shape[0])
      throw ValueError("add_bias shape mismatch: " + A.shape_string() + " + " + B.shape_string());
    Tensor C = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j)
        C.at(i, j) += B.data[j];
    NodeId out = make_node(std::move(C), "add_bias", {a, bias});
    set_backward(out, [a, bias, out](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(bias).grad;
      for (std::size_t i = 0; i < dC.rows(); ++i)
        for (std::size_t j = 0; j < dC.cols(); ++j) {
          dA.at(i, j) += dC.at(i, j);
          dB.data[j] += dC.at(i, j);
        }
    });
    return out;
  }

  NodeId scale(NodeId a, double factor) {
    Tensor C = node(a).value;
    for (double &v : C.data)
      v *= factor;
    NodeId out = make_node(std::move(C), "scale", {a});
    set_backward(out, [a, out, factor](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dC.size(); ++i)
        dA.data[i] += factor * dC.data[i];
    });
    return out;
  }

  NodeId sub(NodeId a, NodeId b) { return add(a, scale(b, -1.0)); }

  NodeId mul(NodeId a, NodeId b) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(b).value;
    if (!A.same_shape(B))
      throw ValueError("mul shape mismatch: " + A.shape_string() + " vs " + B.shape_string());
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i)
      C.data[i] *= B.data[i];
    NodeId out = make_node(std::move(C), "mul", {a, b});
    set_backward(out, [a, b, out](Tape &t) {
      const Tensor &A = t.node(a).value;
      const Tensor &B = t.node(b).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(b).grad;
      for (std::size_t i = 0; i < dC.size(); ++i) {
        dA.data[i] += dC.data[i] * B.data[i];
        dB.data[i] += dC.data[i] * A.data[i];
      }
    });
    return out;
  }

  NodeId divide(NodeId a, NodeId b) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(b).value;
    if (!A.same_shape(B))
      throw ValueError("divide shape mismatch: " + A.shape_string() + " vs " + B.shape_string());
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i)
      C.data[i] /= B.data[i];
    NodeId out = make_node(std::move(C), "divide", {a, b});
    set_backward(out, [a, b, out](Tape &t) {
      const Tensor &A = t.node(a).value;
      const Tensor &B = t.node(b).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(b).grad;
      for (std::size_t i = 0; i < dC.size(); ++i) {
        dA.data[i] += dC.data[i] / B.data[i];
        dB.data[i] -= dC.data[i] * A.data[i] / (B.data[i] * B.data[i]);
      }
    });
    return out;
  }

  // subgradient at exactly 0 is 0
  NodeId relu(NodeId a) {
    Tensor C = node(a).value;
    for (double &v : C.data)
      v = v > 0.0 ? v : 0.0;
    NodeId out = make_node(std::move(C), "relu", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &A = t.node(a).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dC.size(); ++i)
        if (A.data[i] > 0.0)
          dA.data[i] += dC.data[i];
    });
    return out;
  }

  NodeId exp(NodeId a) {
    Tensor C = node(a).value;
    for (double &v : C.data)
      v = std::exp(v);
    NodeId out = make_node(std::move(C), "exp", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &C = t.node(out).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dC.size(); ++i)
        dA.data[i] += dC.data[i] * C.data[i];
    });
    return out;
  }

  NodeId log(NodeId a) {
    Tensor C = node(a).value;
    for (double &v : C.data)
      v = std::log(v);
    NodeId out = make_node(std::move(C), "log", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &A = t.node(a).value;
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dC.size(); ++i)
        dA.data[i] += dC.data[i] / A.data[i];
    });
    return out;
  }

  NodeId sum_all(NodeId a) {
    double total = 0.0;
    for (double v : node(a).value.data)
      total += v;
    Tensor C(static_cast<std::size_t>(1));
    C.data[0] = total;
    NodeId out = make_node(std::move(C), "sum_all", {a});
    set_backward(out, [a, out](Tape &t) {
      double g = t.node(out).grad.data[0];
      for (double &v : t.node(a).grad.data)
        v += g;
    });
    return out;
  }

  NodeId mean_all(NodeId a) {
    std::size_t n = node(a).value.size();
    if (n == 0)
      throw ValueError("mean_all over empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
  }

  // [m,n] -> [m,1]
  NodeId sum_rows(NodeId a) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2)
      throw ValueError("sum_rows needs rank 2, got " + A.shape_string());
    Tensor C(A.rows(), 1);
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j)
        C.at(i, 0) += A.at(i, j);
    NodeId out = make_node(std::move(C), "sum_rows", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dA.rows(); ++i)
        for (std::size_t j = 0; j < dA.cols(); ++j)
          dA.at(i, j) += dC.at(i, 0);
    });
    return out;
  }

  // [m,n] - [m,1] broadcast across columns
  NodeId sub_bcast_col(NodeId a, NodeId col) {
    const Tensor &A = node(a).value;
    const Tensor &B = node(col).value;
    if (A.rank() != 2 || B.rank() != 2 || B.cols() != 1 || A.rows() != B.rows())
      throw ValueError("sub_bcast_col shape mismatch: " + A.shape_string() + " - " +
                       B.shape_string());
    Tensor C = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j)
        C.at(i, j) -= B.at(i, 0);
    NodeId out = make_node(std::move(C), "sub_bcast_col", {a, col});
    set_backward(out, [a, col, out](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      Tensor &dB = t.node(col).grad;
      for (std::size_t i = 0; i < dC.rows(); ++i)
        for (std::size_t j = 0; j < dC.cols(); ++j) {
          dA.at(i, j) += dC.at(i, j);
          dB.at(i, 0) -= dC.at(i, j);
        }
    });
    return out;
  }

  // Per-row max as a detached constant. Used only to stabilize softmax-style
  // expressions, where the shift cancels out of the final value exactly, so
  // passing no gradient through it is exact rather than an approximation.
  NodeId row_max_detached(NodeId a) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2 || A.cols() == 0)
      throw ValueError("row_max_detached needs non-empty rank 2, got " + A.shape_string());
    Tensor C(A.rows(), 1);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      double m = A.at(i, 0);
      for (std::size_t j = 1; j < A.cols(); ++j)
        m = std::max(m, A.at(i, j));
      C.at(i, 0) = m;
    }
    return make_node(std::move(C), "row_max_detached", {a});
  }

  // [n,n] -> [n,1]
  NodeId take_diag(NodeId a) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2 || A.rows() != A.cols())
      throw ValueError("take_diag needs a square matrix, got " + A.shape_string());
    Tensor C(A.rows(), 1);
    for (std::size_t i = 0; i < A.rows(); ++i)
      C.at(i, 0) = A.at(i, i);
    NodeId out = make_node(std::move(C), "take_diag", {a});
    set_backward(out, [a, out](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < dA.rows(); ++i)
        dA.at(i, i) += dC.at(i, 0);
    });
    return out;
  }

  // rows scaled to unit L2 norm; zero rows pass through unchanged
  NodeId l2_normalize_rows(NodeId a) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2)
      throw ValueError("l2_normalize_rows needs rank 2, got " + A.shape_string());
    Tensor C = A;
    std::vector<double> norms(A.rows(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      double sq = 0.0;
      for (std::size_t j = 0; j < A.cols(); ++j)
        sq += A.at(i, j) * A.at(i, j);
      norms[i] = std::sqrt(sq);
      if (norms[i] > 0.0)
        for (std::size_t j = 0; j < A.cols(); ++j)
          C.at(i, j) /= norms[i];
    }
    NodeId out = make_node(std::move(C), "l2_normalize_rows", {a});
    set_backward(out, [a, out, norms](Tape &t) {
      const Tensor &Y = t.node(out).value;
      const Tensor &dY = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < Y.rows(); ++i) {
        if (norms[i] <= 0.0)
          continue;
        double dot = 0.0;
        for (std::size_t j = 0; j < Y.cols(); ++j)
          dot += Y.at(i, j) * dY.at(i, j);
        for (std::size_t j = 0; j < Y.cols(); ++j)
          dA.at(i, j) += (dY.at(i, j) - Y.at(i, j) * dot) / norms[i];
      }
    });
    return out;
  }

  // index-select rows of a [v,d] table
  NodeId gather_rows(NodeId a, std::vector<std::int64_t> indices) {
    const Tensor &A = node(a).value;
    if (A.rank() != 2)
      throw ValueError("gather_rows needs rank 2, got " + A.shape_string());
    for (std::int64_t idx : indices)
      if (idx < 0 || idx >= static_cast<std::int64_t>(A.rows()))
        throw ValueError("gather_rows index " + std::to_string(idx) + " out of range for " +
                         A.shape_string());
    Tensor C(indices.size(), A.cols());
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j)
        C.at(i, j) = A.at(static_cast<std::size_t>(indices[i]), j);
    NodeId out = make_node(std::move(C), "gather_rows", {a});
    set_backward(out, [a, out, indices](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dA = t.node(a).grad;
      for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = 0; j < dC.cols(); ++j)
          dA.at(static_cast<std::size_t>(indices[i]), j) += dC.at(i, j);
    });
    return out;
  }

  // rows of src added into destination rows; the neighbor-aggregation core
  NodeId scatter_add_rows(NodeId src, const std::vector<std::int64_t> &dst_index,
                          std::size_t num_rows) {
    const Tensor &S = node(src).value;
    if (S.rank() != 2 || dst_index.size() != S.rows())
      throw ValueError("scatter_add_rows index count mismatch for " + S.shape_string());
    for (std::int64_t idx : dst_index)
      if (idx < 0 || idx >= static_cast<std::int64_t>(num_rows))
        throw ValueError("scatter_add_rows destination " + std::to_string(idx) + " out of range");
    Tensor C(num_rows, S.cols());
    for (std::size_t i = 0; i < S.rows(); ++i)
      for (std::size_t j = 0; j < S.cols(); ++j)
        C.at(static_cast<std::size_t>(dst_index[i]), j) += S.at(i, j);
    NodeId out = make_node(std::move(C), "scatter_add_rows", {src});
    std::vector<std::int64_t> idx_copy = dst_index;
    set_backward(out, [src, out, idx_copy](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dS = t.node(src).grad;
      for (std::size_t i = 0; i < idx_copy.size(); ++i)
        for (std::size_t j = 0; j < dC.cols(); ++j)
          dS.at(i, j) += dC.at(static_cast<std::size_t>(idx_copy[i]), j);
    });
    return out;
  }

  // mean of src rows per segment; segments with no members yield zero rows
  NodeId segment_mean(NodeId src, const std::vector<std::int64_t> &segment_ids,
                      std::size_t num_segments) {
    const Tensor &S = node(src).value;
    if (S.rank() != 2 || segment_ids.size() != S.rows())
      throw ValueError("segment_mean index count mismatch for " + S.shape_string());
    std::vector<double> counts(num_segments, 0.0);
    for (std::int64_t id : segment_ids) {
      if (id < 0 || id >= static_cast<std::int64_t>(num_segments))
        throw ValueError("segment_mean segment " + std::to_string(id) + " out of range");
      counts[static_cast<std::size_t>(id)] += 1.0;
    }
    Tensor C(num_segments, S.cols());
    for (std::size_t i = 0; i < S.rows(); ++i) {
      std::size_t seg = static_cast<std::size_t>(segment_ids[i]);
      for (std::size_t j = 0; j < S.cols(); ++j)
        C.at(seg, j) += S.at(i, j) / counts[seg];
    }
    NodeId out = make_node(std::move(C), "segment_mean", {src});
    std::vector<std::int64_t> ids_copy = segment_ids;
    set_backward(out, [src, out, ids_copy, counts](Tape &t) {
      const Tensor &dC = t.node(out).grad;
      Tensor &dS = t.node(src).grad;
      for (std::size_t i = 0; i < ids_copy.size(); ++i) {
        std::size_t seg = static_cast<std::size_t>(ids_copy[i]);
        for (std::size_t j = 0; j < dC.cols(); ++j)
          dS.at(i, j) += dC.at(seg, j) / counts[seg];
      }
    });
    return out;
  }

  // Stable binary cross-entropy over logits with a 0/1 mask; returns the
  // mean over unmasked entries. Fused because the piecewise-stable form is
  // awkward to compose from the elementwise primitives.
  NodeId bce_with_logits_masked(NodeId logits, const Tensor &targets, const Tensor &mask) {
    const Tensor &Z = node(logits).value;
    if (!Z.same_shape(targets) || !Z.same_shape(mask))
      throw ValueError("bce_with_logits_masked shape mismatch");
    double count = 0.0;
    for (double m : mask.data)
      count += m;
    if (count <= 0.0)
      throw ValueError("bce_with_logits_masked: mask selects no entries");
    double total = 0.0;
    for (std::size_t i = 0; i < Z.size(); ++i) {
      if (mask.data[i] == 0.0)
        continue;
      double z = Z.data[i];
      double y = targets.data[i];
      total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    Tensor C(static_cast<std::size_t>(1));
    C.data[0] = total / count;
    NodeId out = make_node(std::move(C), "bce_with_logits_masked", {logits});
    Tensor targets_copy = targets;
    Tensor mask_copy = mask;
    set_backward(out, [logits, out, targets_copy, mask_copy, count](Tape &t) {
      double g = t.node(out).grad.data[0];
      const Tensor &Z = t.node(logits).value;
      Tensor &dZ = t.node(logits).grad;
      for (std::size_t i = 0; i < Z.size(); ++i) {
        if (mask_copy.data[i] == 0.0)
          continue;
        double sigma = 1.0 / (1.0 + std::exp(-Z.data[i]));
        dZ.data[i] += g * mask_copy.data[i] * (sigma - targets_copy.data[i]) / count;
      }
    });
    return out;
  }

  // Runs reverse accumulation from a scalar loss node, then flushes leaf
  // gradients into their bound stores (trainable entries only).
  void backward(NodeId loss) {
    Node &last = node(loss);
    if (last.value.size() != 1)
      throw ValueError("backward needs a scalar loss, got " + last.value.shape_string());
    check_finite(last.value, "loss");
    last.grad.data[0] = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      Node &n = nodes_[static_cast<std::size_t>(id)];
      if (n.backprop)
        n.backprop(*this);
    }
    for (Node &n : nodes_) {
      if (!n.bound_store)
        continue;
      ParameterStore::Entry &e = n.bound_store->entry(n.bound_name);
      if (!e.trainable)
        continue;
      check_finite(n.grad, "parameter gradient");
      for (std::size_t i = 0; i < e.grad.data.size(); ++i)
        e.grad.data[i] += n.grad.data[i];
    }
  }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    const char *op = "";
    std::function<void(Tape &)> backprop;
    ParameterStore *bound_store = nullptr;
    std::string bound_name;
  };

  std::vector<Node> nodes_;

  Node &node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node &node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  NodeId make_node(Tensor value, const char *op, std::initializer_list<NodeId> parents) {
    (void)parents;
    check_finite(value, op);
    Node n;
    n.grad = zeros_like(value);
    n.value = std::move(value);
    n.op = op;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void set_backward(NodeId id, std::function<void(Tape &)> fn) {
    node(id).backprop = std::move(fn);
  }
};

} // namespace molalign::nn
