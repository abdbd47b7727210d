#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "molalign/align/loss.hpp"
#include "molalign/enc/gin.hpp"
#include "molalign/enc/projection.hpp"
#include "molalign/enc/text_encoder.hpp"
#include "molalign/nn/optim.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::align {

struct AlignmentConfig {
  double temperature = 0.1;
  int batch_size = 32;
  int epochs = 100;
  int warmup_epochs = 10;
  double base_lr = 0.005;
  bool normalize = true;
  nn::LrDecay decay = nn::LrDecay::kCosine;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct ModelConfigs {
  enc::GinConfig gin;
  enc::TextEncoderConfig text;
  enc::ProjectionConfig proj;
};

// one molecule paired with its tokenized description
struct AlignmentPair {
  chem::MolecularGraph graph;
  std::vector<std::int64_t> tokens;
};

struct HistoryRow {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_g2t = 0.0;
  double val_t2g = 0.0;
};

struct PretrainResult {
  std::map<std::string, nn::Tensor> best_snapshot; // every entry, frozen included
  std::vector<HistoryRow> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

inline void init_alignment_model(nn::ParameterStore &store, const ModelConfigs &cfg,
                                 nn::Rng &rng) {
  enc::init_gin_params(store, cfg.gin, rng);
  enc::init_text_params(store, cfg.text, rng);
  enc::init_projection_params(store, cfg.gin.hidden_dim, cfg.text.output_dim, cfg.proj, rng);
}

namespace detail {

struct BatchForward {
  nn::Tape::NodeId joint_graph;
  nn::Tape::NodeId joint_text;
  LossNodes loss;
};

inline BatchForward forward_batch(nn::Tape &tape, nn::ParameterStore &store,
                                  const ModelConfigs &model, const AlignmentConfig &cfg,
                                  const std::vector<AlignmentPair> &pairs,
                                  const std::vector<std::size_t> &indices) {
  std::vector<chem::MolecularGraph> graphs;
  std::vector<std::vector<std::int64_t>> token_batch;
  graphs.reserve(indices.size());
  token_batch.reserve(indices.size());
  for (std::size_t idx : indices) {
    graphs.push_back(pairs[idx].graph);
    token_batch.push_back(pairs[idx].tokens);
  }
  enc::ProjectionConfig proj = model.proj;
  proj.normalize = cfg.normalize;
  auto hg = enc::gin_forward(tape, store, model.gin, enc::batch_graphs(graphs));
  auto ht = enc::text_forward(tape, store, model.text, token_batch);
  BatchForward out;
  out.joint_graph = enc::project(tape, store, proj, enc::ProjectionSide::kGraph, hg);
  out.joint_text = enc::project(tape, store, proj, enc::ProjectionSide::kText, ht);
  auto logits = similarity_logits(tape, out.joint_graph, out.joint_text, cfg.temperature);
  out.loss = symmetric_info_nce_nodes(tape, logits);
  return out;
}

// loss and retrieval over a full index set, chunked; no gradients
inline LossReport evaluate_indices(nn::ParameterStore &store, const ModelConfigs &model,
                                   const AlignmentConfig &cfg,
                                   const std::vector<AlignmentPair> &pairs,
                                   const std::vector<std::size_t> &indices) {
  LossReport total;
  std::size_t counted = 0;
  std::size_t chunk = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < indices.size(); begin += chunk) {
    std::size_t end = std::min(indices.size(), begin + chunk);
    std::vector<std::size_t> slice(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                   indices.begin() + static_cast<std::ptrdiff_t>(end));
    nn::Tape tape;
    BatchForward fwd = forward_batch(tape, store, model, cfg, pairs, slice);
    auto [g2t, t2g] = retrieval_accuracy(tape.value(fwd.joint_graph), tape.value(fwd.joint_text));
    double w = static_cast<double>(slice.size());
    total.l_graph += tape.value(fwd.loss.l_graph).data[0] * w;
    total.l_text += tape.value(fwd.loss.l_text).data[0] * w;
    total.l += tape.value(fwd.loss.l).data[0] * w;
    total.retrieval_g2t += g2t * w;
    total.retrieval_t2g += t2g * w;
    counted += slice.size();
  }
  if (counted > 0) {
    double inv = 1.0 / static_cast<double>(counted);
    total.l_graph *= inv;
    total.l_text *= inv;
    total.l *= inv;
    total.retrieval_g2t *= inv;
    total.retrieval_t2g *= inv;
  }
  return total;
}

inline std::map<std::string, nn::Tensor> snapshot_store(const nn::ParameterStore &store) {
  std::map<std::string, nn::Tensor> snap;
  for (const auto &[name, e] : store.entries())
    snap[name] = e.value;
  return snap;
}

} // namespace detail

inline void restore_snapshot(nn::ParameterStore &store,
                             const std::map<std::string, nn::Tensor> &snapshot) {
  for (const auto &[name, tensor] : snapshot) {
    nn::ParameterStore::Entry &e = store.entry(name);
    if (!e.value.same_shape(tensor))
      throw ValueError("snapshot shape mismatch for parameter: " + name);
    e.value = tensor;
  }
}

// Contrastive pretraining loop: seeded shuffle, fixed validation slice,
// warm-up schedule, snapshot at the lowest validation loss.
inline PretrainResult pretrain(const std::vector<AlignmentPair> &pairs,
                               const AlignmentConfig &cfg, const ModelConfigs &model,
                               nn::ParameterStore &store) {
  if (pairs.size() < 2)
    throw ValueError("pretraining needs at least 2 pairs, got " + std::to_string(pairs.size()));

  nn::Rng rng(cfg.seed);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  nn::shuffle(order, rng);

  std::size_t val_size = static_cast<std::size_t>(
      static_cast<double>(pairs.size()) * cfg.val_fraction);
  if (val_size == 0)
    val_size = 1;
  if (val_size >= pairs.size())
    val_size = pairs.size() - 1;
  std::vector<std::size_t> val_indices(order.begin(),
                                       order.begin() + static_cast<std::ptrdiff_t>(val_size));
  std::vector<std::size_t> train_indices(order.begin() + static_cast<std::ptrdiff_t>(val_size),
                                         order.end());

  std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), train_indices.size());

  nn::LrSchedule schedule;
  schedule.base_lr = cfg.base_lr;
  schedule.warmup_epochs = cfg.warmup_epochs;
  schedule.total_epochs = cfg.epochs;
  schedule.decay = cfg.decay;

  nn::Adam adam;
  PretrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = nn::lr_at(schedule, epoch);
    nn::shuffle(train_indices, rng);
    double train_loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin + batch <= train_indices.size(); begin += batch) {
      std::vector<std::size_t> slice(
          train_indices.begin() + static_cast<std::ptrdiff_t>(begin),
          train_indices.begin() + static_cast<std::ptrdiff_t>(begin + batch));
      nn::Tape tape;
      try {
        detail::BatchForward fwd = detail::forward_batch(tape, store, model, cfg, pairs, slice);
        train_loss_sum += tape.value(fwd.loss.l).data[0];
        tape.backward(fwd.loss.l);
      } catch (const NumericError &e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + ": " + e.what());
      }
      adam.step(store, lr);
      ++batches;
    }

    LossReport val = detail::evaluate_indices(store, model, cfg, pairs, val_indices);
    HistoryRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_loss = batches > 0 ? train_loss_sum / static_cast<double>(batches) : 0.0;
    row.val_loss = val.l;
    row.val_g2t = val.retrieval_g2t;
    row.val_t2g = val.retrieval_t2g;
    result.history.push_back(row);

    if (result.best_epoch < 0 || val.l < result.best_val_loss) {
      result.best_val_loss = val.l;
      result.best_epoch = epoch;
      result.best_snapshot = detail::snapshot_store(store);
    }
  }
  return result;
}

} // namespace molalign::align
