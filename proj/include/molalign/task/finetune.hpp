#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "molalign/chem/featurize.hpp"
#include "molalign/chem/smiles.hpp"
#include "molalign/enc/gin.hpp"
#include "molalign/nn/optim.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/task/dataset.hpp"
#include "molalign/task/metrics.hpp"
#include "molalign/task/split.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::task {

struct FinetuneConfig {
  std::vector<double> lr_candidates{0.0001, 0.0005};
  int max_epochs = 100;
  int batch_size = 32;
  int patience = 10; // epochs without validation improvement before stopping
  int head_hidden = 256;
  std::uint64_t seed = 0;
};

// Everything evaluation needs besides the parameters themselves.
struct FinetuneModel {
  enc::GinConfig gin;
  TaskType task_type = TaskType::kClassification;
  int n_tasks = 1;
  // regression labels are standardized by train statistics; identity for
  // classification
  std::vector<double> label_mean;
  std::vector<double> label_std;
};

struct EvalResult {
  MetricKind metric = MetricKind::kAuc;
  std::vector<double> per_task;  // indexed by task, NaN where skipped
  std::vector<int> skipped_tasks;
  double average = 0.0;
};

struct LrTrial {
  double lr = 0.0;
  double val_metric = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
};

struct FinetuneOutcome {
  std::map<std::string, nn::Tensor> best_params;
  FinetuneModel model;
  MetricKind metric = MetricKind::kAuc;
  double chosen_lr = 0.0;
  double best_val_metric = 0.0;
  std::vector<LrTrial> trials;
};

namespace detail {

inline void init_head_params(nn::ParameterStore &store, const FinetuneModel &model,
                             int head_hidden, nn::Rng &rng) {
  std::size_t d1 = static_cast<std::size_t>(model.gin.hidden_dim);
  std::size_t h = static_cast<std::size_t>(head_hidden);
  std::size_t out = static_cast<std::size_t>(model.n_tasks);
  store.add("head/w1", nn::xavier_uniform(d1, h, rng));
  store.add("head/b1", nn::Tensor(h));
  store.add("head/w2", nn::xavier_uniform(h, out, rng));
  store.add("head/b2", nn::Tensor(out));
}

inline nn::Tape::NodeId head_forward(nn::Tape &tape, nn::ParameterStore &store,
                                     nn::Tape::NodeId pooled) {
  auto w1 = tape.param(store, "head/w1");
  auto b1 = tape.param(store, "head/b1");
  auto w2 = tape.param(store, "head/w2");
  auto b2 = tape.param(store, "head/b2");
  auto hidden = tape.relu(tape.add_bias(tape.matmul(pooled, w1), b1));
  return tape.add_bias(tape.matmul(hidden, w2), b2);
}

// raw head outputs for a record subset: logits for classification, still
// standardized for regression
inline nn::Tensor predict_raw(nn::ParameterStore &store, const FinetuneModel &model,
                              const std::vector<chem::MolecularGraph> &graphs,
                              const std::vector<std::size_t> &indices, int batch_size) {
  nn::Tensor out(indices.size(), static_cast<std::size_t>(model.n_tasks));
  std::size_t chunk = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t begin = 0; begin < indices.size(); begin += chunk) {
    std::size_t end = std::min(indices.size(), begin + chunk);
    std::vector<chem::MolecularGraph> slice;
    slice.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k)
      slice.push_back(graphs[indices[k]]);
    nn::Tape tape;
    auto pooled = enc::gin_forward(tape, store, model.gin, enc::batch_graphs(slice));
    auto scores = head_forward(tape, store, pooled);
    const nn::Tensor &vals = tape.value(scores);
    for (std::size_t r = 0; r < end - begin; ++r)
      for (std::size_t c = 0; c < vals.cols(); ++c)
        out.at(begin + r, c) = vals.at(r, c);
  }
  return out;
}

inline double destandardize(const FinetuneModel &model, double value, int t) {
  if (model.task_type != TaskType::kRegression)
    return value;
  return value * model.label_std[static_cast<std::size_t>(t)] +
         model.label_mean[static_cast<std::size_t>(t)];
}

} // namespace detail

// Per-task metric over a record subset, skipping classification tasks whose
// subset holds a single class; the average is over the surviving tasks.
inline EvalResult evaluate(nn::ParameterStore &store, const FinetuneModel &model,
                           const MoleculeDataset &ds,
                           const std::vector<chem::MolecularGraph> &graphs,
                           const std::vector<std::size_t> &indices, MetricKind metric,
                           int batch_size = 32) {
  EvalResult result;
  result.metric = metric;
  nn::Tensor raw = detail::predict_raw(store, model, graphs, indices, batch_size);
  double sum = 0.0;
  int counted = 0;
  for (int t = 0; t < model.n_tasks; ++t) {
    std::vector<double> scores;
    std::vector<int> cls_labels;
    std::vector<double> reg_pred;
    std::vector<double> reg_truth;
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const DatasetRecord &rec = ds.records[indices[r]];
      if (!rec.mask[static_cast<std::size_t>(t)])
        continue;
      double score = raw.at(r, static_cast<std::size_t>(t));
      if (model.task_type == TaskType::kClassification) {
        scores.push_back(score);
        cls_labels.push_back(rec.labels[static_cast<std::size_t>(t)] > 0.5 ? 1 : 0);
      } else {
        reg_pred.push_back(detail::destandardize(model, score, t));
        reg_truth.push_back(rec.labels[static_cast<std::size_t>(t)]);
      }
    }
    double value;
    if (model.task_type == TaskType::kClassification) {
      bool has_pos = std::count(cls_labels.begin(), cls_labels.end(), 1) > 0;
      bool has_neg = std::count(cls_labels.begin(), cls_labels.end(), 0) > 0;
      if (cls_labels.empty() || !has_pos || !has_neg) {
        result.per_task.push_back(std::nan(""));
        result.skipped_tasks.push_back(t);
        continue;
      }
      value = roc_auc(scores, cls_labels);
    } else {
      if (reg_pred.empty()) {
        result.per_task.push_back(std::nan(""));
        result.skipped_tasks.push_back(t);
        continue;
      }
      value = metric == MetricKind::kMae ? mae(reg_pred, reg_truth) : rmse(reg_pred, reg_truth);
    }
    result.per_task.push_back(value);
    sum += value;
    ++counted;
  }
  if (counted == 0)
    throw ValueError("evaluation impossible: every task was skipped on this subset");
  result.average = sum / counted;
  return result;
}

namespace detail {

inline double train_one_batch(nn::ParameterStore &store, const FinetuneModel &model,
                              const MoleculeDataset &ds,
                              const std::vector<chem::MolecularGraph> &graphs,
                              const std::vector<std::size_t> &batch, nn::Adam &adam, double lr) {
  std::vector<chem::MolecularGraph> slice;
  slice.reserve(batch.size());
  nn::Tensor targets(batch.size(), static_cast<std::size_t>(model.n_tasks));
  nn::Tensor mask(batch.size(), static_cast<std::size_t>(model.n_tasks));
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const DatasetRecord &rec = ds.records[batch[r]];
    slice.push_back(graphs[batch[r]]);
    for (int t = 0; t < model.n_tasks; ++t) {
      double label = rec.labels[static_cast<std::size_t>(t)];
      if (model.task_type == TaskType::kRegression) {
        label = (label - model.label_mean[static_cast<std::size_t>(t)]) /
                model.label_std[static_cast<std::size_t>(t)];
      }
      targets.at(r, static_cast<std::size_t>(t)) = label;
      mask.at(r, static_cast<std::size_t>(t)) = rec.mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
    }
  }
  nn::Tape tape;
  auto pooled = enc::gin_forward(tape, store, model.gin, enc::batch_graphs(slice));
  auto scores = head_forward(tape, store, pooled);
  nn::Tape::NodeId loss;
  if (model.task_type == TaskType::kClassification) {
    loss = tape.bce_with_logits_masked(scores, targets, mask);
  } else {
    double count = 0.0;
    for (double m : mask.data)
      count += m;
    auto diff = tape.mul(tape.sub(scores, tape.input(targets)), tape.input(mask));
    loss = tape.scale(tape.sum_all(tape.mul(diff, diff)), 1.0 / count);
  }
  double value = tape.value(loss).data[0];
  tape.backward(loss);
  adam.step(store, lr);
  return value;
}

} // namespace detail

// Grid over the lr candidates; each trial restarts from the pretrained
// encoder with a freshly seeded head, early-stops on the validation metric,
// and the best trial's snapshot wins.
inline FinetuneOutcome finetune(const std::map<std::string, nn::Tensor> &pretrained,
                                const enc::GinConfig &gin_cfg, const MoleculeDataset &ds,
                                const SplitAssignment &split, const FinetuneConfig &cfg) {
  validate_dataset(ds);
  if (cfg.lr_candidates.empty())
    throw ValueError("finetune needs at least one learning-rate candidate");
  if (split.train.empty() || split.valid.empty())
    throw ValueError("finetune needs non-empty train and valid partitions");

  std::vector<chem::MolecularGraph> graphs;
  graphs.reserve(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    try {
      graphs.push_back(chem::featurize(chem::parse_smiles(ds.records[i].smiles)));
    } catch (const Error &e) {
      throw ParseError("record " + std::to_string(i) + ": " + e.what());
    }
  }

  FinetuneModel model;
  model.gin = gin_cfg;
  model.task_type = ds.task_type;
  model.n_tasks = ds.n_tasks;
  model.label_mean.assign(static_cast<std::size_t>(ds.n_tasks), 0.0);
  model.label_std.assign(static_cast<std::size_t>(ds.n_tasks), 1.0);
  if (ds.task_type == TaskType::kRegression) {
    for (int t = 0; t < ds.n_tasks; ++t) {
      double sum = 0.0;
      double count = 0.0;
      for (std::size_t idx : split.train) {
        const DatasetRecord &rec = ds.records[idx];
        if (rec.mask[static_cast<std::size_t>(t)]) {
          sum += rec.labels[static_cast<std::size_t>(t)];
          count += 1.0;
        }
      }
      if (count == 0.0)
        throw ValueError("task " + std::to_string(t) + " has no labels in the train split");
      double mean = sum / count;
      double var = 0.0;
      for (std::size_t idx : split.train) {
        const DatasetRecord &rec = ds.records[idx];
        if (rec.mask[static_cast<std::size_t>(t)]) {
          double d = rec.labels[static_cast<std::size_t>(t)] - mean;
          var += d * d;
        }
      }
      double sd = std::sqrt(var / count);
      model.label_mean[static_cast<std::size_t>(t)] = mean;
      model.label_std[static_cast<std::size_t>(t)] = sd > 0.0 ? sd : 1.0;
    }
  } else {
    for (int t = 0; t < ds.n_tasks; ++t) {
      bool any = false;
      for (std::size_t idx : split.train)
        if (ds.records[idx].mask[static_cast<std::size_t>(t)])
          any = true;
      if (!any)
        throw ValueError("task " + std::to_string(t) + " has no labels in the train split");
    }
  }

  MetricKind metric = pick_metric(ds);
  bool higher_better = metric_higher_better(metric);

  FinetuneOutcome outcome;
  outcome.model = model;
  outcome.metric = metric;

  for (std::size_t li = 0; li < cfg.lr_candidates.size(); ++li) {
    double lr = cfg.lr_candidates[li];
    nn::Rng rng = nn::Rng(cfg.seed).fork(li + 1);

    nn::ParameterStore store;
    bool have_encoder = false;
    for (const auto &[name, tensor] : pretrained) {
      if (name.rfind("gin/", 0) == 0) {
        store.add(name, tensor);
        have_encoder = true;
      }
    }
    if (!have_encoder)
      enc::init_gin_params(store, model.gin, rng);
    detail::init_head_params(store, model, cfg.head_hidden, rng);

    nn::Adam adam;
    std::vector<std::size_t> train_order = split.train;
    LrTrial trial;
    trial.lr = lr;
    std::map<std::string, nn::Tensor> trial_best;
    int stale_epochs = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
      nn::shuffle(train_order, rng);
      std::size_t chunk = static_cast<std::size_t>(std::max(1, cfg.batch_size));
      for (std::size_t begin = 0; begin < train_order.size(); begin += chunk) {
        std::size_t end = std::min(train_order.size(), begin + chunk);
        std::vector<std::size_t> batch(train_order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       train_order.begin() + static_cast<std::ptrdiff_t>(end));
        detail::train_one_batch(store, model, ds, graphs, batch, adam, lr);
      }
      EvalResult val = evaluate(store, model, ds, graphs, split.valid, metric, cfg.batch_size);
      trial.epochs_run = epoch + 1;
      bool improved = trial.best_epoch < 0 ||
                      (higher_better ? val.average > trial.val_metric
                                     : val.average < trial.val_metric);
      if (improved) {
        trial.val_metric = val.average;
        trial.best_epoch = epoch;
        trial_best.clear();
        for (const auto &[name, e] : store.entries())
          trial_best[name] = e.value;
        stale_epochs = 0;
      } else if (++stale_epochs >= cfg.patience) {
        break;
      }
    }
    outcome.trials.push_back(trial);
    bool take = outcome.best_params.empty() ||
                (higher_better ? trial.val_metric > outcome.best_val_metric
                               : trial.val_metric < outcome.best_val_metric);
    if (take) {
      outcome.best_val_metric = trial.val_metric;
      outcome.chosen_lr = lr;
      outcome.best_params = std::move(trial_best);
    }
  }
  return outcome;
}

} // namespace molalign::task
