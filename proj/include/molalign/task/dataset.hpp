#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "molalign/util/errors.hpp"

namespace molalign::task {

enum class TaskType { kClassification, kRegression };

struct DatasetRecord {
  std::string smiles;
  std::vector<double> labels; // length n_tasks
  std::vector<int> mask;      // 1 = label present
};

struct MoleculeDataset {
  std::string name;
  TaskType task_type = TaskType::kClassification;
  int n_tasks = 1;
  std::vector<DatasetRecord> records;
};

inline const char *task_type_name(TaskType t) {
  return t == TaskType::kClassification ? "classification" : "regression";
}

inline TaskType task_type_from_name(const std::string &name) {
  if (name == "classification")
    return TaskType::kClassification;
  if (name == "regression")
    return TaskType::kRegression;
  throw ValueError("unknown task type '" + name + "' (expected classification or regression)");
}

inline void validate_dataset(const MoleculeDataset &ds) {
  if (ds.n_tasks < 1)
    throw ValueError("dataset needs at least one task");
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const DatasetRecord &r = ds.records[i];
    if (static_cast<int>(r.labels.size()) != ds.n_tasks ||
        static_cast<int>(r.mask.size()) != ds.n_tasks)
      throw ValueError("record " + std::to_string(i) + " label vector length != n_tasks");
    bool any = false;
    for (int m : r.mask)
      any = any || m != 0;
    if (!any)
      throw ValueError("record " + std::to_string(i) + " has no unmasked label");
  }
}

enum class MetricKind { kAuc, kRmse, kMae };

inline const char *metric_name(MetricKind m) {
  switch (m) {
  case MetricKind::kAuc: return "roc_auc";
  case MetricKind::kRmse: return "rmse";
  case MetricKind::kMae: return "mae";
  }
  return "?";
}

// higher is better only for AUC
inline bool metric_higher_better(MetricKind m) { return m == MetricKind::kAuc; }

// Classification scores with ROC-AUC; regression with RMSE, except QM7-style
// quantum sets which report MAE.
inline MetricKind pick_metric(const MoleculeDataset &ds) {
  if (ds.task_type == TaskType::kClassification)
    return MetricKind::kAuc;
  std::string lower = ds.name;
  for (char &c : lower)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "qm7")
    return MetricKind::kMae;
  return MetricKind::kRmse;
}

} // namespace molalign::task
