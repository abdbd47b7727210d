#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "molalign/util/errors.hpp"

namespace molalign::task {

// Rank-based Mann-Whitney form: average ranks over the pooled scores, ties
// share their rank, AUC = (rank sum of positives - offset) / (n_pos*n_neg).
inline double roc_auc(const std::vector<double> &scores, const std::vector<int> &labels) {
  if (scores.size() != labels.size())
    throw ValueError("roc_auc length mismatch");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1)
      throw ValueError("roc_auc labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ValueError("roc_auc needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]])
      ++j;
    // 1-based ranks i+1 .. j averaged across the tie run
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1)
        rank_sum_pos += avg_rank;
    i = j;
  }
  double np = static_cast<double>(n_pos);
  double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double rmse(const std::vector<double> &pred, const std::vector<double> &truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ValueError("rmse needs equal non-empty lengths");
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - truth[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

inline double mae(const std::vector<double> &pred, const std::vector<double> &truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw ValueError("mae needs equal non-empty lengths");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    total += std::abs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

struct SeedSummary {
  double mean = 0.0;
  double stddev = 0.0; // population form over the seed runs
};

inline SeedSummary summarize_runs(const std::vector<double> &values) {
  if (values.empty())
    throw ValueError("summarize_runs needs at least one value");
  SeedSummary s;
  for (double v : values)
    s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values)
    var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

} // namespace molalign::task
