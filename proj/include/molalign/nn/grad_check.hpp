#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "molalign/nn/param_store.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

// Central finite differences against analytic gradients. The function must
// populate gradients in the store for its current values (zeroing first is
// the function's job if it accumulates). At most max_coords coordinates are
// probed, spread evenly across each trainable tensor.
inline GradCheckResult grad_check(ParameterStore &store,
                                  const std::function<double()> &loss_with_grads,
                                  double eps = 1e-5, std::size_t max_coords = 200) {
  store.zero_grads();
  double base = loss_with_grads();
  if (!std::isfinite(base))
    throw NumericError("grad_check: non-finite loss at base point");

  // freeze the analytic gradients before we start nudging values
  std::map<std::string, Tensor> analytic;
  std::size_t total_coords = 0;
  for (const auto &[name, e] : store.entries()) {
    if (!e.trainable)
      continue;
    analytic[name] = e.grad;
    total_coords += e.value.data.size();
  }
  if (total_coords == 0)
    throw ValueError("grad_check: no trainable coordinates");

  GradCheckResult result;
  std::size_t budget_per_tensor =
      std::max<std::size_t>(1, max_coords / std::max<std::size_t>(1, analytic.size()));

  for (auto &[name, grads] : analytic) {
    ParameterStore::Entry &e = store.entry(name);
    std::size_t n = e.value.data.size();
    std::size_t stride = std::max<std::size_t>(1, n / budget_per_tensor);
    for (std::size_t i = 0; i < n; i += stride) {
      double saved = e.value.data[i];
      e.value.data[i] = saved + eps;
      store.zero_grads();
      double plus = loss_with_grads();
      e.value.data[i] = saved - eps;
      store.zero_grads();
      double minus = loss_with_grads();
      e.value.data[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericError("grad_check: non-finite loss at perturbed point of " + name);
      double numeric = (plus - minus) / (2.0 * eps);
      double a = grads.data[i];
      double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++result.coordinates_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
      }
      if (result.coordinates_checked >= max_coords)
        break;
    }
    if (result.coordinates_checked >= max_coords)
      break;
  }
  // leave the store in a clean state with gradients for the unperturbed point
  store.zero_grads();
  loss_with_grads();
  return result;
}

} // namespace molalign::nn
