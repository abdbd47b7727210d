#pragma once

#include <cmath>
#include <map>
#include <string>

#include "molalign/nn/param_store.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::nn {

// Bias-corrected Adam over the trainable entries of a ParameterStore.
class Adam {
public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  void step(ParameterStore &store, double lr) {
    ++step_count_;
    double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count_));
    for (auto &[name, e] : store.entries()) {
      if (!e.trainable)
        continue;
      Moments &m = moments_[name];
      if (m.first.data.empty()) {
        m.first = zeros_like(e.value);
        m.second = zeros_like(e.value);
      }
      if (!m.first.same_shape(e.value))
        throw ValueError("Adam moment shape drifted for parameter: " + name);
      for (std::size_t i = 0; i < e.value.data.size(); ++i) {
        double g = e.grad.data[i];
        m.first.data[i] = kBeta1 * m.first.data[i] + (1.0 - kBeta1) * g;
        m.second.data[i] = kBeta2 * m.second.data[i] + (1.0 - kBeta2) * g * g;
        double mhat = m.first.data[i] / bc1;
        double vhat = m.second.data[i] / bc2;
        e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + kEpsilon);
      }
    }
    store.zero_grads();
  }

  long step_count() const { return step_count_; }

private:
  struct Moments {
    Tensor first;
    Tensor second;
  };
  std::map<std::string, Moments> moments_;
  long step_count_ = 0;
};

enum class LrDecay { kConstant, kCosine };

struct LrSchedule {
  double base_lr = 0.005;
  int warmup_epochs = 10;
  int total_epochs = 100;
  LrDecay decay = LrDecay::kCosine;
};

// Linear ramp to base_lr over the warm-up epochs, then constant or cosine
// decay to zero at total_epochs.
inline double lr_at(const LrSchedule &schedule, int epoch) {
  if (schedule.warmup_epochs < 0 || schedule.warmup_epochs > schedule.total_epochs)
    throw ValueError("invalid schedule: warmup outside [0, total]");
  if (epoch < 0 || epoch >= schedule.total_epochs)
    throw ValueError("epoch " + std::to_string(epoch) + " outside schedule of " +
                     std::to_string(schedule.total_epochs) + " epochs");
  if (epoch < schedule.warmup_epochs)
    return schedule.base_lr * static_cast<double>(epoch + 1) /
           static_cast<double>(schedule.warmup_epochs);
  if (schedule.decay == LrDecay::kConstant)
    return schedule.base_lr;
  double span = static_cast<double>(schedule.total_epochs - schedule.warmup_epochs);
  double progress = static_cast<double>(epoch - schedule.warmup_epochs) / span;
  return schedule.base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

} // namespace molalign::nn
