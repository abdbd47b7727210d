#pragma once

#include <map>
#include <string>
#include <vector>

#include "molalign/nn/tensor.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::nn {

// Named parameters with gradient accumulators. std::map keeps iteration
// order stable, which the checkpoint writer and grad check rely on.
class ParameterStore {
public:
  struct Entry {
    Tensor value;
    Tensor grad;
    bool trainable = true;
  };

  Tensor &add(const std::string &name, Tensor value, bool trainable = true) {
    if (entries_.count(name))
      throw ValueError("duplicate parameter name: " + name);
    Entry e;
    e.grad = zeros_like(value);
    e.value = std::move(value);
    e.trainable = trainable;
    auto [it, ok] = entries_.emplace(name, std::move(e));
    (void)ok;
    return it->second.value;
  }

  bool contains(const std::string &name) const { return entries_.count(name) > 0; }

  Entry &entry(const std::string &name) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ValueError("unknown parameter: " + name);
    return it->second;
  }

  const Entry &entry(const std::string &name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw ValueError("unknown parameter: " + name);
    return it->second;
  }

  Tensor &value(const std::string &name) { return entry(name).value; }
  const Tensor &value(const std::string &name) const { return entry(name).value; }
  Tensor &grad(const std::string &name) { return entry(name).grad; }

  void zero_grads() {
    for (auto &[name, e] : entries_)
      e.grad.data.assign(e.grad.data.size(), 0.0);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto &[name, e] : entries_)
      out.push_back(name);
    return out;
  }

  std::map<std::string, Entry> &entries() { return entries_; }
  const std::map<std::string, Entry> &entries() const { return entries_; }

private:
  std::map<std::string, Entry> entries_;
};

} // namespace molalign::nn
