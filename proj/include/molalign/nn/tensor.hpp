#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "molalign/nn/rng.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::nn {

// Dense row-major float64 tensor. Everything the encoders need is rank 1
// or 2; shape is kept general but ops validate the ranks they support.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : shape{r, c}, data(r * c, 0.0) {}
  explicit Tensor(std::size_t n) : shape{n}, data(n, 0.0) {}

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

  double &at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Tensor &other) const { return shape == other.shape; }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i)
        s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline Tensor zeros_like(const Tensor &t) {
  Tensor out;
  out.shape = t.shape;
  out.data.assign(t.data.size(), 0.0);
  return out;
}

inline void check_finite(const Tensor &t, const char *context) {
  for (double v : t.data)
    if (!std::isfinite(v))
      throw NumericError(std::string("non-finite value in ") + context);
}

// Glorot-style uniform init over fan_in/fan_out.
inline Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng &rng) {
  Tensor t(rows, cols);
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double &v : t.data)
    v = rng.uniform(-limit, limit);
  return t;
}

} // namespace molalign::nn
