#pragma once

#include <cstddef>

#include "molalign/nn/param_store.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/nn/tape.hpp"

namespace molalign::enc {

// Linear maps from each encoder's space into the shared joint space, with
// optional L2 normalization (the CLIP convention; off = raw dot products).
struct ProjectionConfig {
  int joint_dim = 128;
  bool normalize = true;
};

inline void init_projection_params(nn::ParameterStore &store, int graph_dim, int text_dim,
                                   const ProjectionConfig &cfg, nn::Rng &rng) {
  store.add("proj/graph", nn::xavier_uniform(static_cast<std::size_t>(graph_dim),
                                             static_cast<std::size_t>(cfg.joint_dim), rng));
  store.add("proj/text", nn::xavier_uniform(static_cast<std::size_t>(text_dim),
                                            static_cast<std::size_t>(cfg.joint_dim), rng));
}

enum class ProjectionSide { kGraph, kText };

inline nn::Tape::NodeId project(nn::Tape &tape, nn::ParameterStore &store,
                                const ProjectionConfig &cfg, ProjectionSide side,
                                nn::Tape::NodeId encoded) {
  auto w = tape.param(store, side == ProjectionSide::kGraph ? "proj/graph" : "proj/text");
  auto joint = tape.matmul(encoded, w);
  return cfg.normalize ? tape.l2_normalize_rows(joint) : joint;
}

} // namespace molalign::enc
