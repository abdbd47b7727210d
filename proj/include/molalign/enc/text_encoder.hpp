#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "molalign/nn/param_store.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/nn/tape.hpp"
#include "molalign/util/sha256.hpp"

namespace molalign::enc {

// Hashed-bucket embedding body (frozen) with a trainable linear head. The
// body stands in for a pretrained sentence encoder: random but fixed, so
// distinct token distributions map to distinct pooled vectors while only
// the head learns.
struct TextEncoderConfig {
  int vocab_buckets = 32768; // power of two
  int embed_dim = 128;
  int output_dim = 256;
};

inline std::vector<std::int64_t> tokenize(std::string_view text, int vocab_buckets) {
  std::vector<std::int64_t> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) {
      std::string token(text.substr(start, i - start));
      for (char &c : token)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      ids.push_back(static_cast<std::int64_t>(molalign::util::fnv1a64(token) %
                                              static_cast<std::uint64_t>(vocab_buckets)));
    }
  }
  return ids;
}

inline void init_text_params(nn::ParameterStore &store, const TextEncoderConfig &cfg,
                             nn::Rng &rng) {
  store.add("text/body",
            nn::xavier_uniform(static_cast<std::size_t>(cfg.vocab_buckets),
                               static_cast<std::size_t>(cfg.embed_dim), rng),
            /*trainable=*/false);
  store.add("text/head/w", nn::xavier_uniform(static_cast<std::size_t>(cfg.embed_dim),
                                              static_cast<std::size_t>(cfg.output_dim), rng));
  store.add("text/head/b", nn::Tensor(static_cast<std::size_t>(cfg.output_dim)));
}

// Mean of body rows per text. Pure input preparation: the body is frozen,
// so pooling happens outside the tape.
inline nn::Tensor pool_tokens(const nn::ParameterStore &store, const TextEncoderConfig &cfg,
                              const std::vector<std::vector<std::int64_t>> &token_batch) {
  const nn::Tensor &body = store.value("text/body");
  nn::Tensor pooled(token_batch.size(), static_cast<std::size_t>(cfg.embed_dim));
  for (std::size_t b = 0; b < token_batch.size(); ++b) {
    const auto &tokens = token_batch[b];
    if (tokens.empty())
      continue; // zero vector for degenerate text
    for (std::int64_t id : tokens)
      for (std::size_t j = 0; j < body.cols(); ++j)
        pooled.at(b, j) += body.at(static_cast<std::size_t>(id), j);
    for (std::size_t j = 0; j < pooled.cols(); ++j)
      pooled.at(b, j) /= static_cast<double>(tokens.size());
  }
  return pooled;
}

// pooled [B, embed_dim] -> relu(pooled*W + b), shape [B, output_dim]
inline nn::Tape::NodeId text_forward(nn::Tape &tape, nn::ParameterStore &store,
                                     const TextEncoderConfig &cfg,
                                     const std::vector<std::vector<std::int64_t>> &token_batch) {
  auto pooled = tape.input(pool_tokens(store, cfg, token_batch));
  auto w = tape.param(store, "text/head/w");
  auto b = tape.param(store, "text/head/b");
  return tape.relu(tape.add_bias(tape.matmul(pooled, w), b));
}

inline nn::Tensor encode_text(nn::ParameterStore &store, const TextEncoderConfig &cfg,
                              std::string_view text) {
  nn::Tape tape;
  auto out = text_forward(tape, store, cfg, {tokenize(text, cfg.vocab_buckets)});
  return tape.value(out);
}

} // namespace molalign::enc
