#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "molalign/chem/featurize.hpp"
#include "molalign/chem/smiles.hpp"
#include "molalign/enc/gin.hpp"
#include "molalign/enc/projection.hpp"
#include "molalign/enc/text_encoder.hpp"
#include "molalign/nn/rng.hpp"
#include "molalign/nn/tape.hpp"
#include "molalign/util/errors.hpp"

using namespace molalign;

namespace {

enc::GinConfig small_gin() {
  enc::GinConfig cfg;
  cfg.layers = 3;
  cfg.hidden_dim = 16;
  return cfg;
}

nn::ParameterStore make_gin_store(const enc::GinConfig &cfg, std::uint64_t seed) {
  nn::ParameterStore store;
  nn::Rng rng(seed);
  enc::init_gin_params(store, cfg, rng);
  return store;
}

chem::MolecularGraph graph_of(const char *smiles) {
  return chem::featurize(chem::parse_smiles(smiles));
}

} // namespace

TEST_CASE("gin output shape follows the batch", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 1);
  std::vector<chem::MolecularGraph> graphs = {graph_of("CCO"), graph_of("c1ccccc1"),
                                              graph_of("C")};
  nn::Tape tape;
  auto pooled = enc::gin_forward(tape, store, cfg, enc::batch_graphs(graphs));
  const nn::Tensor &out = tape.value(pooled);
  CHECK(out.rows() == 3);
  CHECK(out.cols() == 16);
}

TEST_CASE("single-node graphs with no edges encode cleanly", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 2);
  nn::Tensor out = enc::encode_graph(store, cfg, graph_of("C"));
  CHECK(out.rows() == 1);
  CHECK(out.cols() == 16);
  for (double v : out.data)
    REQUIRE(std::isfinite(v));
}

TEST_CASE("batched encoding equals one-at-a-time encoding", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 3);
  std::vector<const char *> smiles = {"CCO", "c1ccncc1", "CC(=O)O", "C1CC1"};
  std::vector<chem::MolecularGraph> graphs;
  for (const char *s : smiles)
    graphs.push_back(graph_of(s));

  nn::Tape tape;
  auto pooled = enc::gin_forward(tape, store, cfg, enc::batch_graphs(graphs));
  const nn::Tensor &batched = tape.value(pooled);

  for (std::size_t i = 0; i < graphs.size(); ++i) {
    nn::Tensor solo = enc::encode_graph(store, cfg, graphs[i]);
    for (std::size_t j = 0; j < batched.cols(); ++j)
      REQUIRE(batched.at(i, j) == Catch::Approx(solo.at(0, j)).margin(1e-12));
  }
}

TEST_CASE("isomorphic graphs encode identically", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 4);
  // same molecules written with different atom orders
  const std::vector<std::pair<const char *, const char *>> pairs = {
      {"c1ccncc1", "n1ccccc1"},
      {"OCC", "CCO"},
      {"c1ccc2ccccc2c1", "c2ccc1ccccc1c2"},
      {"C1CCNCC1", "N1CCCCC1"},
  };
  for (const auto &[lhs, rhs] : pairs) {
    INFO(lhs << " vs " << rhs);
    nn::Tensor a = enc::encode_graph(store, cfg, graph_of(lhs));
    nn::Tensor b = enc::encode_graph(store, cfg, graph_of(rhs));
    for (std::size_t j = 0; j < a.cols(); ++j)
      REQUIRE(a.at(0, j) == Catch::Approx(b.at(0, j)).margin(1e-12));
  }
}

TEST_CASE("distinct molecules separate in embedding space", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 5);
  nn::Tensor a = enc::encode_graph(store, cfg, graph_of("CCO"));
  nn::Tensor b = enc::encode_graph(store, cfg, graph_of("CCN"));
  double dist = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    dist += std::abs(a.at(0, j) - b.at(0, j));
  CHECK(dist > 1e-6);
}

TEST_CASE("sum readout scales mean readout by node count", "[enc]") {
  enc::GinConfig mean_cfg = small_gin();
  enc::GinConfig sum_cfg = small_gin();
  sum_cfg.sum_readout = true;
  nn::ParameterStore store = make_gin_store(mean_cfg, 6);
  chem::MolecularGraph g = graph_of("CCO");
  nn::Tensor mean_out = enc::encode_graph(store, mean_cfg, g);
  nn::Tensor sum_out = enc::encode_graph(store, sum_cfg, g);
  for (std::size_t j = 0; j < mean_out.cols(); ++j)
    REQUIRE(sum_out.at(0, j) == Catch::Approx(3.0 * mean_out.at(0, j)).margin(1e-12));
}

TEST_CASE("edge features see bond type and mirrored direction", "[enc]") {
  enc::GinConfig cfg = small_gin();
  nn::ParameterStore store = make_gin_store(cfg, 7);
  // single vs double bond between the same atoms must differ
  nn::Tensor single = enc::encode_graph(store, cfg, graph_of("CC"));
  nn::Tensor dbl = enc::encode_graph(store, cfg, graph_of("C=C"));
  double dist = 0.0;
  for (std::size_t j = 0; j < single.cols(); ++j)
    dist += std::abs(single.at(0, j) - dbl.at(0, j));
  CHECK(dist > 1e-6);

  // direction mirroring: cis and trans written with swapped slashes give the
  // same unordered edge set read from either end
  chem::MolecularGraph trans = graph_of("F/C=C/F");
  REQUIRE(trans.num_edges() == 6);
  for (int e = 0; e < trans.num_edges(); e += 2) {
    int fwd = trans.edge_direction[static_cast<std::size_t>(e)];
    int rev = trans.edge_direction[static_cast<std::size_t>(e + 1)];
    if (fwd == 0)
      CHECK(rev == 0);
    else
      CHECK(rev == (fwd == 1 ? 2 : 1));
  }
}

TEST_CASE("atomic numbers outside the vocabulary are rejected", "[enc]") {
  enc::GinConfig cfg = small_gin();
  cfg.atomic_vocab = 10; // pretend only ten elements exist
  nn::ParameterStore store = make_gin_store(cfg, 8);
  CHECK_THROWS_AS(enc::encode_graph(store, cfg, graph_of("ClCCl")), ValueError);
}

TEST_CASE("tokenizer lowercases and splits alphanumeric runs", "[enc]") {
  std::vector<std::int64_t> a = enc::tokenize("Hello, hello WORLD", 1024);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == a[1]);
  CHECK(a[0] != a[2]);
  for (std::int64_t id : a) {
    REQUIRE(id >= 0);
    REQUIRE(id < 1024);
  }
  CHECK(enc::tokenize("", 1024).empty());
  CHECK(enc::tokenize("  ...  ", 1024).empty());
  // numbers embedded in text are their own tokens
  CHECK(enc::tokenize("weight 46.069", 1024).size() == 3);
}

TEST_CASE("token pooling averages body rows", "[enc]") {
  enc::TextEncoderConfig cfg;
  cfg.vocab_buckets = 4;
  cfg.embed_dim = 2;
  cfg.output_dim = 3;
  nn::ParameterStore store;
  nn::Rng rng(9);
  enc::init_text_params(store, cfg, rng);
  nn::Tensor &body = store.value("text/body");
  body.data = {1, 2, 3, 4, 5, 6, 7, 8}; // bucket b holds row (2b+1, 2b+2)

  nn::Tensor pooled = enc::pool_tokens(store, cfg, {{0, 2}, {3}, {}});
  CHECK(pooled.at(0, 0) == 3.0); // mean of rows 0 and 2
  CHECK(pooled.at(0, 1) == 4.0);
  CHECK(pooled.at(1, 0) == 7.0);
  CHECK(pooled.at(1, 1) == 8.0);
  CHECK(pooled.at(2, 0) == 0.0); // empty token list pools to zero
  CHECK(pooled.at(2, 1) == 0.0);
}

TEST_CASE("text encoding is deterministic and shaped by config", "[enc]") {
  enc::TextEncoderConfig cfg;
  cfg.vocab_buckets = 256;
  cfg.embed_dim = 8;
  cfg.output_dim = 5;
  nn::ParameterStore s1, s2;
  nn::Rng r1(10), r2(10);
  enc::init_text_params(s1, cfg, r1);
  enc::init_text_params(s2, cfg, r2);
  nn::Tensor a = enc::encode_text(s1, cfg, "a molecule with two rings");
  nn::Tensor b = enc::encode_text(s2, cfg, "a molecule with two rings");
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 5);
  CHECK(a.data == b.data);
  // relu output is non-negative
  for (double v : a.data)
    REQUIRE(v >= 0.0);
}

TEST_CASE("hashed body stays frozen while the head trains", "[enc]") {
  enc::TextEncoderConfig cfg;
  cfg.vocab_buckets = 64;
  cfg.embed_dim = 4;
  cfg.output_dim = 4;
  nn::ParameterStore store;
  nn::Rng rng(11);
  enc::init_text_params(store, cfg, rng);
  CHECK_FALSE(store.entry("text/body").trainable);
  CHECK(store.entry("text/head/w").trainable);
  CHECK(store.entry("text/head/b").trainable);
}

TEST_CASE("projection maps both sides into the joint space", "[enc]") {
  enc::ProjectionConfig cfg;
  cfg.joint_dim = 6;
  nn::ParameterStore store;
  nn::Rng rng(12);
  enc::init_projection_params(store, 16, 5, cfg, rng);

  nn::Tensor graph_in(3, 16);
  nn::Tensor text_in(3, 5);
  nn::Rng fill(13);
  for (double &v : graph_in.data)
    v = fill.uniform(-1, 1);
  for (double &v : text_in.data)
    v = fill.uniform(-1, 1);

  nn::Tape tape;
  auto g = enc::project(tape, store, cfg, enc::ProjectionSide::kGraph, tape.input(graph_in));
  auto t = enc::project(tape, store, cfg, enc::ProjectionSide::kText, tape.input(text_in));
  const nn::Tensor &G = tape.value(g);
  const nn::Tensor &T = tape.value(t);
  CHECK(G.cols() == 6);
  CHECK(T.cols() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    double ng = 0.0, nt = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      ng += G.at(i, j) * G.at(i, j);
      nt += T.at(i, j) * T.at(i, j);
    }
    CHECK(ng == Catch::Approx(1.0).margin(1e-12));
    CHECK(nt == Catch::Approx(1.0).margin(1e-12));
  }

  enc::ProjectionConfig raw = cfg;
  raw.normalize = false;
  nn::Tape tape2;
  auto g2 = enc::project(tape2, store, raw, enc::ProjectionSide::kGraph, tape2.input(graph_in));
  const nn::Tensor &G2 = tape2.value(g2);
  double norm = 0.0;
  for (std::size_t j = 0; j < 6; ++j)
    norm += G2.at(0, j) * G2.at(0, j);
  CHECK(norm != Catch::Approx(1.0).margin(1e-9));
}
