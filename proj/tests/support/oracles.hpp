#pragma once

// Independent reference computations the test suite checks the library
// against. These deliberately avoid the library's own numeric paths: the
// contrastive loss is enumerated without log-sum-exp stabilization, AUC is
// counted pair by pair, molecular weights come from a separate weight table
// applied to hand-written formulas.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "molalign/nn/tensor.hpp"

namespace testsupport {

// Mean over rows of -log softmax diagonal, both directions, no max-shift.
// Safe for the small magnitudes the tests feed it.
inline double info_nce_enumeration(const molalign::nn::Tensor &hg, const molalign::nn::Tensor &ht,
                                   double tau, double *l_graph_out = nullptr,
                                   double *l_text_out = nullptr) {
  std::size_t n = hg.rows();
  std::size_t d = hg.cols();
  auto sim = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      s += hg.at(i, k) * ht.at(j, k);
    return s / tau;
  };
  double l_graph = 0.0;
  double l_text = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double denom_g = 0.0;
    double denom_t = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      denom_g += std::exp(sim(i, j));
      denom_t += std::exp(sim(j, i));
    }
    l_graph += -std::log(std::exp(sim(i, i)) / denom_g);
    l_text += -std::log(std::exp(sim(i, i)) / denom_t);
  }
  l_graph /= static_cast<double>(n);
  l_text /= static_cast<double>(n);
  if (l_graph_out)
    *l_graph_out = l_graph;
  if (l_text_out)
    *l_text_out = l_text;
  return 0.5 * (l_graph + l_text);
}

// AUC as the Mann-Whitney pair count: over all (positive, negative) pairs,
// wins count 1 and ties count 1/2.
inline double auc_pair_count(const std::vector<double> &scores, const std::vector<int> &labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1)
      continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0)
        continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// Standard atomic weights, entered separately from the library's element
// table so weight regressions cannot hide.
inline double reference_weight(char element) {
  switch (element) {
  case 'H': return 1.008;
  case 'C': return 12.011;
  case 'N': return 14.007;
  case 'O': return 15.999;
  case 'S': return 32.06;
  default: return 0.0;
  }
}

struct FormulaEntry {
  const char *smiles;
  int c, h, n, o, s, cl;
};

// Twenty molecules with hand-written molecular formulas.
inline const std::vector<FormulaEntry> &formula_corpus() {
  static const std::vector<FormulaEntry> corpus = {
      {"C", 1, 4, 0, 0, 0, 0},                        // methane
      {"CC", 2, 6, 0, 0, 0, 0},                       // ethane
      {"CCO", 2, 6, 0, 1, 0, 0},                      // ethanol
      {"O", 0, 2, 0, 1, 0, 0},                        // water
      {"c1ccccc1", 6, 6, 0, 0, 0, 0},                 // benzene
      {"Cc1ccccc1", 7, 8, 0, 0, 0, 0},                // toluene
      {"CC(=O)Oc1ccccc1C(=O)O", 9, 8, 0, 4, 0, 0},    // aspirin
      {"Cn1cnc2c1c(=O)n(C)c(=O)n2C", 8, 10, 4, 2, 0, 0}, // caffeine
      {"CC(C)Cc1ccc(cc1)C(C)C(=O)O", 13, 18, 0, 2, 0, 0}, // ibuprofen
      {"CC(=O)O", 2, 4, 0, 2, 0, 0},                  // acetic acid
      {"OCC(O)CO", 3, 8, 0, 3, 0, 0},                 // glycerol
      {"c1ccncc1", 5, 5, 1, 0, 0, 0},                 // pyridine
      {"c1ccoc1", 4, 4, 0, 1, 0, 0},                  // furan
      {"c1ccsc1", 4, 4, 0, 0, 1, 0},                  // thiophene
      {"c1cc[nH]c1", 4, 5, 1, 0, 0, 0},               // pyrrole
      {"ClCCl", 1, 2, 0, 0, 0, 2},                    // dichloromethane
      {"Clc1ccccc1", 6, 5, 0, 0, 0, 1},               // chlorobenzene
      {"Nc1ccccc1", 6, 7, 1, 0, 0, 0},                // aniline
      {"Oc1ccccc1", 6, 6, 0, 1, 0, 0},                // phenol
      {"c1ccc2ccccc2c1", 10, 8, 0, 0, 0, 0},          // naphthalene
  };
  return corpus;
}

inline double formula_weight(const FormulaEntry &e) {
  return e.c * reference_weight('C') + e.h * reference_weight('H') + e.n * reference_weight('N') +
         e.o * reference_weight('O') + e.s * reference_weight('S') + e.cl * 35.45;
}

// Temporary directory that cleans up after itself; each instance gets a
// fresh path so parallel tests cannot collide.
class TempDir {
public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("molalign_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
             "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

// Deterministic synthetic molecule collection: 45 substituted variants of
// each of 10 ring cores, then acyclic chains. All strings are distinct and
// the recipe space covers 500 molecules.
inline std::vector<std::string> synthetic_molecules(std::size_t count) {
  static const char *cores[] = {"c1ccccc1", "c1ccncc1", "c1ccoc1", "c1ccsc1",
                                "C1CCCCC1", "C1CCNCC1", "C1CCOC1", "c1cc[nH]c1",
                                "c1ccc2ccccc2c1", "C1CCCC1"};
  static const char *tails[] = {"", "O", "N", "Cl", "C(=O)O"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string s;
    if (i < 450) {
      std::size_t chain = i % 9;
      std::size_t tail = (i / 9) % 5;
      std::size_t core = i / 45;
      s = cores[core];
      std::string sub = std::string(chain, 'C') + tails[tail];
      if (!sub.empty())
        s.insert(s.find('1') + 1, "(" + sub + ")");
    } else {
      // acyclic: chain length 2..., five terminal groups
      std::size_t j = i - 450;
      std::string chain_part(2 + j / 5, 'C');
      s = chain_part + tails[j % 5];
    }
    out.push_back(s);
  }
  return out;
}

} // namespace testsupport
