#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "molalign/chem/scaffold.hpp"
#include "molalign/chem/smiles.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::task {

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

// Scaffold split: whole scaffold groups go to one partition, so no scaffold
// crosses the train/valid/test boundary. Groups are placed largest first
// into the first partition still below its real-valued target, which always
// exists because the targets sum to the record count.
inline SplitAssignment scaffold_split(const std::vector<std::string> &smiles,
                                      const SplitRatios &ratios, std::uint64_t seed = 0) {
  (void)seed; // assignment is fully deterministic; parameter kept for interface stability
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0)
    throw ValueError("split ratios must be non-negative");
  double ratio_sum = ratios.train + ratios.valid + ratios.test;
  if (ratio_sum <= 0)
    throw ValueError("split ratios must sum to a positive value");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    try {
      chem::Molecule mol = chem::parse_smiles(smiles[i]);
      groups[chem::scaffold_key(mol)].push_back(i);
    } catch (const Error &e) {
      throw ParseError("record " + std::to_string(i) + ": " + e.what());
    }
  }

  std::vector<std::pair<std::string, std::vector<std::size_t>>> ordered(groups.begin(),
                                                                        groups.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto &a, const auto &b) {
    if (a.second.size() != b.second.size())
      return a.second.size() > b.second.size();
    return a.first < b.first;
  });

  double n = static_cast<double>(smiles.size());
  double targets[3] = {n * ratios.train / ratio_sum, n * ratios.valid / ratio_sum,
                       n * ratios.test / ratio_sum};
  SplitAssignment split;
  std::vector<std::size_t> *partitions[3] = {&split.train, &split.valid, &split.test};
  for (auto &[key, members] : ordered) {
    int chosen = 0;
    for (int p = 0; p < 3; ++p) {
      if (static_cast<double>(partitions[p]->size()) < targets[p]) {
        chosen = p;
        break;
      }
    }
    for (std::size_t idx : members)
      partitions[chosen]->push_back(idx);
  }
  for (auto *p : partitions)
    std::sort(p->begin(), p->end());
  return split;
}

} // namespace molalign::task
