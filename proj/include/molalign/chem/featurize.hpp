#pragma once

#include <cstdint>
#include <vector>

#include "molalign/chem/molecule.hpp"

namespace molalign::chem {

// Graph view of a molecule as index features, ready for embedding lookups.
// Every bond appears as two directed edges; wedge direction is mirrored on
// the reversed edge so both views describe the same geometry.
struct MolecularGraph {
  int num_nodes = 0;
  // per node: [atomic_number - 1, chirality index]
  std::vector<std::int64_t> node_atomic;   // 0-based element index
  std::vector<std::int64_t> node_chirality; // 0 none, 1 @@, 2 @
  // per directed edge
  std::vector<std::int64_t> edge_src;
  std::vector<std::int64_t> edge_dst;
  std::vector<std::int64_t> edge_bond_type; // 0 single, 1 double, 2 triple, 3 aromatic
  std::vector<std::int64_t> edge_direction; // 0 none, 1 up, 2 down

  int num_edges() const { return static_cast<int>(edge_src.size()); }
};

namespace detail {

inline std::int64_t chirality_index(Chirality c) {
  switch (c) {
  case Chirality::kNone: return 0;
  case Chirality::kClockwise: return 1;
  case Chirality::kCounterclockwise: return 2;
  }
  return 0;
}

inline std::int64_t bond_type_index(BondOrder o) {
  switch (o) {
  case BondOrder::kSingle: return 0;
  case BondOrder::kDouble: return 1;
  case BondOrder::kTriple: return 2;
  case BondOrder::kAromatic: return 3;
  }
  return 0;
}

inline std::int64_t direction_index(BondDirection d) {
  switch (d) {
  case BondDirection::kNone: return 0;
  case BondDirection::kUp: return 1;
  case BondDirection::kDown: return 2;
  }
  return 0;
}

} // namespace detail

inline MolecularGraph featurize(const Molecule &mol) {
  MolecularGraph g;
  g.num_nodes = static_cast<int>(mol.atoms.size());
  g.node_atomic.reserve(mol.atoms.size());
  g.node_chirality.reserve(mol.atoms.size());
  for (const Atom &atom : mol.atoms) {
    g.node_atomic.push_back(atom.atomic_number - 1);
    g.node_chirality.push_back(detail::chirality_index(atom.chirality));
  }
  g.edge_src.reserve(mol.bonds.size() * 2);
  g.edge_dst.reserve(mol.bonds.size() * 2);
  g.edge_bond_type.reserve(mol.bonds.size() * 2);
  g.edge_direction.reserve(mol.bonds.size() * 2);
  for (const Bond &bond : mol.bonds) {
    std::int64_t type = detail::bond_type_index(bond.order);
    std::int64_t dir = detail::direction_index(bond.direction);
    std::int64_t mirrored = dir == 0 ? 0 : (dir == 1 ? 2 : 1);
    g.edge_src.push_back(bond.a);
    g.edge_dst.push_back(bond.b);
    g.edge_bond_type.push_back(type);
    g.edge_direction.push_back(dir);
    g.edge_src.push_back(bond.b);
    g.edge_dst.push_back(bond.a);
    g.edge_bond_type.push_back(type);
    g.edge_direction.push_back(mirrored);
  }
  return g;
}

} // namespace molalign::chem
