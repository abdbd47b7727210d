#pragma once

#include <string>
#include <vector>

#include "molalign/chem/molecule.hpp"

namespace molalign::dsm {

// Wildman-Crippen atom-contribution logP. Each heavy atom gets a typed
// contribution from element, aromaticity and neighbor pattern; hydrogens
// contribute through their attached heavy atom. Untypeable atoms fall back
// to the per-element wildcard class, elements outside the published table
// contribute zero; the sum never aborts.

struct CrippenAssignment {
  const char *label; // e.g. "C18"
  double value;
};

namespace detail {

struct NeighborView {
  // one entry per bond incident to the atom
  std::vector<int> atoms;
  std::vector<chem::BondOrder> orders;
};

inline NeighborView neighbors_of(const chem::Molecule &mol, int idx) {
  NeighborView view;
  for (const chem::Bond &bond : mol.bonds) {
    if (bond.a == idx) {
      view.atoms.push_back(bond.b);
      view.orders.push_back(bond.order);
    } else if (bond.b == idx) {
      view.atoms.push_back(bond.a);
      view.orders.push_back(bond.order);
    }
  }
  return view;
}

inline bool is_halogen(int z) { return z == 9 || z == 17 || z == 35 || z == 53; }

// Standard heteroatoms the published C3/C4 classes recognize.
inline bool is_common_hetero(int z) {
  return z == 7 || z == 8 || z == 15 || z == 16 || is_halogen(z);
}

inline CrippenAssignment type_carbon(const chem::Molecule &mol, int idx, const NeighborView &nb) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  int heavy_degree = static_cast<int>(nb.atoms.size());

  if (atom.aromatic) {
    // Locate the one exocyclic attachment, if any.
    int substituent = -1;
    int aromatic_bonds = 0;
    bool exo_double = false;
    for (std::size_t k = 0; k < nb.atoms.size(); ++k) {
      const chem::Atom &other = mol.atoms[static_cast<std::size_t>(nb.atoms[k])];
      if (nb.orders[k] == chem::BondOrder::kAromatic && other.aromatic) {
        ++aromatic_bonds;
      } else if (nb.orders[k] == chem::BondOrder::kDouble) {
        exo_double = true;
      } else {
        substituent = nb.atoms[k];
      }
    }
    if (exo_double)
      return {"C25", -0.8186};
    if (substituent >= 0) {
      const chem::Atom &sub = mol.atoms[static_cast<std::size_t>(substituent)];
      if (sub.aromatic)
        return {"C20", 0.2713};
      switch (sub.atomic_number) {
      case 9: return {"C14", 0.0};
      case 17: return {"C15", 0.245};
      case 35: return {"C16", 0.198};
      case 53: return {"C17", 0.0};
      case 6: return {"C21", 0.136};
      case 7: return {"C22", 0.4619};
      case 8: return {"C23", 0.5437};
      case 16: return {"C24", 0.1893};
      default: return {"C13", -0.5443};
      }
    }
    if (aromatic_bonds >= 3)
      return {"C19", 0.2955};
    return {"C18", 0.1581};
  }

  bool has_double = false;
  bool has_triple = false;
  bool double_to_hetero = false;
  bool double_to_aromatic = false;
  for (std::size_t k = 0; k < nb.atoms.size(); ++k) {
    const chem::Atom &other = mol.atoms[static_cast<std::size_t>(nb.atoms[k])];
    if (nb.orders[k] == chem::BondOrder::kTriple)
      has_triple = true;
    if (nb.orders[k] == chem::BondOrder::kDouble) {
      has_double = true;
      if (other.atomic_number != 6)
        double_to_hetero = true;
      else if (other.aromatic)
        double_to_aromatic = true;
    }
  }
  if (has_triple)
    return {"C7", 0.0017};
  if (has_double) {
    if (double_to_hetero)
      return {"C5", -0.2783};
    bool any_aromatic_neighbor = double_to_aromatic;
    for (int n : nb.atoms)
      if (mol.atoms[static_cast<std::size_t>(n)].aromatic)
        any_aromatic_neighbor = true;
    return any_aromatic_neighbor ? CrippenAssignment{"C26", 0.264} : CrippenAssignment{"C6", 0.1551};
  }

  // sp3 from here on
  bool common_hetero = false;
  bool exotic_hetero = false;
  bool aromatic_neighbor = false;
  for (int n : nb.atoms) {
    const chem::Atom &other = mol.atoms[static_cast<std::size_t>(n)];
    if (other.aromatic)
      aromatic_neighbor = true;
    if (other.atomic_number != 6) {
      if (is_common_hetero(other.atomic_number))
        common_hetero = true;
      else
        exotic_hetero = true;
    }
  }
  if (common_hetero)
    return heavy_degree <= 2 ? CrippenAssignment{"C3", -0.2035} : CrippenAssignment{"C4", -0.2051};
  if (aromatic_neighbor) {
    const chem::Atom &first_aromatic = [&]() -> const chem::Atom & {
      for (int n : nb.atoms)
        if (mol.atoms[static_cast<std::size_t>(n)].aromatic)
          return mol.atoms[static_cast<std::size_t>(n)];
      return mol.atoms[static_cast<std::size_t>(nb.atoms.front())];
    }();
    switch (heavy_degree) {
    case 1:
      return first_aromatic.atomic_number == 6 ? CrippenAssignment{"C8", 0.08452}
                                               : CrippenAssignment{"C9", -0.1444};
    case 2: return {"C10", -0.0516};
    case 3: return {"C11", 0.1193};
    default: return {"C12", -0.0967};
    }
  }
  if (exotic_hetero)
    return {"C27", 0.2148};
  return heavy_degree <= 2 ? CrippenAssignment{"C1", 0.1441} : CrippenAssignment{"C2", 0.0};
}

inline CrippenAssignment type_nitrogen(const chem::Molecule &mol, int idx, const NeighborView &nb,
                                       int h_count) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  if (atom.formal_charge > 0) {
    if (atom.aromatic)
      return {"N12", -1.119};
    if (h_count > 0)
      return {"N10", -1.95};
    return {"N13", -0.3396};
  }
  if (atom.formal_charge < 0)
    return {"NS", -0.4806};
  if (atom.aromatic)
    return {"N11", -0.3239};

  bool has_triple = false;
  bool has_double = false;
  bool aromatic_neighbor = false;
  for (std::size_t k = 0; k < nb.atoms.size(); ++k) {
    if (nb.orders[k] == chem::BondOrder::kTriple)
      has_triple = true;
    if (nb.orders[k] == chem::BondOrder::kDouble)
      has_double = true;
    if (mol.atoms[static_cast<std::size_t>(nb.atoms[k])].aromatic)
      aromatic_neighbor = true;
  }
  if (has_triple)
    return {"N9", 0.01508};
  if (has_double)
    return h_count > 0 ? CrippenAssignment{"N5", 0.08387} : CrippenAssignment{"N6", 0.1836};
  int heavy_degree = static_cast<int>(nb.atoms.size());
  if (h_count >= 2 && heavy_degree >= 1)
    return aromatic_neighbor ? CrippenAssignment{"N3", -1.027} : CrippenAssignment{"N1", -1.019};
  if (h_count == 1 && heavy_degree == 2)
    return aromatic_neighbor ? CrippenAssignment{"N4", -0.5188} : CrippenAssignment{"N2", -0.7096};
  if (h_count == 0 && heavy_degree == 3)
    return aromatic_neighbor ? CrippenAssignment{"N8", -0.4458} : CrippenAssignment{"N7", -0.3187};
  return {"NS", -0.4806};
}

inline CrippenAssignment type_oxygen(const chem::Molecule &mol, int idx, const NeighborView &nb,
                                     int h_count) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  if (atom.aromatic)
    return {"O1", 0.1552};
  if (h_count > 0)
    return {"O2", -0.2893};

  for (std::size_t k = 0; k < nb.atoms.size(); ++k) {
    if (nb.orders[k] != chem::BondOrder::kDouble)
      continue;
    const chem::Atom &other = mol.atoms[static_cast<std::size_t>(nb.atoms[k])];
    if (other.atomic_number == 7 || other.atomic_number == 8)
      return {"O6", -0.3339};
    if (other.atomic_number == 6) {
      if (other.aromatic)
        return {"O8", 0.1788};
      // classify by the carbonyl carbon's other attachments
      NeighborView cn = neighbors_of(mol, nb.atoms[k]);
      bool carbonyl_aromatic = false;
      bool carbonyl_exotic = false;
      for (int cidx : cn.atoms) {
        if (cidx == idx)
          continue;
        const chem::Atom &sub = mol.atoms[static_cast<std::size_t>(cidx)];
        if (sub.aromatic)
          carbonyl_aromatic = true;
        else if (sub.atomic_number != 6 && sub.atomic_number != 7 && sub.atomic_number != 8)
          carbonyl_exotic = true;
      }
      if (carbonyl_aromatic)
        return {"O10", 0.1129};
      if (carbonyl_exotic)
        return {"O11", 0.4833};
      return {"O9", -0.1526};
    }
    return {"O7", -1.189};
  }

  if (atom.formal_charge < 0)
    return {"O12", -1.326};
  int aromatic_neighbors = 0;
  for (int n : nb.atoms)
    if (mol.atoms[static_cast<std::size_t>(n)].aromatic)
      ++aromatic_neighbors;
  if (nb.atoms.size() == 2) {
    if (aromatic_neighbors == 2)
      return {"O5", 0.0335};
    if (aromatic_neighbors == 1)
      return {"O4", 0.4833};
    return {"O3", -0.0684};
  }
  return {"OS", -0.1188};
}

inline CrippenAssignment type_halogen(const chem::Molecule &mol, int idx, const NeighborView &nb) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  bool bonded_to_carbon = false;
  for (int n : nb.atoms)
    if (mol.atoms[static_cast<std::size_t>(n)].atomic_number == 6)
      bonded_to_carbon = true;
  if (atom.formal_charge != 0 || (!nb.atoms.empty() && !bonded_to_carbon))
    return {"Hal", -2.996};
  switch (atom.atomic_number) {
  case 9: return {"F", 0.4202};
  case 17: return {"Cl", 0.6895};
  case 35: return {"Br", 0.8456};
  default: return {"I", 0.8857};
  }
}

inline CrippenAssignment type_sulfur(const chem::Atom &atom) {
  if (atom.aromatic)
    return {"S3", 0.6237};
  if (atom.formal_charge != 0)
    return {"S2", -0.0024};
  return {"S1", 0.6482};
}

inline CrippenAssignment crippen_atom_type(const chem::Molecule &mol, int idx) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  NeighborView nb = neighbors_of(mol, idx);
  int h_count = mol.implicit_h[static_cast<std::size_t>(idx)];
  switch (atom.atomic_number) {
  case 6: return type_carbon(mol, idx, nb);
  case 7: return type_nitrogen(mol, idx, nb, h_count);
  case 8: return type_oxygen(mol, idx, nb, h_count);
  case 9: case 17: case 35: case 53: return type_halogen(mol, idx, nb);
  case 15: return {"P", 0.8612};
  case 16: return type_sulfur(atom);
  case 1: return {"H1", 0.123}; // explicit [H] atoms count as hydrogens
  default: return {"X0", 0.0};
  }
}

// Hydrogens are typed by the heavy atom they sit on: carbon H, amine H,
// alcohol vs acid H on oxygen, everything else the wildcard.
inline CrippenAssignment crippen_h_type(const chem::Molecule &mol, int idx) {
  const chem::Atom &atom = mol.atoms[static_cast<std::size_t>(idx)];
  switch (atom.atomic_number) {
  case 6: return {"H1", 0.123};
  case 7: return {"H3", 0.2142};
  case 8: {
    NeighborView nb = neighbors_of(mol, idx);
    for (int n : nb.atoms) {
      const chem::Atom &other = mol.atoms[static_cast<std::size_t>(n)];
      if (other.atomic_number != 6)
        continue;
      NeighborView cn = neighbors_of(mol, n);
      for (std::size_t k = 0; k < cn.atoms.size(); ++k)
        if (cn.orders[k] == chem::BondOrder::kDouble &&
            mol.atoms[static_cast<std::size_t>(cn.atoms[k])].atomic_number == 8)
          return {"H4", 0.298}; // acid OH
    }
    return {"H2", -0.2677};
  }
  default: return {"HS", 0.1125};
  }
}

} // namespace detail

inline double crippen_logp(const chem::Molecule &mol) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(mol.atoms.size()); ++i) {
    total += detail::crippen_atom_type(mol, i).value;
    int h = mol.implicit_h[static_cast<std::size_t>(i)];
    if (h > 0)
      total += h * detail::crippen_h_type(mol, i).value;
  }
  return total;
}

} // namespace molalign::dsm
