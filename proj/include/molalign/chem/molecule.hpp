#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molalign/chem/elements.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::chem {

enum class Chirality : std::uint8_t { kNone = 0, kClockwise = 1, kCounterclockwise = 2 };

enum class BondOrder : std::uint8_t { kSingle = 0, kDouble = 1, kTriple = 2, kAromatic = 3 };

enum class BondDirection : std::uint8_t { kNone = 0, kUp = 1, kDown = 2 };

struct Atom {
  std::string element;
  int atomic_number = 0;
  int formal_charge = 0;
  std::optional<int> isotope;
  bool aromatic = false;
  Chirality chirality = Chirality::kNone;
  std::optional<int> explicit_h; // bracket atoms only
};

struct Bond {
  int a = -1;
  int b = -1;
  BondOrder order = BondOrder::kSingle;
  BondDirection direction = BondDirection::kNone; // oriented a -> b
  bool in_ring = false;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string smiles_source;
  std::vector<int> implicit_h; // per atom, resolved at parse time

  std::size_t atom_count() const { return atoms.size(); }
  std::size_t bond_count() const { return bonds.size(); }
};

inline double bond_order_value(BondOrder order) {
  switch (order) {
  case BondOrder::kSingle: return 1.0;
  case BondOrder::kDouble: return 2.0;
  case BondOrder::kTriple: return 3.0;
  case BondOrder::kAromatic: return 1.0; // valence bookkeeping counts aromatic as 1
  }
  return 1.0;
}

namespace detail {

// Non-bridge bonds are ring bonds. Iterative DFS lowlink bridge finding.
inline void mark_ring_bonds(Molecule &mol) {
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (int bi = 0; bi < static_cast<int>(mol.bonds.size()); ++bi) {
    const Bond &bond = mol.bonds[static_cast<std::size_t>(bi)];
    adj[static_cast<std::size_t>(bond.a)].push_back({bond.b, bi});
    adj[static_cast<std::size_t>(bond.b)].push_back({bond.a, bi});
  }

  std::vector<int> disc(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  int timer = 0;

  struct Frame {
    int v;
    int parent_edge;
    std::size_t next;
  };

  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] != -1)
      continue;
    std::vector<Frame> stack;
    stack.push_back({root, -1, 0});
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame &f = stack.back();
      auto &edges = adj[static_cast<std::size_t>(f.v)];
      if (f.next < edges.size()) {
        auto [to, ei] = edges[f.next++];
        if (ei == f.parent_edge)
          continue;
        if (disc[static_cast<std::size_t>(to)] == -1) {
          disc[static_cast<std::size_t>(to)] = low[static_cast<std::size_t>(to)] = timer++;
          stack.push_back({to, ei, 0});
        } else {
          // back edge: always part of a cycle
          mol.bonds[static_cast<std::size_t>(ei)].in_ring = true;
          low[static_cast<std::size_t>(f.v)] =
              std::min(low[static_cast<std::size_t>(f.v)], disc[static_cast<std::size_t>(to)]);
        }
      } else {
        int v = f.v;
        int pe = f.parent_edge;
        stack.pop_back();
        if (!stack.empty()) {
          int parent = stack.back().v;
          low[static_cast<std::size_t>(parent)] =
              std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(v)]);
          if (low[static_cast<std::size_t>(v)] > disc[static_cast<std::size_t>(parent)])
            mol.bonds[static_cast<std::size_t>(pe)].in_ring = false; // bridge
          else
            mol.bonds[static_cast<std::size_t>(pe)].in_ring = true;
        }
      }
    }
  }
}

// Sum of bond orders at `idx`, aromatic bonds counted as 1.
inline double bonded_order_sum(const Molecule &mol, int idx) {
  double sum = 0.0;
  for (const Bond &bond : mol.bonds)
    if (bond.a == idx || bond.b == idx)
      sum += bond_order_value(bond.order);
  return sum;
}

// Resolves implicit hydrogen counts for the whole molecule and performs the
// valence overflow check on organic-subset atoms.
//
// Aliphatic atoms follow the smallest-normal-valence rule. Aromatic atoms add
// one to the bonded order sum for ring participation and clamp at zero; the
// clamp keeps aromatic O/S/P (furan, thiophene) at zero hydrogens, where the
// unclamped rule would overflow or fabricate an H.
inline void resolve_implicit_hydrogens(Molecule &mol) {
  mol.implicit_h.assign(mol.atoms.size(), 0);
  for (int i = 0; i < static_cast<int>(mol.atoms.size()); ++i) {
    const Atom &atom = mol.atoms[static_cast<std::size_t>(i)];
    if (atom.explicit_h.has_value()) {
      mol.implicit_h[static_cast<std::size_t>(i)] = *atom.explicit_h;
      continue;
    }
    const std::vector<int> &valences = normal_valences(atom.atomic_number);
    if (valences.empty()) {
      mol.implicit_h[static_cast<std::size_t>(i)] = 0;
      continue;
    }
    double sum = bonded_order_sum(mol, i);
    int max_valence = valences.back();
    if (sum > static_cast<double>(max_valence) + 1e-9)
      throw ParseError("valence overflow on atom " + std::to_string(i) + " (" + atom.element +
                       "): bond order sum " + std::to_string(static_cast<int>(sum + 0.5)) +
                       " exceeds " + std::to_string(max_valence));
    if (atom.aromatic) {
      int h = valences.front() - static_cast<int>(sum + 0.5) - 1;
      mol.implicit_h[static_cast<std::size_t>(i)] = std::max(0, h);
    } else {
      int needed = static_cast<int>(sum + 0.5);
      int h = 0;
      for (int v : valences)
        if (v >= needed) {
          h = v - needed;
          break;
        }
      mol.implicit_h[static_cast<std::size_t>(i)] = h;
    }
  }
}

} // namespace detail

inline int implicit_hydrogens(const Molecule &mol, int atom_index) {
  if (atom_index < 0 || atom_index >= static_cast<int>(mol.atoms.size()))
    throw ValueError("atom index out of range: " + std::to_string(atom_index));
  return mol.implicit_h[static_cast<std::size_t>(atom_index)];
}

inline int total_hydrogens(const Molecule &mol) {
  int total = 0;
  for (int i = 0; i < static_cast<int>(mol.atoms.size()); ++i)
    total += mol.implicit_h[static_cast<std::size_t>(i)];
  return total;
}

inline int degree(const Molecule &mol, int atom_index) {
  int d = 0;
  for (const Bond &bond : mol.bonds)
    if (bond.a == atom_index || bond.b == atom_index)
      ++d;
  return d;
}

inline int connected_components(const Molecule &mol) {
  const int n = static_cast<int>(mol.atoms.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (const Bond &bond : mol.bonds) {
    int ra = find(bond.a), rb = find(bond.b);
    if (ra != rb)
      parent[static_cast<std::size_t>(ra)] = rb;
  }
  int components = 0;
  for (int i = 0; i < n; ++i)
    if (find(i) == i)
      ++components;
  return components;
}

inline int ring_count(const Molecule &mol) {
  return static_cast<int>(mol.bonds.size()) - static_cast<int>(mol.atoms.size()) +
         connected_components(mol);
}

} // namespace molalign::chem
