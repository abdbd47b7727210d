#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "molalign/chem/molecule.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::dsm {

// Closed set of metrics the domain model can compute. Order here fixes the
// registry order used by template matching.
enum class MetricId {
  kMolecularWeight,
  kLogP,
  kHbd,
  kHba,
  kRotatableBonds,
  kRingCount,
  kHeavyAtomCount,
};

struct MetricInfo {
  MetricId id;
  const char *display_name; // appears verbatim in calibrated lines
  const char *unit;
  bool integral; // counts print without decimals
  std::vector<const char *> aliases;
};

inline const std::vector<MetricInfo> &metric_registry() {
  static const std::vector<MetricInfo> registry = {
      {MetricId::kMolecularWeight,
       "Molecular weight",
       "g/mol",
       false,
       {"molecular weight", "mw", "molar mass", "molecular mass", "molecular weight (mw)"}},
      {MetricId::kLogP,
       "LogP",
       "",
       false,
       {"logp", "log p", "lipophilicity", "lipophilicity (logp)", "octanol-water partition coefficient",
        "partition coefficient"}},
      {MetricId::kHbd,
       "Hydrogen bond donors",
       "",
       true,
       {"hydrogen bond donors", "hbd", "h-bond donors", "hydrogen bond donor count",
        "number of hydrogen bond donors", "hydrogen bond donors and acceptors"}},
      {MetricId::kHba,
       "Hydrogen bond acceptors",
       "",
       true,
       {"hydrogen bond acceptors", "hba", "h-bond acceptors", "hydrogen bond acceptor count",
        "number of hydrogen bond acceptors", "hydrogen bond donors and acceptors"}},
      {MetricId::kRotatableBonds,
       "Rotatable bonds",
       "",
       true,
       {"rotatable bonds", "number of rotatable bonds", "rotatable bond count", "flexibility"}},
      {MetricId::kRingCount,
       "Ring count",
       "",
       true,
       {"ring count", "number of rings", "rings", "ring systems"}},
      {MetricId::kHeavyAtomCount,
       "Heavy atom count",
       "",
       true,
       {"heavy atom count", "heavy atoms", "number of heavy atoms", "non-hydrogen atom count"}},
  };
  return registry;
}

inline std::vector<MetricId> all_metric_ids() {
  std::vector<MetricId> ids;
  for (const MetricInfo &info : metric_registry())
    ids.push_back(info.id);
  return ids;
}

inline const MetricInfo &metric_info(MetricId id) {
  for (const MetricInfo &info : metric_registry())
    if (info.id == id)
      return info;
  throw ValueError("unknown metric id");
}

inline double molecular_weight(const chem::Molecule &mol) {
  double total = 0.0;
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    const chem::Atom &atom = mol.atoms[i];
    if (atom.isotope)
      total += static_cast<double>(*atom.isotope);
    else
      total += chem::atomic_weight(atom.atomic_number);
    total += mol.implicit_h[i] * chem::atomic_weight(1);
  }
  return total;
}

inline int hbd_count(const chem::Molecule &mol) {
  int count = 0;
  for (std::size_t i = 0; i < mol.atoms.size(); ++i) {
    int z = mol.atoms[i].atomic_number;
    if ((z == 7 || z == 8) && mol.implicit_h[i] > 0)
      ++count;
  }
  return count;
}

inline int hba_count(const chem::Molecule &mol) {
  int count = 0;
  for (const chem::Atom &atom : mol.atoms)
    if (atom.atomic_number == 7 || atom.atomic_number == 8)
      ++count;
  return count;
}

inline int rotatable_bonds(const chem::Molecule &mol) {
  int count = 0;
  for (const chem::Bond &bond : mol.bonds) {
    if (bond.order != chem::BondOrder::kSingle || bond.in_ring)
      continue;
    if (chem::degree(mol, bond.a) >= 2 && chem::degree(mol, bond.b) >= 2)
      ++count;
  }
  return count;
}

inline int heavy_atom_count(const chem::Molecule &mol) {
  return static_cast<int>(mol.atoms.size());
}

} // namespace molalign::dsm
