#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "molalign/chem/molecule.hpp"
#include "molalign/dsm/crippen.hpp"
#include "molalign/dsm/descriptors.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::dsm {

struct DescriptorValue {
  MetricId id;
  double value; // already rounded for presentation
  std::string unit;
};

struct DescriptorReport {
  std::string smiles;
  std::vector<DescriptorValue> values;
};

struct CalibratedKnowledge {
  std::vector<std::string> lines;
};

namespace detail {

inline double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

inline double raw_metric(const chem::Molecule &mol, MetricId id) {
  switch (id) {
  case MetricId::kMolecularWeight: return molecular_weight(mol);
  case MetricId::kLogP: return crippen_logp(mol);
  case MetricId::kHbd: return hbd_count(mol);
  case MetricId::kHba: return hba_count(mol);
  case MetricId::kRotatableBonds: return rotatable_bonds(mol);
  case MetricId::kRingCount: return chem::ring_count(mol);
  case MetricId::kHeavyAtomCount: return heavy_atom_count(mol);
  }
  throw ValueError("unknown metric id");
}

// Fixed printf formats keep calibrated lines bit-identical across platforms.
inline std::string format_value(const MetricInfo &info, double value) {
  char buf[64];
  if (info.integral)
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(value)));
  else
    std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

} // namespace detail

inline DescriptorReport compute_report(const chem::Molecule &mol,
                                       const std::vector<MetricId> &requested) {
  if (requested.empty())
    throw ValueError("empty metric request: at least one metric id required");
  DescriptorReport report;
  report.smiles = mol.smiles_source;
  for (MetricId id : requested) {
    const MetricInfo &info = metric_info(id);
    double value;
    try {
      value = detail::raw_metric(mol, id);
    } catch (const Error &e) {
      throw ValueError(std::string("metric '") + info.display_name + "' failed: " + e.what());
    }
    if (!std::isfinite(value))
      throw NumericError(std::string("metric '") + info.display_name + "' produced a non-finite value");
    DescriptorValue out;
    out.id = id;
    out.value = info.integral ? std::llround(value) : detail::round3(value);
    out.unit = info.unit;
    // duplicate requests collapse to the first occurrence
    bool seen = false;
    for (const DescriptorValue &v : report.values)
      if (v.id == id)
        seen = true;
    if (!seen)
      report.values.push_back(std::move(out));
  }
  return report;
}

inline CalibratedKnowledge format_calibrated(const DescriptorReport &report) {
  CalibratedKnowledge out;
  for (const DescriptorValue &v : report.values) {
    const MetricInfo &info = metric_info(v.id);
    out.lines.push_back(std::string(info.display_name) + " of " + report.smiles + ": " +
                        detail::format_value(info, v.value));
  }
  return out;
}

} // namespace molalign::dsm
