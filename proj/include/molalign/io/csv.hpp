#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "molalign/chem/smiles.hpp"
#include "molalign/task/dataset.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::io {

// Quoted fields may hold commas, doubled quotes, and line breaks. Bare CR
// before LF is treated as the line break.
inline std::vector<std::vector<std::string>> parse_csv(const std::string &content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // dropped; the following \n (or field text) decides what happens
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes)
    throw ParseError("csv ends inside a quoted field");
  if (field_started || !row.empty())
    end_row();
  return rows;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open csv file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

struct IngestReport {
  std::size_t kept = 0;
  std::size_t dropped = 0; // unparseable smiles or fully unlabeled rows
};

namespace detail {

inline std::string trim_field(const std::string &s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return s.substr(b, e - b);
}

inline std::size_t column_index(const std::vector<std::string> &header,
                                const std::string &name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim_field(header[i]) == name)
      return i;
  throw ValueError("csv has no column named '" + name + "'");
}

inline double parse_label(const std::string &cell, std::size_t row, const std::string &column) {
  const char *begin = cell.c_str();
  char *end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ParseError("row " + std::to_string(row) + " column '" + column +
                     "': not a number: '" + cell + "'");
  return v;
}

} // namespace detail

// Header-row CSV to a labeled dataset. Rows whose SMILES fails to parse are
// dropped and counted, as are rows with every label cell empty; an empty
// label cell elsewhere becomes a masked label.
inline task::MoleculeDataset ingest_csv(const std::string &path, const std::string &smiles_column,
                                        const std::vector<std::string> &label_columns,
                                        const std::string &dataset_name, task::TaskType task_type,
                                        IngestReport *report = nullptr) {
  if (label_columns.empty())
    throw ValueError("ingest needs at least one label column");
  std::vector<std::vector<std::string>> rows = read_csv(path);
  if (rows.empty())
    throw ValueError("csv file has no header row: " + path);

  const std::vector<std::string> &header = rows[0];
  std::size_t smiles_idx = detail::column_index(header, smiles_column);
  std::vector<std::size_t> label_idx;
  for (const std::string &col : label_columns)
    label_idx.push_back(detail::column_index(header, col));

  task::MoleculeDataset ds;
  ds.name = dataset_name;
  ds.task_type = task_type;
  ds.n_tasks = static_cast<int>(label_columns.size());

  IngestReport local;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::vector<std::string> &row = rows[r];
    bool all_empty = true;
    for (const std::string &cell : row)
      if (!detail::trim_field(cell).empty())
        all_empty = false;
    if (all_empty)
      continue; // stray blank line
    if (row.size() != header.size())
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                       " fields, expected " + std::to_string(header.size()));

    std::string smiles = detail::trim_field(row[smiles_idx]);
    try {
      chem::parse_smiles(smiles);
    } catch (const Error &) {
      ++local.dropped;
      continue;
    }

    task::DatasetRecord rec;
    rec.smiles = smiles;
    bool any_label = false;
    for (std::size_t t = 0; t < label_idx.size(); ++t) {
      std::string cell = detail::trim_field(row[label_idx[t]]);
      if (cell.empty()) {
        rec.labels.push_back(0.0);
        rec.mask.push_back(0);
        continue;
      }
      double v = detail::parse_label(cell, r, label_columns[t]);
      if (task_type == task::TaskType::kClassification && v != 0.0 && v != 1.0)
        throw ValueError("row " + std::to_string(r) + " column '" + label_columns[t] +
                         "': classification labels must be 0 or 1, got '" + cell + "'");
      rec.labels.push_back(v);
      rec.mask.push_back(1);
      any_label = true;
    }
    if (!any_label) {
      ++local.dropped; // a record with no labels can never train or score
      continue;
    }
    ds.records.push_back(std::move(rec));
    ++local.kept;
  }

  if (ds.records.empty())
    throw ValueError("csv yielded zero usable rows: " + path);
  task::validate_dataset(ds);
  if (report)
    *report = local;
  return ds;
}

} // namespace molalign::io
