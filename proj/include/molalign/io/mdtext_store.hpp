#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "molalign/llm/gateway.hpp"
#include "molalign/prompt/pipeline.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::io {

namespace detail {

// dataset names become file names, so anything outside [A-Za-z0-9_.-] is
// replaced
inline std::string safe_file_stem(const std::string &name) {
  std::string out;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "dataset" : out;
}

} // namespace detail

inline std::string mdtext_store_path(const std::string &out_dir, const std::string &dataset_name) {
  return out_dir + "/mdtext/" + detail::safe_file_stem(dataset_name) + ".jsonl";
}

// Missing file reads as empty; that is the state before the first describe run.
inline std::vector<prompting::MDText> load_mdtext_store(const std::string &path) {
  std::vector<prompting::MDText> texts;
  std::ifstream in(path);
  if (!in)
    return texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    nlohmann::json entry;
    try {
      entry = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw IoError("md-text store " + path + " line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    auto need_string = [&](const char *key) -> std::string {
      if (!entry.is_object() || !entry.contains(key) || !entry[key].is_string())
        throw IoError("md-text store " + path + " line " + std::to_string(line_no) +
                      ": missing string field '" + key + "'");
      return entry[key].get<std::string>();
    };
    prompting::MDText text;
    text.smiles = need_string("smiles");
    text.body = need_string("body");
    text.template_hash = need_string("template_hash");
    try {
      text.source = llm::source_from_name(need_string("source"));
    } catch (const Error &e) {
      throw IoError("md-text store " + path + " line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    if (text.body.empty())
      throw IoError("md-text store " + path + " line " + std::to_string(line_no) +
                    ": empty body");
    texts.push_back(std::move(text));
  }
  return texts;
}

inline void append_mdtext(const std::string &path, const prompting::MDText &text) {
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty())
    std::filesystem::create_directories(parent);
  nlohmann::json entry = {{"smiles", text.smiles},
                          {"body", text.body},
                          {"template_hash", text.template_hash},
                          {"source", llm::source_name(text.source)}};
  std::ofstream out(path, std::ios::app);
  if (!out)
    throw IoError("cannot open md-text store for append: " + path);
  out << entry.dump() << '\n';
  if (!out)
    throw IoError("write to md-text store failed: " + path);
}

} // namespace molalign::io
