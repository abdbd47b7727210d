#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "molalign/chem/smiles.hpp"
#include "molalign/dsm/descriptors.hpp"
#include "molalign/dsm/report.hpp"
#include "molalign/llm/gateway.hpp"
#include "molalign/prompt/markers.hpp"
#include "molalign/task/dataset.hpp"
#include "molalign/util/errors.hpp"
#include "molalign/util/sha256.hpp"

namespace molalign::prompting {

struct DatasetCard {
  std::string name;
  std::string description;
  task::TaskType task_type = task::TaskType::kClassification;
  std::string target_variable;

  DatasetCard() = default;
  DatasetCard(std::string name_, std::string description_, task::TaskType type,
              std::string target)
      : name(std::move(name_)), description(std::move(description_)), task_type(type),
        target_variable(std::move(target)) {
    validate();
  }

  void validate() const {
    if (name.empty())
      throw ValueError("dataset card name must be non-empty");
    if (description.empty())
      throw ValueError("dataset card description must be non-empty");
    if (target_variable.empty())
      throw ValueError("dataset card target variable must be non-empty");
  }
};

struct TemplateProperty {
  std::string name;
  std::string rationale;
};

struct MDTemplate {
  std::vector<TemplateProperty> properties;
  std::string dataset_name;
};

inline constexpr std::size_t kMaxTemplateProperties = 10;

namespace detail {

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char &c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// lowercase, trim, and collapse whitespace runs so alias comparison ignores
// spacing and case
inline std::string normalize_name(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char raw : s) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return std::string(s.substr(b, e - b));
}

// strips list-markup decoration (bold stars, backticks, quotes) around a
// captured property name
inline std::string strip_markup(std::string s) {
  auto decorated = [](char c) {
    return c == '*' || c == '_' || c == '`' || c == '"' || c == '\'';
  };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (decorated(s[b]) || std::isspace(static_cast<unsigned char>(s[b]))))
    ++b;
  while (e > b && (decorated(s[e - 1]) || std::isspace(static_cast<unsigned char>(s[e - 1]))))
    --e;
  return s.substr(b, e - b);
}

// A numbered template line: optional indent, digits, '.' or ')', name up to
// the first ASCII or fullwidth colon, then the rationale.
inline bool parse_template_line(const std::string &line, std::string &name,
                                std::string &rationale) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
    ++i;
  std::size_t digits = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])))
    ++i;
  if (i == digits || i >= line.size())
    return false;
  if (line[i] != '.' && line[i] != ')')
    return false;
  ++i;
  std::size_t name_start = i;
  std::size_t sep = std::string::npos;
  std::size_t sep_len = 0;
  for (std::size_t j = name_start; j < line.size(); ++j) {
    if (line[j] == ':') {
      sep = j;
      sep_len = 1;
      break;
    }
    if (line.compare(j, 3, "\xEF\xBC\x9A") == 0) { // fullwidth colon
      sep = j;
      sep_len = 3;
      break;
    }
  }
  if (sep == std::string::npos)
    return false;
  name = strip_markup(trim(std::string_view(line).substr(name_start, sep - name_start)));
  rationale = trim(std::string_view(line).substr(sep + sep_len));
  return !name.empty() && !rationale.empty();
}

} // namespace detail

inline void validate_template(const MDTemplate &tmpl) {
  if (tmpl.properties.empty())
    throw ValueError("template must list at least one property");
  if (tmpl.properties.size() > kMaxTemplateProperties)
    throw ValueError("template lists " + std::to_string(tmpl.properties.size()) +
                     " properties; the cap is " + std::to_string(kMaxTemplateProperties));
  for (std::size_t i = 0; i < tmpl.properties.size(); ++i) {
    if (tmpl.properties[i].name.empty())
      throw ValueError("template property " + std::to_string(i) + " has an empty name");
    for (std::size_t j = i + 1; j < tmpl.properties.size(); ++j)
      if (detail::lowercase(tmpl.properties[i].name) ==
          detail::lowercase(tmpl.properties[j].name))
        throw ValueError("duplicate template property '" + tmpl.properties[i].name + "'");
  }
}

inline std::string template_digest(const MDTemplate &tmpl) {
  std::string canonical = tmpl.dataset_name;
  for (const TemplateProperty &p : tmpl.properties) {
    canonical += '\x1e';
    canonical += p.name;
    canonical += '\x1f';
    canonical += p.rationale;
  }
  return util::sha256_hex(canonical);
}

struct MDText {
  std::string smiles;
  std::string body;
  std::string template_hash;
  llm::Source source = llm::Source::kMock;
};

inline llm::PromptRequest build_stage1_prompt(const DatasetCard &card) {
  card.validate();
  std::string u;
  u += kStage1Marker;
  u += '\n';
  u += "You are preparing a molecular property prediction study.\n\n";
  u += "Dataset name: " + card.name + "\n";
  u += "Dataset description: " + card.description + "\n";
  u += std::string("Task type: ") + task::task_type_name(card.task_type) + "\n";
  u += "Target variable: " + card.target_variable + "\n\n";
  u += "List up to 5 molecular properties most relevant for predicting the target "
       "variable of this dataset.\n";
  u += "Answer only with a numbered list, one property per line, in the form:\n";
  u += "N. <Property>: <why it matters for this dataset>\n";

  llm::PromptRequest req;
  req.system_text =
      "You are an expert medicinal chemist. Answer precisely in the requested format.";
  req.user_text = u;
  return req;
}

inline MDTemplate parse_md_template(const std::string &completion, const DatasetCard &card) {
  card.validate();
  MDTemplate out;
  out.dataset_name = card.name;
  std::vector<std::string> seen;
  for (const std::string &line : llm::detail::split_lines(completion)) {
    std::string name;
    std::string rationale;
    if (!detail::parse_template_line(line, name, rationale))
      continue;
    std::string lower = detail::lowercase(name);
    bool duplicate = false;
    for (const std::string &s : seen)
      if (s == lower)
        duplicate = true;
    if (duplicate)
      continue;
    seen.push_back(lower);
    out.properties.push_back({name, rationale});
    if (out.properties.size() == kMaxTemplateProperties)
      break;
  }
  if (out.properties.empty())
    throw ParseError("no template properties found in completion; raw text follows:\n" +
                     completion);
  return out;
}

// Property names resolve to metric ids through the alias table; order follows
// the template, then the registry for names that expand to several metrics.
inline std::vector<dsm::MetricId> match_calibratable(const MDTemplate &tmpl,
                                                     const std::vector<dsm::MetricId> &registry) {
  std::vector<dsm::MetricId> out;
  for (const TemplateProperty &p : tmpl.properties) {
    std::string norm = detail::normalize_name(p.name);
    for (dsm::MetricId id : registry) {
      const dsm::MetricInfo &info = dsm::metric_info(id);
      bool hit = detail::normalize_name(info.display_name) == norm;
      for (const char *alias : info.aliases)
        if (!hit && detail::normalize_name(alias) == norm)
          hit = true;
      if (!hit)
        continue;
      bool already = false;
      for (dsm::MetricId have : out)
        if (have == id)
          already = true;
      if (!already)
        out.push_back(id);
    }
  }
  return out;
}

inline llm::PromptRequest build_stage2_prompt(const MDTemplate &tmpl,
                                              const dsm::CalibratedKnowledge &calibrated,
                                              const std::string &smiles) {
  validate_template(tmpl);
  chem::parse_smiles(smiles); // reject malformed input before it reaches a prompt

  std::string u;
  u += kStage2Marker;
  u += '\n';
  u += "Write a factual description of one molecule from the dataset \"" +
       tmpl.dataset_name + "\".\n\n";
  u += kPropertiesHeading;
  u += '\n';
  for (const TemplateProperty &p : tmpl.properties)
    u += "- " + p.name + "\n";
  u += '\n';
  if (!calibrated.lines.empty()) {
    u += kCalibratedHeading;
    u += '\n';
    for (const std::string &line : calibrated.lines)
      u += line + "\n";
    u += '\n';
    u += "The values above come from an exact calculator. Treat them as authoritative: "
         "restate each line verbatim and never contradict them.\n\n";
  }
  u += kSmilesPrefix;
  u += smiles;
  u += "\n\n";
  u += "Describe each listed property for this molecule, one sentence per property, "
       "in plain language.\n";

  llm::PromptRequest req;
  req.system_text = "You are an expert medicinal chemist describing molecules accurately.";
  req.user_text = u;
  return req;
}

// Per-dataset state: the parsed template and which of its properties the
// descriptor calculator can ground.
struct DescriptionSession {
  DatasetCard card;
  MDTemplate tmpl;
  std::string template_hash;
  std::vector<dsm::MetricId> metrics;
};

inline DescriptionSession start_description_session(const DatasetCard &card, llm::Gateway &gateway,
                                                    const std::vector<dsm::MetricId> &registry) {
  card.validate();
  llm::CompletionResult stage1;
  try {
    stage1 = gateway.run(build_stage1_prompt(card));
  } catch (const IoError &e) {
    throw IoError(std::string("stage 1 (template request): ") + e.what());
  } catch (const Error &e) {
    throw LlmError(std::string("stage 1 (template request): ") + e.what());
  }
  DescriptionSession session;
  session.card = card;
  try {
    session.tmpl = parse_md_template(stage1.text, card);
  } catch (const Error &e) {
    throw ParseError(std::string("stage 1 (template parse): ") + e.what());
  }
  session.template_hash = template_digest(session.tmpl);
  session.metrics = match_calibratable(session.tmpl, registry);
  return session;
}

inline MDText generate_md_text(const DescriptionSession &session, llm::Gateway &gateway,
                               const std::string &smiles) {
  chem::Molecule mol = chem::parse_smiles(smiles);
  dsm::CalibratedKnowledge calibrated;
  if (!session.metrics.empty())
    calibrated = dsm::format_calibrated(dsm::compute_report(mol, session.metrics));
  llm::CompletionResult stage2;
  try {
    stage2 = gateway.run(build_stage2_prompt(session.tmpl, calibrated, smiles));
  } catch (const IoError &e) {
    throw IoError(std::string("stage 2 (description request): ") + e.what());
  } catch (const Error &e) {
    throw LlmError(std::string("stage 2 (description request): ") + e.what());
  }
  if (stage2.text.empty())
    throw LlmError("stage 2 returned an empty description for " + smiles);
  MDText out;
  out.smiles = smiles;
  out.body = stage2.text;
  out.template_hash = session.template_hash;
  out.source = stage2.source;
  return out;
}

// single-shot convenience: stage 1, calibration, stage 2 for one molecule
inline MDText generate_md_text(const DatasetCard &card, const std::string &smiles,
                               llm::Gateway &gateway,
                               const std::vector<dsm::MetricId> &registry) {
  DescriptionSession session = start_description_session(card, gateway, registry);
  return generate_md_text(session, gateway, smiles);
}

} // namespace molalign::prompting
