#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "molalign/align/pretrain.hpp"
#include "molalign/llm/gateway.hpp"
#include "molalign/prompt/pipeline.hpp"
#include "molalign/task/finetune.hpp"
#include "molalign/task/split.hpp"
#include "molalign/util/sha256.hpp"

namespace molalign::io {

struct RunConfig {
  std::string dataset_csv;
  std::string smiles_column = "smiles";
  std::vector<std::string> label_columns;
  prompting::DatasetCard card;

  llm::LlmConfig llm;
  align::ModelConfigs model;
  align::AlignmentConfig align;
  task::FinetuneConfig finetune;
  task::SplitRatios split;

  int eval_seeds = 3;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

inline const char *decay_name(nn::LrDecay d) {
  return d == nn::LrDecay::kCosine ? "cosine" : "constant";
}

inline nn::LrDecay decay_from_name(const std::string &name) {
  if (name == "cosine")
    return nn::LrDecay::kCosine;
  if (name == "constant")
    return nn::LrDecay::kConstant;
  throw ConfigError("unknown lr decay '" + name + "' (expected constant or cosine)");
}

// Architecture fingerprint stored in checkpoints; a fine-tune run refuses a
// checkpoint whose digest disagrees with its own config.
inline std::string model_config_digest(const align::ModelConfigs &m) {
  nlohmann::json j;
  j["gin"] = {{"layers", m.gin.layers},
              {"hidden_dim", m.gin.hidden_dim},
              {"epsilon", m.gin.epsilon},
              {"sum_readout", m.gin.sum_readout},
              {"atomic_vocab", m.gin.atomic_vocab},
              {"chirality_vocab", m.gin.chirality_vocab},
              {"bond_vocab", m.gin.bond_vocab},
              {"direction_vocab", m.gin.direction_vocab}};
  j["text"] = {{"vocab_buckets", m.text.vocab_buckets},
               {"embed_dim", m.text.embed_dim},
               {"output_dim", m.text.output_dim}};
  j["projection"] = {{"joint_dim", m.proj.joint_dim}, {"normalize", m.proj.normalize}};
  return util::sha256_hex(j.dump());
}

namespace detail {

inline void reject_unknown(const nlohmann::json &obj, const std::string &where,
                           std::initializer_list<const char *> allowed) {
  for (const auto &item : obj.items()) {
    bool known = false;
    for (const char *key : allowed)
      if (item.key() == key)
        known = true;
    if (!known)
      throw ConfigError("config " + where + ": unknown key '" + item.key() + "'");
  }
}

inline const nlohmann::json &section(const nlohmann::json &root, const char *key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!root.contains(key))
    return empty;
  if (!root[key].is_object())
    throw ConfigError(std::string("config ") + key + ": expected an object");
  return root[key];
}

inline std::string get_string(const nlohmann::json &obj, const char *key, std::string fallback,
                              const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  if (!obj[key].is_string())
    throw ConfigError("config " + where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

inline bool get_bool(const nlohmann::json &obj, const char *key, bool fallback,
                     const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  if (!obj[key].is_boolean())
    throw ConfigError("config " + where + "." + key + ": expected a boolean");
  return obj[key].get<bool>();
}

inline int get_int(const nlohmann::json &obj, const char *key, int fallback,
                   const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError("config " + where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

inline double get_double(const nlohmann::json &obj, const char *key, double fallback,
                         const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  if (!obj[key].is_number())
    throw ConfigError("config " + where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

inline std::uint64_t get_u64(const nlohmann::json &obj, const char *key, std::uint64_t fallback,
                             const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  if (!obj[key].is_number_integer() || (obj[key].is_number_integer() && obj[key].get<long long>() < 0))
    throw ConfigError("config " + where + "." + key + ": expected a non-negative integer");
  return obj[key].get<std::uint64_t>();
}

inline void require_positive(int v, const char *what) {
  if (v <= 0)
    throw ConfigError(std::string("config ") + what + " must be positive, got " +
                      std::to_string(v));
}

inline void require_positive(double v, const char *what) {
  if (!(v > 0.0))
    throw ConfigError(std::string("config ") + what + " must be positive");
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json &root, const std::string &origin) {
  if (!root.is_object())
    throw ConfigError("config " + origin + ": top level must be a json object");
  detail::reject_unknown(root, "(top level)",
                         {"dataset", "llm", "encoder", "text_encoder", "projection", "alignment",
                          "finetune", "split", "eval_seeds", "seed", "out_dir"});

  RunConfig cfg;
  cfg.seed = detail::get_u64(root, "seed", cfg.seed, "(top level)");
  cfg.out_dir = detail::get_string(root, "out_dir", cfg.out_dir, "(top level)");
  cfg.eval_seeds = detail::get_int(root, "eval_seeds", cfg.eval_seeds, "(top level)");
  detail::require_positive(cfg.eval_seeds, "eval_seeds");

  {
    const nlohmann::json &d = detail::section(root, "dataset");
    detail::reject_unknown(d, "dataset",
                           {"csv", "smiles_column", "label_columns", "name", "description",
                            "task_type", "target_variable"});
    cfg.dataset_csv = detail::get_string(d, "csv", "", "dataset");
    if (cfg.dataset_csv.empty())
      throw ConfigError("config dataset.csv is required");
    cfg.smiles_column = detail::get_string(d, "smiles_column", cfg.smiles_column, "dataset");
    if (!d.contains("label_columns") || !d["label_columns"].is_array() ||
        d["label_columns"].empty())
      throw ConfigError("config dataset.label_columns must be a non-empty array");
    for (const nlohmann::json &col : d["label_columns"]) {
      if (!col.is_string())
        throw ConfigError("config dataset.label_columns: entries must be strings");
      cfg.label_columns.push_back(col.get<std::string>());
    }
    cfg.card.name = detail::get_string(d, "name", "", "dataset");
    cfg.card.description = detail::get_string(d, "description", "", "dataset");
    cfg.card.target_variable = detail::get_string(d, "target_variable", "", "dataset");
    cfg.card.task_type =
        task::task_type_from_name(detail::get_string(d, "task_type", "classification", "dataset"));
    try {
      cfg.card.validate();
    } catch (const Error &e) {
      throw ConfigError(std::string("config dataset: ") + e.what());
    }
  }

  {
    const nlohmann::json &l = detail::section(root, "llm");
    detail::reject_unknown(
        l, "llm",
        {"endpoint", "model_id", "api_key_env", "use_mock", "cache_path", "max_in_flight",
         "timeout_seconds"});
    cfg.llm.endpoint = detail::get_string(l, "endpoint", cfg.llm.endpoint, "llm");
    cfg.llm.model_id = detail::get_string(l, "model_id", cfg.llm.model_id, "llm");
    cfg.llm.api_key_env = detail::get_string(l, "api_key_env", cfg.llm.api_key_env, "llm");
    cfg.llm.use_mock = detail::get_bool(l, "use_mock", cfg.llm.use_mock, "llm");
    cfg.llm.cache_path = detail::get_string(l, "cache_path", cfg.llm.cache_path, "llm");
    cfg.llm.max_in_flight = detail::get_int(l, "max_in_flight", cfg.llm.max_in_flight, "llm");
    cfg.llm.timeout_seconds =
        detail::get_int(l, "timeout_seconds", cfg.llm.timeout_seconds, "llm");
    detail::require_positive(cfg.llm.max_in_flight, "llm.max_in_flight");
    detail::require_positive(cfg.llm.timeout_seconds, "llm.timeout_seconds");
  }

  {
    const nlohmann::json &g = detail::section(root, "encoder");
    detail::reject_unknown(g, "encoder", {"layers", "hidden_dim", "epsilon", "sum_readout"});
    cfg.model.gin.layers = detail::get_int(g, "layers", cfg.model.gin.layers, "encoder");
    cfg.model.gin.hidden_dim =
        detail::get_int(g, "hidden_dim", cfg.model.gin.hidden_dim, "encoder");
    cfg.model.gin.epsilon = detail::get_double(g, "epsilon", cfg.model.gin.epsilon, "encoder");
    cfg.model.gin.sum_readout =
        detail::get_bool(g, "sum_readout", cfg.model.gin.sum_readout, "encoder");
    detail::require_positive(cfg.model.gin.layers, "encoder.layers");
    detail::require_positive(cfg.model.gin.hidden_dim, "encoder.hidden_dim");
  }

  {
    const nlohmann::json &t = detail::section(root, "text_encoder");
    detail::reject_unknown(t, "text_encoder", {"vocab_buckets", "embed_dim", "output_dim"});
    cfg.model.text.vocab_buckets =
        detail::get_int(t, "vocab_buckets", cfg.model.text.vocab_buckets, "text_encoder");
    cfg.model.text.embed_dim =
        detail::get_int(t, "embed_dim", cfg.model.text.embed_dim, "text_encoder");
    cfg.model.text.output_dim =
        detail::get_int(t, "output_dim", cfg.model.text.output_dim, "text_encoder");
    detail::require_positive(cfg.model.text.vocab_buckets, "text_encoder.vocab_buckets");
    detail::require_positive(cfg.model.text.embed_dim, "text_encoder.embed_dim");
    detail::require_positive(cfg.model.text.output_dim, "text_encoder.output_dim");
  }

  {
    const nlohmann::json &p = detail::section(root, "projection");
    detail::reject_unknown(p, "projection", {"joint_dim", "normalize"});
    cfg.model.proj.joint_dim =
        detail::get_int(p, "joint_dim", cfg.model.proj.joint_dim, "projection");
    cfg.model.proj.normalize =
        detail::get_bool(p, "normalize", cfg.model.proj.normalize, "projection");
    detail::require_positive(cfg.model.proj.joint_dim, "projection.joint_dim");
  }

  {
    const nlohmann::json &a = detail::section(root, "alignment");
    detail::reject_unknown(a, "alignment",
                           {"temperature", "batch_size", "epochs", "warmup_epochs", "base_lr",
                            "normalize", "decay", "val_fraction"});
    cfg.align.temperature =
        detail::get_double(a, "temperature", cfg.align.temperature, "alignment");
    cfg.align.batch_size = detail::get_int(a, "batch_size", cfg.align.batch_size, "alignment");
    cfg.align.epochs = detail::get_int(a, "epochs", cfg.align.epochs, "alignment");
    cfg.align.warmup_epochs =
        detail::get_int(a, "warmup_epochs", cfg.align.warmup_epochs, "alignment");
    cfg.align.base_lr = detail::get_double(a, "base_lr", cfg.align.base_lr, "alignment");
    cfg.align.normalize = detail::get_bool(a, "normalize", cfg.align.normalize, "alignment");
    cfg.align.decay = decay_from_name(
        detail::get_string(a, "decay", decay_name(cfg.align.decay), "alignment"));
    cfg.align.val_fraction =
        detail::get_double(a, "val_fraction", cfg.align.val_fraction, "alignment");
    detail::require_positive(cfg.align.temperature, "alignment.temperature");
    detail::require_positive(cfg.align.batch_size, "alignment.batch_size");
    detail::require_positive(cfg.align.epochs, "alignment.epochs");
    if (cfg.align.warmup_epochs < 0)
      throw ConfigError("config alignment.warmup_epochs must be >= 0");
    detail::require_positive(cfg.align.base_lr, "alignment.base_lr");
    if (!(cfg.align.val_fraction > 0.0) || !(cfg.align.val_fraction < 1.0))
      throw ConfigError("config alignment.val_fraction must lie in (0, 1)");
  }

  {
    const nlohmann::json &f = detail::section(root, "finetune");
    detail::reject_unknown(
        f, "finetune",
        {"lr_candidates", "max_epochs", "batch_size", "patience", "head_hidden"});
    if (f.contains("lr_candidates")) {
      if (!f["lr_candidates"].is_array() || f["lr_candidates"].empty())
        throw ConfigError("config finetune.lr_candidates must be a non-empty array");
      cfg.finetune.lr_candidates.clear();
      for (const nlohmann::json &lr : f["lr_candidates"]) {
        if (!lr.is_number() || !(lr.get<double>() > 0.0))
          throw ConfigError("config finetune.lr_candidates: entries must be positive numbers");
        cfg.finetune.lr_candidates.push_back(lr.get<double>());
      }
    }
    cfg.finetune.max_epochs =
        detail::get_int(f, "max_epochs", cfg.finetune.max_epochs, "finetune");
    cfg.finetune.batch_size =
        detail::get_int(f, "batch_size", cfg.finetune.batch_size, "finetune");
    cfg.finetune.patience = detail::get_int(f, "patience", cfg.finetune.patience, "finetune");
    cfg.finetune.head_hidden =
        detail::get_int(f, "head_hidden", cfg.finetune.head_hidden, "finetune");
    detail::require_positive(cfg.finetune.max_epochs, "finetune.max_epochs");
    detail::require_positive(cfg.finetune.batch_size, "finetune.batch_size");
    detail::require_positive(cfg.finetune.patience, "finetune.patience");
    detail::require_positive(cfg.finetune.head_hidden, "finetune.head_hidden");
  }

  {
    const nlohmann::json &s = detail::section(root, "split");
    detail::reject_unknown(s, "split", {"train", "valid", "test"});
    cfg.split.train = detail::get_double(s, "train", cfg.split.train, "split");
    cfg.split.valid = detail::get_double(s, "valid", cfg.split.valid, "split");
    cfg.split.test = detail::get_double(s, "test", cfg.split.test, "split");
    if (cfg.split.train < 0.0 || cfg.split.valid < 0.0 || cfg.split.test < 0.0 ||
        !(cfg.split.train + cfg.split.valid + cfg.split.test > 0.0))
      throw ConfigError("config split ratios must be non-negative with a positive sum");
  }

  // one seed drives every stage
  cfg.align.seed = cfg.seed;
  cfg.finetune.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config " + path + " is not valid json: " + e.what());
  }
  RunConfig cfg = parse_run_config(root, path);
  if (!std::filesystem::exists(cfg.dataset_csv))
    throw ConfigError("config dataset.csv points at a missing file: " + cfg.dataset_csv);
  return cfg;
}

} // namespace molalign::io
