#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "molalign/align/pretrain.hpp"
#include "molalign/io/checkpoint.hpp"
#include "molalign/io/csv.hpp"
#include "molalign/io/mdtext_store.hpp"
#include "molalign/io/run_config.hpp"
#include "molalign/prompt/pipeline.hpp"
#include "molalign/task/finetune.hpp"
#include "molalign/util/errors.hpp"

namespace molalign::cli {

// flag overrides applied after the config file loads
inline void apply_overrides(io::RunConfig &cfg, const std::optional<std::uint64_t> &seed,
                            bool force_mock, const std::optional<std::string> &out_dir) {
  if (seed) {
    cfg.seed = *seed;
    cfg.align.seed = *seed;
    cfg.finetune.seed = *seed;
  }
  if (force_mock)
    cfg.llm.use_mock = true;
  if (out_dir)
    cfg.out_dir = *out_dir;
}

inline std::string default_checkpoint_path(const io::RunConfig &cfg) {
  return cfg.out_dir + "/checkpoint.bin";
}

namespace detail {

inline llm::LlmConfig resolved_llm(const io::RunConfig &cfg) {
  llm::LlmConfig out = cfg.llm;
  if (out.cache_path.empty())
    out.cache_path = cfg.out_dir + "/llm_cache.jsonl";
  return out;
}

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline task::MoleculeDataset ingest(const io::RunConfig &cfg, io::IngestReport *report) {
  return io::ingest_csv(cfg.dataset_csv, cfg.smiles_column, cfg.label_columns, cfg.card.name,
                        cfg.card.task_type, report);
}

inline std::vector<chem::MolecularGraph> featurize_all(const task::MoleculeDataset &ds) {
  std::vector<chem::MolecularGraph> graphs;
  graphs.reserve(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    graphs.push_back(with_context("record " + std::to_string(i) + ": ", [&] {
      return chem::featurize(chem::parse_smiles(ds.records[i].smiles));
    }));
  }
  return graphs;
}

} // namespace detail

struct DescribeSummary {
  std::size_t written = 0;
  std::size_t skipped = 0;
  io::IngestReport ingest;
  std::size_t backend_calls = 0;
  std::string store_path;
};

// One MD-Text per dataset molecule, persisted as JSONL. Re-running touches
// only molecules the store does not hold yet.
inline DescribeSummary cmd_describe(const io::RunConfig &cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  DescribeSummary summary;
  task::MoleculeDataset ds = detail::ingest(cfg, &summary.ingest);

  llm::Gateway gateway(detail::resolved_llm(cfg));
  summary.store_path = io::mdtext_store_path(cfg.out_dir, cfg.card.name);

  std::set<std::string> existing;
  std::string existing_hash;
  for (const prompting::MDText &text : io::load_mdtext_store(summary.store_path)) {
    existing.insert(text.smiles);
    if (existing_hash.empty())
      existing_hash = text.template_hash;
  }

  prompting::DescriptionSession session =
      prompting::start_description_session(cfg.card, gateway, dsm::all_metric_ids());
  if (!existing_hash.empty() && existing_hash != session.template_hash)
    throw ValueError("md-text store " + summary.store_path +
                     " was generated from a different template; describe into a fresh "
                     "output directory");

  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const std::string &smiles = ds.records[i].smiles;
    if (existing.count(smiles)) {
      ++summary.skipped;
      continue;
    }
    prompting::MDText text =
        with_context("molecule " + std::to_string(i) + " (" + smiles + "): ",
                     [&] { return prompting::generate_md_text(session, gateway, smiles); });
    io::append_mdtext(summary.store_path, text);
    existing.insert(smiles);
    ++summary.written;
  }
  summary.backend_calls = gateway.backend_calls();
  return summary;
}

struct PretrainSummary {
  int best_epoch = -1;
  double best_val_loss = 0.0;
  double final_val_g2t = 0.0;
  std::size_t pairs = 0;
  std::string checkpoint_path;
  std::string history_path;
};

// Contrastive pretraining over (graph, description) pairs; saves the best
// validation snapshot and a per-epoch history CSV.
inline PretrainSummary cmd_pretrain(const io::RunConfig &cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  task::MoleculeDataset ds = detail::ingest(cfg, nullptr);

  std::string store_path = io::mdtext_store_path(cfg.out_dir, cfg.card.name);
  std::map<std::string, prompting::MDText> bodies;
  for (prompting::MDText &text : io::load_mdtext_store(store_path))
    bodies.emplace(text.smiles, std::move(text)); // first occurrence wins

  std::vector<std::string> missing;
  for (const task::DatasetRecord &rec : ds.records)
    if (!bodies.count(rec.smiles))
      missing.push_back(rec.smiles);
  if (!missing.empty()) {
    std::string list;
    for (const std::string &s : missing)
      list += (list.empty() ? "" : ", ") + s;
    throw ValueError("md-text store " + store_path + " is missing " +
                     std::to_string(missing.size()) + " molecule(s): " + list +
                     "; run describe first");
  }

  std::string tmpl_hash;
  for (const task::DatasetRecord &rec : ds.records) {
    const prompting::MDText &text = bodies.at(rec.smiles);
    if (tmpl_hash.empty())
      tmpl_hash = text.template_hash;
    else if (tmpl_hash != text.template_hash)
      throw ValueError("md-text store " + store_path +
                       " mixes entries from different templates; regenerate it");
  }

  std::vector<align::AlignmentPair> pairs;
  pairs.reserve(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    align::AlignmentPair pair;
    pair.graph = with_context("record " + std::to_string(i) + ": ", [&] {
      return chem::featurize(chem::parse_smiles(ds.records[i].smiles));
    });
    pair.tokens = enc::tokenize(bodies.at(ds.records[i].smiles).body,
                                cfg.model.text.vocab_buckets);
    pairs.push_back(std::move(pair));
  }

  nn::ParameterStore store;
  nn::Rng init_rng = nn::Rng(cfg.seed).fork(1);
  align::init_alignment_model(store, cfg.model, init_rng);
  align::PretrainResult result = align::pretrain(pairs, cfg.align, cfg.model, store);

  PretrainSummary summary;
  summary.pairs = pairs.size();
  summary.best_epoch = result.best_epoch;
  summary.best_val_loss = result.best_val_loss;
  if (!result.history.empty())
    summary.final_val_g2t = result.history.back().val_g2t;

  io::Checkpoint ckpt;
  ckpt.config_digest = io::model_config_digest(cfg.model);
  ckpt.tensors = result.best_snapshot;
  summary.checkpoint_path = default_checkpoint_path(cfg);
  io::save_checkpoint(summary.checkpoint_path, ckpt);

  summary.history_path = cfg.out_dir + "/history.csv";
  std::ofstream hist(summary.history_path, std::ios::trunc);
  if (!hist)
    throw IoError("cannot write history csv: " + summary.history_path);
  hist << "epoch,lr,train_loss,val_loss,val_g2t,val_t2g\n";
  for (const align::HistoryRow &row : result.history)
    hist << row.epoch << ',' << detail::format_metric(row.lr) << ','
         << detail::format_metric(row.train_loss) << ',' << detail::format_metric(row.val_loss)
         << ',' << detail::format_metric(row.val_g2t) << ','
         << detail::format_metric(row.val_t2g) << '\n';
  if (!hist)
    throw IoError("write to history csv failed: " + summary.history_path);
  return summary;
}

struct MetricRow {
  std::string task;
  double value = 0.0;
  std::uint64_t seed = 0;
};

struct FinetuneSummary {
  task::MetricKind metric = task::MetricKind::kAuc;
  double test_average = 0.0;
  double chosen_lr = 0.0;
  double best_val_metric = 0.0;
  std::vector<MetricRow> rows;
  std::string metrics_path;
  std::string model_path;
};

namespace detail {

struct ProtocolRun {
  task::FinetuneOutcome outcome;
  task::EvalResult test;
};

// shared by finetune and eval: split, fine-tune at one seed, score the test
// partition
inline ProtocolRun run_protocol(const io::RunConfig &cfg, const task::MoleculeDataset &ds,
                                const std::vector<chem::MolecularGraph> &graphs,
                                const io::Checkpoint &ckpt, const task::SplitAssignment &split,
                                std::uint64_t seed) {
  task::FinetuneConfig fcfg = cfg.finetune;
  fcfg.seed = seed;
  ProtocolRun run;
  run.outcome = task::finetune(ckpt.tensors, cfg.model.gin, ds, split, fcfg);
  nn::ParameterStore store;
  for (const auto &[name, tensor] : run.outcome.best_params)
    store.add(name, tensor);
  run.test = task::evaluate(store, run.outcome.model, ds, graphs, split.test,
                            run.outcome.metric, fcfg.batch_size);
  return run;
}

inline task::SplitAssignment split_dataset(const io::RunConfig &cfg,
                                           const task::MoleculeDataset &ds) {
  std::vector<std::string> smiles;
  smiles.reserve(ds.records.size());
  for (const task::DatasetRecord &rec : ds.records)
    smiles.push_back(rec.smiles);
  task::SplitAssignment split = task::scaffold_split(smiles, cfg.split, cfg.seed);
  if (split.test.empty())
    throw ValueError("test partition is empty; the dataset is too small for the configured "
                     "split ratios");
  return split;
}

inline void write_metric_rows(const std::string &path, const io::RunConfig &cfg,
                              task::MetricKind metric, const std::vector<MetricRow> &rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write metrics csv: " + path);
  out << "dataset,task,metric,value,seed\n";
  for (const MetricRow &row : rows)
    out << cfg.card.name << ',' << row.task << ',' << task::metric_name(metric) << ','
        << format_metric(row.value) << ',' << row.seed << '\n';
  if (!out)
    throw IoError("write to metrics csv failed: " + path);
}

inline void collect_rows(std::vector<MetricRow> &rows, const io::RunConfig &cfg,
                         const task::EvalResult &test, std::uint64_t seed) {
  for (std::size_t t = 0; t < test.per_task.size(); ++t) {
    if (std::isnan(test.per_task[t]))
      continue; // single-class task on this partition
    MetricRow row;
    row.task = cfg.label_columns[t];
    row.value = test.per_task[t];
    row.seed = seed;
    rows.push_back(row);
  }
  MetricRow avg;
  avg.task = "average";
  avg.value = test.average;
  avg.seed = seed;
  rows.push_back(avg);
}

inline io::Checkpoint load_matching_checkpoint(const io::RunConfig &cfg,
                                               const std::string &path) {
  io::Checkpoint ckpt = io::load_checkpoint(path);
  std::string expected = io::model_config_digest(cfg.model);
  if (ckpt.config_digest != expected)
    throw ConfigError("checkpoint " + path + " was built from a different model "
                      "configuration (digest " + ckpt.config_digest.substr(0, 12) +
                      ", expected " + expected.substr(0, 12) + ")");
  return ckpt;
}

} // namespace detail

// Scaffold split, lr grid fine-tune from the pretrained encoder, test-set
// metrics CSV, and the fine-tuned weights as a second checkpoint.
inline FinetuneSummary cmd_finetune(const io::RunConfig &cfg, std::string checkpoint_path = "") {
  std::filesystem::create_directories(cfg.out_dir);
  if (checkpoint_path.empty())
    checkpoint_path = default_checkpoint_path(cfg);
  task::MoleculeDataset ds = detail::ingest(cfg, nullptr);
  io::Checkpoint ckpt = detail::load_matching_checkpoint(cfg, checkpoint_path);
  task::SplitAssignment split = detail::split_dataset(cfg, ds);
  std::vector<chem::MolecularGraph> graphs = detail::featurize_all(ds);

  detail::ProtocolRun run = detail::run_protocol(cfg, ds, graphs, ckpt, split, cfg.seed);

  FinetuneSummary summary;
  summary.metric = run.outcome.metric;
  summary.test_average = run.test.average;
  summary.chosen_lr = run.outcome.chosen_lr;
  summary.best_val_metric = run.outcome.best_val_metric;
  detail::collect_rows(summary.rows, cfg, run.test, cfg.seed);

  summary.metrics_path = cfg.out_dir + "/metrics.csv";
  detail::write_metric_rows(summary.metrics_path, cfg, summary.metric, summary.rows);

  io::Checkpoint tuned;
  tuned.config_digest = ckpt.config_digest;
  tuned.tensors = run.outcome.best_params;
  summary.model_path = cfg.out_dir + "/finetuned.bin";
  io::save_checkpoint(summary.model_path, tuned);
  return summary;
}

struct EvalSummary {
  task::MetricKind metric = task::MetricKind::kAuc;
  task::SeedSummary averages; // mean and spread of the per-seed test averages
  int seeds = 0;
  std::vector<MetricRow> rows;
  std::string metrics_path;
};

// Repeats the fine-tune protocol across eval_seeds seeds on one fixed split
// and reports per-seed rows plus their mean and spread.
inline EvalSummary cmd_eval(const io::RunConfig &cfg, std::string checkpoint_path = "") {
  std::filesystem::create_directories(cfg.out_dir);
  if (checkpoint_path.empty())
    checkpoint_path = default_checkpoint_path(cfg);
  task::MoleculeDataset ds = detail::ingest(cfg, nullptr);
  io::Checkpoint ckpt = detail::load_matching_checkpoint(cfg, checkpoint_path);
  task::SplitAssignment split = detail::split_dataset(cfg, ds);
  std::vector<chem::MolecularGraph> graphs = detail::featurize_all(ds);

  EvalSummary summary;
  summary.seeds = cfg.eval_seeds;
  std::vector<double> averages;
  for (int k = 0; k < cfg.eval_seeds; ++k) {
    std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
    detail::ProtocolRun run = detail::run_protocol(cfg, ds, graphs, ckpt, split, seed);
    summary.metric = run.outcome.metric;
    detail::collect_rows(summary.rows, cfg, run.test, seed);
    averages.push_back(run.test.average);
  }
  summary.averages = task::summarize_runs(averages);
  summary.metrics_path = cfg.out_dir + "/eval_metrics.csv";
  detail::write_metric_rows(summary.metrics_path, cfg, summary.metric, summary.rows);
  return summary;
}

// descriptor report for a single molecule, every registry metric included
inline dsm::DescriptorReport cmd_calibrate(const std::string &smiles) {
  chem::Molecule mol = chem::parse_smiles(smiles);
  return dsm::compute_report(mol, dsm::all_metric_ids());
}

// scaffold split indices as a JSON document
inline std::string cmd_split(const io::RunConfig &cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  task::MoleculeDataset ds = detail::ingest(cfg, nullptr);
  task::SplitAssignment split = detail::split_dataset(cfg, ds);
  nlohmann::json doc = {{"train", split.train}, {"valid", split.valid}, {"test", split.test}};
  std::string path = cfg.out_dir + "/split.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write split file: " + path);
  out << doc.dump() << '\n';
  if (!out)
    throw IoError("write to split file failed: " + path);
  return path;
}

} // namespace molalign::cli
