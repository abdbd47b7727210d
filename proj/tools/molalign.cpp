#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "molalign/cli/commands.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool mock_llm = false;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
  cmd->add_option("--config", flags.config_path, "run configuration json")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", [&flags](const std::vector<std::string> &vals) {
        flags.seed = std::stoull(vals.at(0));
        return true;
      },
      "override the configured seed");
  cmd->add_flag("--mock-llm", flags.mock_llm, "force the deterministic offline mock");
  cmd->add_option("--out", [&flags](const std::vector<std::string> &vals) {
        flags.out_dir = vals.at(0);
        return true;
      },
      "override the configured output directory");
}

molalign::io::RunConfig load_with_flags(const CommonFlags &flags) {
  molalign::io::RunConfig cfg = molalign::io::load_run_config(flags.config_path);
  molalign::cli::apply_overrides(cfg, flags.seed, flags.mock_llm, flags.out_dir);
  return cfg;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"molecular graph-text alignment pipeline"};
  app.require_subcommand(1);

  CommonFlags describe_flags;
  CLI::App *describe = app.add_subcommand("describe", "generate one description per molecule");
  add_common(describe, describe_flags);

  CommonFlags pretrain_flags;
  CLI::App *pretrain = app.add_subcommand("pretrain", "contrastive graph-text pretraining");
  add_common(pretrain, pretrain_flags);

  CommonFlags finetune_flags;
  std::string finetune_ckpt;
  CLI::App *finetune = app.add_subcommand("finetune", "fine-tune on the property task");
  add_common(finetune, finetune_flags);
  finetune->add_option("--checkpoint", finetune_ckpt, "pretrained checkpoint path");

  CommonFlags eval_flags;
  std::string eval_ckpt;
  CLI::App *evalcmd = app.add_subcommand("eval", "multi-seed fine-tune evaluation");
  add_common(evalcmd, eval_flags);
  evalcmd->add_option("--checkpoint", eval_ckpt, "pretrained checkpoint path");

  std::string calibrate_smiles;
  CLI::App *calibrate = app.add_subcommand("calibrate", "descriptor report for one SMILES");
  calibrate->add_option("smiles", calibrate_smiles, "molecule SMILES")->required();

  CommonFlags split_flags;
  CLI::App *split = app.add_subcommand("split", "emit scaffold split indices");
  add_common(split, split_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (describe->parsed()) {
      auto cfg = load_with_flags(describe_flags);
      auto s = molalign::cli::cmd_describe(cfg);
      std::printf("ingested %zu molecules (%zu dropped)\n", s.ingest.kept, s.ingest.dropped);
      std::printf("descriptions written=%zu skipped=%zu backend_calls=%zu\n", s.written,
                  s.skipped, s.backend_calls);
      std::printf("store: %s\n", s.store_path.c_str());
    } else if (pretrain->parsed()) {
      auto cfg = load_with_flags(pretrain_flags);
      auto s = molalign::cli::cmd_pretrain(cfg);
      std::printf("pretrained on %zu pairs; best epoch %d val_loss %.6f\n", s.pairs,
                  s.best_epoch, s.best_val_loss);
      std::printf("checkpoint: %s\nhistory: %s\n", s.checkpoint_path.c_str(),
                  s.history_path.c_str());
    } else if (finetune->parsed()) {
      auto cfg = load_with_flags(finetune_flags);
      auto s = molalign::cli::cmd_finetune(cfg, finetune_ckpt);
      std::printf("test %s = %.6f (lr %g, val %.6f)\n", molalign::task::metric_name(s.metric),
                  s.test_average, s.chosen_lr, s.best_val_metric);
      std::printf("metrics: %s\nmodel: %s\n", s.metrics_path.c_str(), s.model_path.c_str());
    } else if (evalcmd->parsed()) {
      auto cfg = load_with_flags(eval_flags);
      auto s = molalign::cli::cmd_eval(cfg, eval_ckpt);
      std::printf("test %s over %d seeds: mean %.6f std %.6f\n",
                  molalign::task::metric_name(s.metric), s.seeds, s.averages.mean,
                  s.averages.stddev);
      std::printf("metrics: %s\n", s.metrics_path.c_str());
    } else if (calibrate->parsed()) {
      auto report = molalign::cli::cmd_calibrate(calibrate_smiles);
      auto lines = molalign::dsm::format_calibrated(report);
      for (const auto &line : lines.lines)
        std::printf("%s\n", line.c_str());
    } else if (split->parsed()) {
      auto cfg = load_with_flags(split_flags);
      std::string path = molalign::cli::cmd_split(cfg);
      std::printf("split: %s\n", path.c_str());
    }
  } catch (const molalign::Error &e) {
    std::fprintf(stderr, "error: %s: %s\n", e.category().c_str(), e.what());
    return 1;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
