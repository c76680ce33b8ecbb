#include <CLI11.hpp>

#include "dcnn/commands.hpp"
#include "dcnn/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dcnn - fundus-image classifier toolkit"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "fill the split column of a manifest");
  std::string pre_manifest, pre_out;
  std::vector<double> pre_ratios{0.8, 0.1, 0.1};
  std::uint64_t pre_seed = 7;
  bool pre_no_stratify = false;
  prepare->add_option("--manifest", pre_manifest, "input manifest CSV")->required();
  prepare->add_option("--ratios", pre_ratios, "train,val,test ratios")->expected(3);
  prepare->add_option("--seed", pre_seed, "split seed");
  prepare->add_option("--out", pre_out, "output manifest path")->required();
  prepare->add_flag("--no-stratify", pre_no_stratify, "split without per-class stratification");

  // train
  auto* train = app.add_subcommand("train", "train a model from a run config");
  std::string train_config;
  train->add_option("--config", train_config, "run config JSON")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
  std::string eval_config, eval_ckpt, eval_split = "test", eval_out;
  evaluate->add_option("--config", eval_config, "run config JSON")->required();
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  evaluate->add_option("--split", eval_split, "train|val|test");
  evaluate->add_option("--out", eval_out, "output directory")->required();

  // finetune
  auto* finetune = app.add_subcommand("finetune", "fine-tune a checkpoint with frozen layers");
  std::string ft_config, ft_ckpt, ft_freeze = "head_only";
  finetune->add_option("--config", ft_config, "run config JSON")->required();
  finetune->add_option("--checkpoint", ft_ckpt, "checkpoint file")->required();
  finetune->add_option("--freeze", ft_freeze,
                       "head_only|all|last_block or comma-separated trainable prefixes");

  // report
  auto* report = app.add_subcommand("report", "render SVG plots and t-SNE for a run directory");
  std::string report_dir;
  report->add_option("--run", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return dcnn::cli::kExitUsage;
  }

  if (prepare->parsed())
    return dcnn::cli::cmd_prepare(pre_manifest,
                                  {pre_ratios[0], pre_ratios[1], pre_ratios[2]}, pre_seed,
                                  !pre_no_stratify, pre_out);
  if (train->parsed()) return dcnn::cli::cmd_train(train_config);
  if (evaluate->parsed())
    return dcnn::cli::cmd_evaluate(eval_config, eval_ckpt, eval_split, eval_out);
  if (finetune->parsed()) return dcnn::cli::cmd_finetune(ft_config, ft_ckpt, ft_freeze);
  if (report->parsed()) return dcnn::cli::cmd_report(report_dir);
  return dcnn::cli::kExitUsage;
}
