#include <CLI11.hpp>

#include "termspan/cli.hpp"

int main(int argc, char** argv) {
  termspan::CliOptions opts;

  CLI::App app{"termspan: nested term extraction by span classification and ranking"};
  app.set_version_flag("--version", std::string("termspan ") + termspan::kToolVersion);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", opts.corpus,
                    "corpus file(s): GENIA-style XML or line-JSON; relative paths also "
                    "resolve against $TERMSPAN_DATA");
    cmd->add_option("--config", opts.config_file, "config file (key: value per line)");
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--k", opts.k, "maximum span length");
    cmd->add_option("--alpha", opts.alpha, "term ratio for top-K selection");
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--features", opts.features,
                    "comma list of feature sources: base,pos,pretrained,vectors")
        ->capture_default_str();
    cmd->add_option("--set", opts.set_overrides, "config override, e.g. --set \"Batch Size=10\"");
    cmd->add_flag("--quiet", opts.quiet, "suppress per-epoch progress");
  };

  CLI::App* stats = app.add_subcommand("stats", "corpus statistics and term length distribution");
  add_common(stats);

  CLI::App* train = app.add_subcommand("train", "two-stage training; writes a checkpoint");
  add_common(train);
  train->add_option("--train-file", opts.train_file, "pre-split training corpus");
  train->add_option("--dev-file", opts.dev_file, "pre-split development corpus");
  train->add_option("--test-file", opts.test_file, "pre-split test corpus (recorded in the manifest)");
  train->add_option("--pretrained", opts.pretrained_file, "pretrained word vector file");
  train->add_option("--vectors", opts.vectors_file, "per-token external vector file");
  train->add_option("--train-frac", opts.train_fraction, "train fraction (default 0.9)");
  train->add_option("--dev-frac", opts.dev_fraction, "dev fraction (default 0.05)");
  train->add_option("--test-frac", opts.test_fraction, "test fraction (default 0.05)");

  CLI::App* predict = app.add_subcommand("predict", "score and rank spans with a checkpoint");
  add_common(predict);
  predict->add_option("--checkpoint", opts.checkpoint, "trained checkpoint")->required();
  predict->add_option("--vectors", opts.vectors_file, "per-token external vector file");

  CLI::App* eval = app.add_subcommand("eval", "exact-match evaluation of a prediction file");
  add_common(eval);
  eval->add_option("--pred", opts.predictions_file, "predictions.jsonl from predict")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "term-ratio or max-length sweeps");
  add_common(sweep);
  sweep->add_option("--axis", opts.axis, "ratio or length")->capture_default_str();
  sweep->add_option("--checkpoint", opts.checkpoint, "trained checkpoint");
  sweep->add_flag("--restrict", opts.restrict_mode,
                  "length axis: restrict one checkpoint instead of retraining");
  sweep->add_option("--min-k", opts.sweep_min, "length axis lower bound")->capture_default_str();
  sweep->add_option("--max-k", opts.sweep_max, "length axis upper bound")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  for (auto* cmd : {stats, train, predict, eval, sweep}) {
    if (cmd->parsed()) {
      opts.command = cmd->get_name();
      break;
    }
  }
  return termspan::run_cli(opts);
}
