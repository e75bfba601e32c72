#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fmbeam/errors.hpp"

namespace fs = std::filesystem;
using namespace fmbeam::cli;

namespace {

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON run config; unknown keys are rejected");
  cmd->add_option("--seed", opts.seed, "Root seed; every component derives its stream from it");
  cmd->add_option("--out", opts.out,
                  "Output directory (overrides $" + std::string(kOutDirEnv) + " and the config)");
  cmd->add_option("--variant", opts.variant, "Window configuration: A (8/5) or B (3/10)")
      ->check(CLI::IsMember({"A", "B"}));
  cmd->add_option("--k", opts.ks, "Top-K values to report (repeatable)");
}

void log_line(const std::string& s) { std::cout << s << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fmbeam: vision-aided beam prediction with flow matching"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fmbeam 0.1.0");

  CommonOptions opts;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic frame dataset");
  add_common(sim, opts);

  TrainRequest train;
  auto* tr = app.add_subcommand("train", "Train a predictor and write losses.csv + checkpoints");
  add_common(tr, opts);
  tr->add_option("--data", train.data, "Frame dataset written by simulate")->required();
  tr->add_option("--model", train.model, "fm, rnn or lstm")
      ->check(CLI::IsMember({"fm", "rnn", "lstm"}));
  tr->add_option("--split", train.split, "Reuse an existing split manifest");
  tr->add_option("--resume", train.resume, "Continue from a training checkpoint");
  tr->add_option("--until", train.until, "Stop after this epoch (default: all)");

  EvalRequest eval;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out sequences");
  add_common(ev, opts);
  ev->add_option("--checkpoint", eval.checkpoint, "Checkpoint written by train")->required();
  ev->add_option("--data", eval.data, "Frame dataset")->required();
  ev->add_option("--split", eval.split, "Split manifest (default: split.json next to the checkpoint)");

  fs::path ablate_data;
  auto* ab = app.add_subcommand("ablate", "Train and evaluate the ablation grid");
  add_common(ab, opts);
  ab->add_option("--data", ablate_data, "Frame dataset")->required();

  std::vector<fs::path> bench_ckpts;
  fs::path bench_data;
  auto* be = app.add_subcommand("bench", "Time single-sample inference of checkpoints");
  add_common(be, opts);
  be->add_option("--checkpoint", bench_ckpts, "Checkpoints to time (repeatable)")->required();
  be->add_option("--data", bench_data, "Frame dataset supplying input windows")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = resolve_config(opts);
    std::cout << "config fingerprint " << cfg.fingerprint() << '\n';
    if (sim->parsed()) {
      const auto r = cmd_simulate(cfg);
      std::cout << "wrote " << r.records << " records in " << r.sequences << " sequences to "
                << r.file.string() << " (dataset hash " << r.hash << ")\n";
    } else if (tr->parsed()) {
      const auto r = cmd_train(cfg, train, log_line);
      std::cout << "checkpoint " << r.checkpoint.string() << '\n';
    } else if (ev->parsed()) {
      const auto r = cmd_eval(cfg, eval);
      std::cout << r.model << " config " << r.config << ", " << r.n_test << " test windows\n";
      for (std::size_t i = 0; i < r.ks.size(); ++i) {
        std::cout << "ACC" << r.ks[i] << " per step:";
        for (double v : r.per_step[i]) std::cout << ' ' << v;
        std::cout << "  average " << r.average[i] << '\n';
      }
    } else if (ab->parsed()) {
      const auto grid = cmd_ablate(cfg, ablate_data, log_line);
      print_ablation_table(std::cout, grid);
    } else if (be->parsed()) {
      print_bench_table(std::cout, cmd_bench(cfg, bench_ckpts, bench_data));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
