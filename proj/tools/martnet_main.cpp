// Command-line front end: train / eval / verify over a key=value config.
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "martnet/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Derivative-free martingale-residual solver for HJB equations"};
  app.require_subcommand(1);

  martnet::CliOptions opt;
  long long threads = 1;
  long long seed = -1;
  std::string out_dir;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "Config file (key = value, INI sections)");
    cmd->add_option("--set", opt.overrides, "Override key=value (repeatable)");
    cmd->add_option("--threads", threads, "Worker threads (1 = fully sequential)");
    cmd->add_option("--seed", seed, "Override the run seed");
    cmd->add_option("--out", out_dir, "Override the output directory");
  };

  CLI::App* train = app.add_subcommand("train", "Run the adversarial training loop");
  add_common(train);
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint against the oracle");
  add_common(eval);
  eval->add_option("--checkpoint", opt.checkpoint_path, "Checkpoint JSON to evaluate")
      ->required();
  CLI::App* verify = app.add_subcommand("verify", "Run the fast invariant battery");
  add_common(verify);

  CLI11_PARSE(app, argc, argv);

  opt.threads = static_cast<martnet::Index>(threads > 0 ? threads : 1);
  if (seed >= 0) opt.overrides.push_back("seed=" + std::to_string(seed));
  if (!out_dir.empty()) opt.overrides.push_back("output.dir=" + out_dir);

  if (train->parsed()) return martnet::cli_train(opt);
  if (eval->parsed()) return martnet::cli_eval(opt);
  return martnet::cli_verify(opt);
}
