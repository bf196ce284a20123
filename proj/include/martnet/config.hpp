#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "martnet/oracle.hpp"
#include "martnet/trainer.hpp"

namespace martnet {

// Raised for unreadable files, unknown keys, or value errors; the message
// carries the offending key/path for CLI diagnostics.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat dotted-key view of the run configuration. Files use an INI dialect:
// [section] headers with key = value lines, or fully dotted keys; '#' and ';'
// start comments. Every key is validated against the schema below; unknown
// keys are rejected.
struct RunConfig {
  // problem.*
  std::string variant = "smooth";
  Index d = 10;
  double T = 1.0;
  double control_halfwidth = 4.0;
  // rdo.*
  std::string law = "gaussian";
  double r = 1.7320508075688772;
  // paths.*
  Index n_steps = 50;            // paths.N
  Index n_paths = 1024;          // paths.M
  Index points_per_segment = 51;
  bool freeze_paths = false;
  // objective.*
  std::string g_mode = "vector";
  double set_penalty_weight = 0.0;
  Index adversarial_width = 64;
  bool paired_gradient = true;
  // trainer.*
  Index epochs = 500;
  Index descent_steps = 2;
  Index ascent_steps = 1;
  double lambda0 = 10.0;
  double lambda_cap = 1e3;
  double delta4 = 10.0;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  std::string batch_schedule = "0.5:128,1.0:256";
  Index checkpoint_every = 0;
  // oracle.*
  bool oracle_enabled = true;
  Index mc_samples = 1'000'000;
  std::string oracle_mode = "monte-carlo";
  std::uint64_t oracle_seed = 9001;
  // output.*
  std::string out_dir = "out";
  bool timing = true;
  // top level
  std::uint64_t seed = 1;
  std::string run_id = "run";

  // Assembled views.
  ProblemSpec make_problem() const;
  TrainConfig make_train_config() const;
  OracleConfig make_oracle_config(Index threads) const;
  BenchmarkVariant benchmark_variant() const { return parse_variant(variant); }
};

// path empty = defaults only. overrides are "key=value" strings applied after
// the file.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

std::vector<BatchStage> parse_batch_schedule(const std::string& text);

}  // namespace martnet
