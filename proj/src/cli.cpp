#include "martnet/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "martnet/report.hpp"
#include "martnet/verify.hpp"

namespace martnet {

namespace {

namespace fs = std::filesystem;

RunConfig load_or_die(const CliOptions& opt) {
  return load_run_config(opt.config_path, opt.overrides);
}

std::string checkpoint_name(Index epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "checkpoint_%06lld.json", static_cast<long long>(epoch));
  return buf;
}

struct OracleData {
  std::vector<RefValue> refs;
  OracleAttachment attachment;
};

OracleData build_oracle(const RunConfig& cfg, const EvalGrid& grid, Index threads,
                        const std::string& out_dir) {
  OracleData data;
  const std::string cache = out_dir + "/oracle_cache.json";
  data.refs = cached_reference_grid(cache, cfg.benchmark_variant(), cfg.d, cfg.T, 0.0, grid,
                                    cfg.make_oracle_config(threads));
  data.attachment.reference.reserve(data.refs.size());
  double denom = 0.0;
  for (const auto& rv : data.refs) {
    data.attachment.reference.push_back(rv.value);
    denom += std::abs(rv.value);
  }
  data.attachment.denom = denom;
  return data;
}

void dump_curves(const std::string& out_dir, const EvalGrid& grid,
                 const std::vector<double>& candidate, const std::vector<RefValue>* refs) {
  write_curves(out_dir + "/curves_e1.csv", grid, 0, candidate, refs);
  write_curves(out_dir + "/curves_diag.csv", grid, 1, candidate, refs);
}

}  // namespace

int cli_train(const CliOptions& opt) {
  RunConfig cfg;
  try {
    cfg = load_or_die(opt);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    const ProblemSpec spec = cfg.make_problem();
    const TrainConfig tc = cfg.make_train_config();
    tc.validate();
    fs::create_directories(cfg.out_dir);

    const EvalGrid grid = build_eval_grid(spec.d, cfg.points_per_segment);
    OracleData oracle;
    const bool with_oracle = cfg.oracle_enabled;
    if (with_oracle) oracle = build_oracle(cfg, grid, opt.threads, cfg.out_dir);

    HistoryWriter history(cfg.out_dir + "/history.csv", cfg.timing);
    const EpochCallback on_epoch = [&](const TrainState& state, const TrainingRecord& rec) {
      history.append(rec);
      if (cfg.checkpoint_every > 0 && (rec.epoch + 1) % cfg.checkpoint_every == 0) {
        save_checkpoint(cfg.out_dir + "/" + checkpoint_name(rec.epoch + 1), state, cfg);
      }
    };

    TrainState state;
    try {
      state = train(spec, tc, with_oracle ? &oracle.attachment : nullptr, on_epoch);
    } catch (const TrainAbortError& e) {
      std::cerr << e.what() << " (last epoch " << e.last.epoch << ": |G|=" << e.last.mart_loss
                << ", mean-of-value=" << e.last.mean_value << ")\n";
      return 1;
    }

    save_checkpoint(cfg.out_dir + "/checkpoint_final.json", state, cfg);
    const std::vector<double> candidate = candidate_values(state.value, grid);
    dump_curves(cfg.out_dir, grid, candidate, with_oracle ? &oracle.refs : nullptr);
    const TrainingRecord last = state.history.back();
    write_metrics(cfg.out_dir + "/metrics.json", last.rel_error, last, tc.epochs);

    std::cout << "train " << cfg.run_id << ": epochs=" << tc.epochs
              << " mart_loss=" << last.mart_loss << " mean_value=" << last.mean_value;
    if (std::isfinite(last.rel_error)) std::cout << " rel_error=" << last.rel_error;
    std::cout << " out=" << cfg.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "train failed: " << e.what() << "\n";
    return 1;
  }
}

int cli_eval(const CliOptions& opt) {
  RunConfig cfg;
  try {
    cfg = load_or_die(opt);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    MARTNET_REQUIRE(!opt.checkpoint_path.empty(), "eval: --checkpoint is required");
    const ProblemSpec spec = cfg.make_problem();
    const TrainState state = load_checkpoint(opt.checkpoint_path, spec);
    fs::create_directories(cfg.out_dir);

    const EvalGrid grid = build_eval_grid(spec.d, cfg.points_per_segment);
    const OracleData oracle = build_oracle(cfg, grid, opt.threads, cfg.out_dir);
    const std::vector<double> candidate = candidate_values(state.value, grid);
    const double rel = relative_error(candidate, oracle.attachment.reference);

    dump_curves(cfg.out_dir, grid, candidate, &oracle.refs);
    TrainingRecord last;
    last.epoch = state.epoch;
    last.rel_error = rel;
    write_metrics(cfg.out_dir + "/metrics.json", rel, last, state.epoch);
    std::cout << "eval: rel_error=" << rel << " epochs=" << state.epoch
              << " out=" << cfg.out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "eval failed: " << e.what() << "\n";
    return 1;
  }
}

int cli_verify(const CliOptions& opt) {
  const int failures = run_verify_battery(std::cout, opt.threads);
  if (failures > 0) {
    std::cout << failures << " check(s) failed\n";
    return 1;
  }
  std::cout << "all checks passed\n";
  return 0;
}

}  // namespace martnet
