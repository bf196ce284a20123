#include "martnet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace martnet {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

Index parse_index(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<Index>(x);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> table = {
      {"problem.variant", [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           parse_variant(v);
         } catch (const std::exception&) {
           throw ConfigError("config: key '" + k + "' has unknown variant '" + v + "'");
         }
         c.variant = v;
       }},
      {"problem.d", [](RunConfig& c, const std::string& k, const std::string& v) { c.d = parse_index(k, v); }},
      {"problem.T", [](RunConfig& c, const std::string& k, const std::string& v) { c.T = parse_double(k, v); }},
      {"problem.control_halfwidth",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.control_halfwidth = parse_double(k, v); }},
      {"rdo.law", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "gaussian" && v != "three_point") {
           throw ConfigError("config: key '" + k + "' must be gaussian or three_point");
         }
         c.law = v;
       }},
      {"rdo.r", [](RunConfig& c, const std::string& k, const std::string& v) { c.r = parse_double(k, v); }},
      {"paths.N", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_steps = parse_index(k, v); }},
      {"paths.M", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_paths = parse_index(k, v); }},
      {"paths.points_per_segment",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.points_per_segment = parse_index(k, v); }},
      {"paths.freeze_paths",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.freeze_paths = parse_bool(k, v); }},
      {"objective.g_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "vector" && v != "scalar") {
           throw ConfigError("config: key '" + k + "' must be vector or scalar");
         }
         c.g_mode = v;
       }},
      {"objective.set_penalty_weight",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.set_penalty_weight = parse_double(k, v); }},
      {"objective.adversarial_width",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.adversarial_width = parse_index(k, v); }},
      {"objective.paired_gradient",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.paired_gradient = parse_bool(k, v); }},
      {"trainer.I", [](RunConfig& c, const std::string& k, const std::string& v) { c.epochs = parse_index(k, v); }},
      {"trainer.J",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.descent_steps = parse_index(k, v); }},
      {"trainer.K",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.ascent_steps = parse_index(k, v); }},
      {"trainer.lambda0",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda0 = parse_double(k, v); }},
      {"trainer.lambda_cap",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.lambda_cap = parse_double(k, v); }},
      {"trainer.delta4",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.delta4 = parse_double(k, v); }},
      {"trainer.rmsprop_decay",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.rmsprop_decay = parse_double(k, v); }},
      {"trainer.rmsprop_eps",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.rmsprop_eps = parse_double(k, v); }},
      {"trainer.batch_schedule", [](RunConfig& c, const std::string& k, const std::string& v) {
         parse_batch_schedule(v);  // validates
         c.batch_schedule = v;
         (void)k;
       }},
      {"trainer.checkpoint_every",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.checkpoint_every = parse_index(k, v); }},
      {"oracle.enabled",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_enabled = parse_bool(k, v); }},
      {"oracle.mc_samples",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.mc_samples = parse_index(k, v); }},
      {"oracle.mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "monte-carlo" && v != "quadrature-1d") {
           throw ConfigError("config: key '" + k + "' must be monte-carlo or quadrature-1d");
         }
         c.oracle_mode = v;
       }},
      {"oracle.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_seed = parse_u64(k, v); }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"output.timing",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.timing = parse_bool(k, v); }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"run_id", [](RunConfig& c, const std::string&, const std::string& v) { c.run_id = v; }},
  };
  return table;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value,
               const std::string& where) {
  const auto it = schema().find(key);
  if (it == schema().end()) {
    throw ConfigError("config: unknown key '" + key + "' (" + where + ")");
  }
  it->second(cfg, key, value);
}

}  // namespace

std::vector<BatchStage> parse_batch_schedule(const std::string& text) {
  std::vector<BatchStage> stages;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("config: batch schedule entry '" + item + "' is not frac:size");
    }
    BatchStage stage;
    stage.upto_frac = parse_double("trainer.batch_schedule", trim(item.substr(0, colon)));
    stage.size = parse_index("trainer.batch_schedule", trim(item.substr(colon + 1)));
    stages.push_back(stage);
  }
  if (stages.empty()) throw ConfigError("config: empty batch schedule");
  double prev = 0.0;
  for (const auto& s : stages) {
    if (s.upto_frac <= prev || s.size < 1) {
      throw ConfigError("config: batch schedule must have increasing fractions and sizes >= 1");
    }
    prev = s.upto_frac;
  }
  if (prev < 1.0) throw ConfigError("config: batch schedule must reach fraction 1.0");
  return stages;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read file '" + path + "'");
    std::string line, section;
    Index line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto comment = line.find_first_of("#;");
      if (comment != std::string::npos) line = line.substr(0, comment);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config: line " + std::to_string(line_no) + " of '" + path +
                          "' is not key = value");
      }
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
      apply_key(cfg, key, value, path + ":" + std::to_string(line_no));
    }
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: override '" + item + "' is not key=value");
    }
    apply_key(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)), "--set");
  }
  return cfg;
}

ProblemSpec RunConfig::make_problem() const {
  return make_benchmark(benchmark_variant(), d, T, control_halfwidth);
}

TrainConfig RunConfig::make_train_config() const {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.descent_steps = descent_steps;
  tc.ascent_steps = ascent_steps;
  tc.n_steps = n_steps;
  tc.n_paths = n_paths;
  tc.points_per_segment = points_per_segment;
  tc.adversarial_width = adversarial_width;
  tc.batch_schedule = parse_batch_schedule(batch_schedule);
  tc.lambda0 = lambda0;
  tc.lambda_cap = lambda_cap;
  tc.delta4 = delta4;
  tc.rms_decay = rmsprop_decay;
  tc.rms_eps = rmsprop_eps;
  tc.freeze_paths = freeze_paths;
  tc.g_mode = (g_mode == "scalar") ? GMode::ScalarSum : GMode::VectorNorm;
  tc.set_penalty_weight = set_penalty_weight;
  tc.paired_gradient = paired_gradient;
  tc.noise_kind = (law == "three_point") ? NoiseLaw::Kind::ThreePoint : NoiseLaw::Kind::Gaussian;
  tc.noise_r = r;
  tc.seed = seed;
  tc.record_timing = timing;
  return tc;
}

OracleConfig RunConfig::make_oracle_config(Index threads) const {
  OracleConfig oc;
  oc.mc_samples = mc_samples;
  oc.mode = (oracle_mode == "quadrature-1d") ? OracleConfig::Mode::Quadrature1d
                                             : OracleConfig::Mode::MonteCarlo;
  oc.seed = oracle_seed;
  oc.threads = threads;
  return oc;
}

}  // namespace martnet
