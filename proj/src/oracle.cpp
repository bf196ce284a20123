#include "martnet/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "martnet/parallel.hpp"

namespace martnet {

namespace {
constexpr double kSqrtPi = 1.7724538509055160272981674833411;
constexpr Index kChunk = 16384;
}  // namespace

GaussHermite GaussHermite::make(Index n) {
  MARTNET_REQUIRE(n >= 2, "GaussHermite: need at least 2 nodes");
  Matrix jacobi = Matrix::Zero(n, n);
  for (Index k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    gh.weights[i] = kSqrtPi * v0 * v0;
  }
  return gh;
}

double GaussHermite::expectation(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (Index i = 0; i < nodes.size(); ++i) {
    acc += weights[i] * f(std::sqrt(2.0) * nodes[i]);
  }
  return acc / kSqrtPi;
}

namespace {

double terminal_of(BenchmarkVariant variant, const Vector& x) {
  if (variant == BenchmarkVariant::Oscillatory) return 1.0 + oscillatory_terminal_g(x);
  return 1.0 + smooth_terminal_g(x);
}

bool log_transformed(BenchmarkVariant variant) {
  // The heat-sanity equation is linear: its Feynman-Kac value is the plain
  // terminal expectation, no exponential change of variables.
  return variant != BenchmarkVariant::HeatSanity;
}

// Streaming log-sum-exp statistics of w_i: keeps max shift M plus
// S1 = sum exp(w - M) and S2 = sum exp(2(w - M)).
struct LseAcc {
  double shift = -std::numeric_limits<double>::infinity();
  double s1 = 0.0;
  double s2 = 0.0;
  long long n = 0;

  void add(double w) {
    if (w > shift) {
      const double scale = std::exp(shift - w);
      s1 *= scale;
      s2 *= scale * scale;
      shift = w;
    }
    const double e = std::exp(w - shift);
    s1 += e;
    s2 += e * e;
    ++n;
  }
  void merge(const LseAcc& o) {
    if (o.n == 0) return;
    if (o.shift > shift) {
      const double scale = std::exp(shift - o.shift);
      s1 = s1 * scale + o.s1;
      s2 = s2 * scale * scale + o.s2;
      shift = o.shift;
    } else {
      const double scale = std::exp(o.shift - shift);
      s1 += o.s1 * scale;
      s2 += o.s2 * scale * scale;
    }
    n += o.n;
  }
  // value = 1 - ln(mean exp(w)); se via the delta method, scale-free.
  RefValue log_value() const {
    const double nn = static_cast<double>(n);
    const double mean_log = shift + std::log(s1 / nn);
    const double ratio = s2 * nn / (s1 * s1);  // E[u^2]/E[u]^2 estimate
    const double rel_var = std::max(0.0, ratio - 1.0);
    RefValue rv;
    rv.value = 1.0 - mean_log;
    rv.se = std::sqrt(rel_var / nn);
    return rv;
  }
};

struct MeanAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  long long n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  void merge(const MeanAcc& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    n += o.n;
  }
  RefValue value() const {
    const double nn = static_cast<double>(n);
    const double mean = sum / nn;
    const double var = std::max(0.0, sum_sq / nn - mean * mean);
    return {mean, std::sqrt(var / nn)};
  }
};

}  // namespace

std::vector<RefValue> reference_grid(BenchmarkVariant variant, Index d, double T, double t,
                                     const Matrix& points, const OracleConfig& cfg) {
  MARTNET_REQUIRE(points.rows() == d, "reference_grid: point dimension mismatch");
  MARTNET_REQUIRE(t >= 0.0 && t <= T, "reference_grid: t outside [0, T]");
  const Index npts = points.cols();
  std::vector<RefValue> out(static_cast<size_t>(npts));

  const double tau = T - t;
  if (tau == 0.0) {
    for (Index p = 0; p < npts; ++p) out[static_cast<size_t>(p)] = {terminal_of(variant, points.col(p)), 0.0};
    return out;
  }

  if (cfg.mode == OracleConfig::Mode::Quadrature1d) {
    MARTNET_REQUIRE(d == 1, "reference_grid: quadrature mode is 1-D only");
    const GaussHermite gh = GaussHermite::make(128);
    const double scale = std::sqrt(2.0 * tau);  // sqrt(2) B_tau ~ N(0, 2 tau)
    for (Index p = 0; p < npts; ++p) {
      const double x0 = points(0, p);
      if (log_transformed(variant)) {
        const double mean = gh.expectation([&](double z) {
          Vector y(1);
          y[0] = x0 + scale * z;
          return std::exp(-(terminal_of(variant, y) - 1.0));
        });
        out[static_cast<size_t>(p)] = {1.0 - std::log(mean), 0.0};
      } else {
        const double mean = gh.expectation([&](double z) {
          Vector y(1);
          y[0] = x0 + scale * z;
          return terminal_of(variant, y);
        });
        out[static_cast<size_t>(p)] = {mean, 0.0};
      }
    }
    return out;
  }

  MARTNET_REQUIRE(cfg.mc_samples >= 2, "reference_grid: too few Monte-Carlo samples");
  const Index n_chunks = (cfg.mc_samples + kChunk - 1) / kChunk;
  const bool log_path = log_transformed(variant);
  const bool radial = variant != BenchmarkVariant::Oscillatory;

  // Per-chunk accumulators merged in chunk order: results do not depend on
  // the thread count.
  std::vector<std::vector<LseAcc>> lse(static_cast<size_t>(n_chunks));
  std::vector<std::vector<MeanAcc>> lin(static_cast<size_t>(n_chunks));

  RngStream root(cfg.seed);
  const double a = 2.0 * std::sqrt(2.0 * tau);  // coefficient of x.z in |y|^2
  const double bcoef = 2.0 * tau;
  Vector x_norm2(npts);
  for (Index p = 0; p < npts; ++p) x_norm2[p] = points.col(p).squaredNorm();

  parallel_shards(n_chunks, n_chunks, cfg.threads, [&](Index shard, Index, Index) {
    const Index begin = shard * kChunk;
    const Index count = std::min(kChunk, cfg.mc_samples - begin);
    RngStream st = root.split(static_cast<std::uint64_t>(shard));
    Matrix z(d, count);
    for (Index i = 0; i < count; ++i) z.col(i) = sample_gaussian(st, d);

    auto& lse_p = lse[static_cast<size_t>(shard)];
    auto& lin_p = lin[static_cast<size_t>(shard)];
    lse_p.assign(static_cast<size_t>(npts), LseAcc{});
    lin_p.assign(static_cast<size_t>(npts), MeanAcc{});

    if (radial) {
      // |x + sqrt(2 tau) z|^2 = |x|^2 + a x.z + 2 tau |z|^2: one GEMM per chunk.
      const Vector z_norm2 = z.colwise().squaredNorm();
      const Matrix proj = points.transpose() * z;  // npts x count
      for (Index p = 0; p < npts; ++p) {
        for (Index i = 0; i < count; ++i) {
          const double y2 = x_norm2[p] + a * proj(p, i) + bcoef * z_norm2[i];
          const double g = std::log(0.5 * (1.0 + y2));
          if (log_path) {
            lse_p[static_cast<size_t>(p)].add(-g);
          } else {
            lin_p[static_cast<size_t>(p)].add(1.0 + g);
          }
        }
      }
    } else {
      const double scale = std::sqrt(2.0 * tau);
      for (Index p = 0; p < npts; ++p) {
        for (Index i = 0; i < count; ++i) {
          const Vector y = points.col(p) + scale * z.col(i);
          const double g = oscillatory_terminal_g(y);
          if (log_path) {
            lse_p[static_cast<size_t>(p)].add(-g);
          } else {
            lin_p[static_cast<size_t>(p)].add(1.0 + g);
          }
        }
      }
    }
  });

  for (Index p = 0; p < npts; ++p) {
    if (log_path) {
      LseAcc acc;
      for (Index c = 0; c < n_chunks; ++c) acc.merge(lse[static_cast<size_t>(c)][static_cast<size_t>(p)]);
      out[static_cast<size_t>(p)] = acc.log_value();
    } else {
      MeanAcc acc;
      for (Index c = 0; c < n_chunks; ++c) acc.merge(lin[static_cast<size_t>(c)][static_cast<size_t>(p)]);
      out[static_cast<size_t>(p)] = acc.value();
    }
  }
  return out;
}

RefValue reference_value(BenchmarkVariant variant, Index d, double T, double t, const Vector& x,
                         const OracleConfig& cfg) {
  Matrix pts(d, 1);
  pts.col(0) = x;
  return reference_grid(variant, d, T, t, pts, cfg)[0];
}

double relative_error(const std::vector<double>& candidate,
                      const std::vector<double>& reference) {
  MARTNET_REQUIRE(candidate.size() == reference.size() && !candidate.empty(),
                  "relative_error: mismatched value lists");
  double num = 0.0, denom = 0.0;
  for (size_t i = 0; i < candidate.size(); ++i) {
    num += std::abs(candidate[i] - reference[i]);
    denom += std::abs(reference[i]);
  }
  if (denom == 0.0) throw std::domain_error("relative_error: reference values sum to zero");
  return num / denom;
}

RefValue socp_cost(const ProblemSpec& spec, const ControlNet& control, const Vector& x0,
                   Index n_rollouts, Index n_steps, RngStream rng, Index threads) {
  MARTNET_REQUIRE(n_rollouts >= 2 && n_steps >= 1, "socp_cost: need rollouts and steps");
  MARTNET_REQUIRE(x0.size() == spec.d, "socp_cost: x0 dimension mismatch");
  const double h = spec.T / static_cast<double>(n_steps);
  std::vector<double> totals(static_cast<size_t>(n_rollouts), 0.0);

  const Index n_shards = 64;
  parallel_shards(n_rollouts, n_shards, threads, [&](Index, Index begin, Index end) {
    const Index count = end - begin;
    Matrix x = x0.replicate(1, count);
    Vector cost = Vector::Zero(count);
    std::vector<RngStream> streams;
    streams.reserve(static_cast<size_t>(count));
    for (Index j = 0; j < count; ++j)
      streams.push_back(rng.split(static_cast<std::uint64_t>(begin + j)));
    for (Index n = 0; n < n_steps; ++n) {
      const double t = h * static_cast<double>(n);  // left-endpoint rule
      const Matrix u = control.control_batch(
          stack_time_state(Eigen::RowVectorXd::Constant(count, t), x));
      for (Index j = 0; j < count; ++j) {
        const Vector xj = x.col(j);
        const Vector uj = u.col(j);
        cost[j] += spec.cost(t, xj, uj) * h;
        const Vector db = std::sqrt(h) * sample_gaussian(streams[static_cast<size_t>(j)], spec.q);
        x.col(j) = xj + eval_drift(spec, t, xj, uj) * h +
                   eval_diffusion_apply(spec, t, xj, uj, db);
      }
    }
    for (Index j = 0; j < count; ++j) {
      totals[static_cast<size_t>(begin + j)] = cost[j] + spec.terminal(x.col(j));
    }
  });

  MeanAcc acc;
  for (const double v : totals) acc.add(v);
  return acc.value();
}

namespace {

nlohmann::json key_json(const OracleCacheKey& key) {
  return {{"variant", key.variant}, {"d", key.d},       {"T", key.T},
          {"t", key.t},             {"mc", key.mc_samples}, {"seed", key.seed},
          {"pps", key.points_per_segment}};
}

}  // namespace

bool load_oracle_cache(const std::string& path, const OracleCacheKey& key,
                       std::vector<RefValue>& out) {
  std::ifstream in(path);
  if (!in) return false;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  if (!doc.is_object() || doc.value("schema", 0) != 1) return false;
  if (doc["key"] != key_json(key)) return false;
  out.clear();
  for (const auto& row : doc["values"]) {
    out.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
  }
  return true;
}

void save_oracle_cache(const std::string& path, const OracleCacheKey& key,
                       const std::vector<RefValue>& values) {
  nlohmann::json doc;
  doc["schema"] = 1;
  doc["key"] = key_json(key);
  auto rows = nlohmann::json::array();
  for (const auto& v : values) rows.push_back({v.value, v.se});
  doc["values"] = std::move(rows);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream outf(tmp);
    MARTNET_REQUIRE(outf.good(), "save_oracle_cache: cannot open " + tmp);
    outf << doc.dump();
    outf.flush();
    MARTNET_REQUIRE(outf.good(), "save_oracle_cache: write failed for " + tmp);
  }
  MARTNET_REQUIRE(std::rename(tmp.c_str(), path.c_str()) == 0,
                  "save_oracle_cache: rename failed for " + path);
}

std::vector<RefValue> cached_reference_grid(const std::string& cache_path,
                                            BenchmarkVariant variant, Index d, double T, double t,
                                            const EvalGrid& grid, const OracleConfig& cfg) {
  OracleCacheKey key{variant_name(variant), d, T, t, cfg.mc_samples, cfg.seed, grid.per_segment};
  std::vector<RefValue> values;
  if (!cache_path.empty() && load_oracle_cache(cache_path, key, values)) return values;
  values = reference_grid(variant, d, T, t, grid.points, cfg);
  if (!cache_path.empty()) save_oracle_cache(cache_path, key, values);
  return values;
}

}  // namespace martnet
