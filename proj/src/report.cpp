#include "martnet/report.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace martnet {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& rows) {
  const Index r = static_cast<Index>(rows.size());
  MARTNET_REQUIRE(r > 0, "checkpoint: empty matrix");
  const Index c = static_cast<Index>(rows.at(0).size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<size_t>(i));
    MARTNET_REQUIRE(static_cast<Index>(row.size()) == c, "checkpoint: ragged matrix");
    for (Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<size_t>(j)).get<double>();
  }
  return m;
}

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from(const json& arr) {
  Vector v(static_cast<Index>(arr.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = arr.at(static_cast<size_t>(i)).get<double>();
  return v;
}

json mlp_json(const MlpNet& net) {
  json j;
  j["w"] = json::array();
  j["b"] = json::array();
  for (const auto& w : net.w) j["w"].push_back(matrix_json(w));
  for (const auto& b : net.b) j["b"].push_back(vector_json(b));
  return j;
}

MlpNet mlp_from(const json& j) {
  MlpNet net;
  for (const auto& w : j.at("w")) net.w.push_back(matrix_from(w));
  for (const auto& b : j.at("b")) net.b.push_back(vector_from(b));
  MARTNET_REQUIRE(net.w.size() == net.b.size() && !net.w.empty(), "checkpoint: bad layer lists");
  return net;
}

json rms_mlp_json(const RmsMlp& r) {
  json j;
  j["w"] = json::array();
  j["b"] = json::array();
  for (const auto& w : r.w) j["w"].push_back(matrix_json(w));
  for (const auto& b : r.b) j["b"].push_back(vector_json(b));
  return j;
}

RmsMlp rms_mlp_from(const json& j) {
  RmsMlp r;
  for (const auto& w : j.at("w")) r.w.push_back(matrix_from(w));
  for (const auto& b : j.at("b")) r.b.push_back(vector_from(b));
  return r;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state, const RunConfig& cfg) {
  json doc;
  doc["schema"] = 1;
  doc["problem"] = {{"variant", cfg.variant},
                    {"d", cfg.d},
                    {"T", cfg.T},
                    {"control_halfwidth", cfg.control_halfwidth}};
  doc["epoch"] = state.epoch;
  doc["lambda"] = state.lambda;
  doc["value"] = mlp_json(state.value.body);
  json control = mlp_json(state.control.body);
  control["lo"] = vector_json(state.control.lo);
  control["hi"] = vector_json(state.control.hi);
  control["squash"] = state.control.squash;
  doc["control"] = std::move(control);
  doc["adversarial"] = {{"w_t", vector_json(state.adversarial.w_t)},
                        {"w_x", matrix_json(state.adversarial.w_x)},
                        {"bias", vector_json(state.adversarial.bias)}};
  doc["rms"] = {{"value", rms_mlp_json(state.rms_value)},
                {"control", rms_mlp_json(state.rms_control)},
                {"adv",
                 {{"w_t", vector_json(state.rms_adv.w_t)},
                  {"w_x", matrix_json(state.rms_adv.w_x)},
                  {"bias", vector_json(state.rms_adv.bias)}}}};

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    MARTNET_REQUIRE(out.good(), "save_checkpoint: cannot open " + tmp);
    out << doc.dump();
    out.flush();
    MARTNET_REQUIRE(out.good(), "save_checkpoint: write failed for " + tmp);
  }
  MARTNET_REQUIRE(std::rename(tmp.c_str(), path.c_str()) == 0,
                  "save_checkpoint: rename failed for " + path);
}

TrainState load_checkpoint(const std::string& path, const ProblemSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot read '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    MARTNET_REQUIRE(doc.at("schema").get<int>() == 1, "load_checkpoint: unknown schema version");
    TrainState state;
    state.epoch = doc.at("epoch").get<Index>();
    state.lambda = doc.at("lambda").get<double>();
    state.value.body = mlp_from(doc.at("value"));
    state.value.terminal = spec.terminal;
    state.value.terminal_grad = spec.terminal_grad;
    state.value.horizon = spec.T;
    state.control.body = mlp_from(doc.at("control"));
    state.control.lo = vector_from(doc.at("control").at("lo"));
    state.control.hi = vector_from(doc.at("control").at("hi"));
    state.control.squash = doc.at("control").at("squash").get<bool>();
    state.adversarial.w_t = vector_from(doc.at("adversarial").at("w_t"));
    state.adversarial.w_x = matrix_from(doc.at("adversarial").at("w_x"));
    state.adversarial.bias = vector_from(doc.at("adversarial").at("bias"));
    state.rms_value = rms_mlp_from(doc.at("rms").at("value"));
    state.rms_control = rms_mlp_from(doc.at("rms").at("control"));
    state.rms_adv.w_t = vector_from(doc.at("rms").at("adv").at("w_t"));
    state.rms_adv.w_x = matrix_from(doc.at("rms").at("adv").at("w_x"));
    state.rms_adv.bias = vector_from(doc.at("rms").at("adv").at("bias"));

    MARTNET_REQUIRE(state.value.body.input_dim() == spec.d + 1,
                    "load_checkpoint: value network dimension differs from the configured problem");
    MARTNET_REQUIRE(state.control.body.output_dim() == spec.m,
                    "load_checkpoint: control network dimension differs from the configured problem");
    MARTNET_REQUIRE(state.adversarial.state_dim() == spec.d,
                    "load_checkpoint: adversarial network dimension differs from the configured problem");
    return state;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: '" + path + "' is missing fields: " + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

HistoryWriter::HistoryWriter(const std::string& path, bool timing)
    : out_(path), timing_(timing) {
  MARTNET_REQUIRE(out_.good(), "HistoryWriter: cannot open " + path);
  out_ << "epoch,mart_loss,mean_value,rel_error,wall_time_s\n";
}

void HistoryWriter::append(const TrainingRecord& rec) {
  out_ << rec.epoch << ',' << format_double(rec.mart_loss) << ','
       << format_double(rec.mean_value) << ',';
  if (std::isfinite(rec.rel_error)) out_ << format_double(rec.rel_error);
  out_ << ',';
  if (timing_) out_ << format_double(rec.wall_time_s);
  out_ << '\n';
  out_.flush();
}

void write_curves(const std::string& path, const EvalGrid& grid, int segment,
                  const std::vector<double>& candidate, const std::vector<RefValue>* reference) {
  std::ofstream out(path);
  MARTNET_REQUIRE(out.good(), "write_curves: cannot open " + path);
  out << "s,v_hat,v_ref,ref_se\n";
  for (Index i = 0; i < grid.size(); ++i) {
    if (grid.segment[static_cast<size_t>(i)] != segment) continue;
    out << format_double(grid.params[static_cast<size_t>(i)]) << ','
        << format_double(candidate[static_cast<size_t>(i)]) << ',';
    if (reference) {
      out << format_double((*reference)[static_cast<size_t>(i)].value) << ','
          << format_double((*reference)[static_cast<size_t>(i)].se);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

void write_metrics(const std::string& path, double rel_error, const TrainingRecord& last,
                   Index epochs) {
  json doc;
  if (std::isfinite(rel_error)) doc["rel_error"] = rel_error;
  doc["mart_loss"] = last.mart_loss;
  doc["mean_value"] = last.mean_value;
  doc["epochs"] = epochs;
  std::ofstream out(path);
  MARTNET_REQUIRE(out.good(), "write_metrics: cannot open " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace martnet
