#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "martnet/config.hpp"
#include "martnet/oracle.hpp"
#include "martnet/trainer.hpp"

namespace martnet {

// Versioned JSON checkpoint of the full training state (parameters, lambda,
// optimizer moments, epoch). Doubles are serialized in shortest round-trip
// form, so save/load is bit-exact.
void save_checkpoint(const std::string& path, const TrainState& state, const RunConfig& cfg);

// Rebuilds the state against the given problem (terminal hooks come from the
// spec). Throws on unreadable files, schema mismatches, or dimension
// conflicts with the spec.
TrainState load_checkpoint(const std::string& path, const ProblemSpec& spec);

// history.csv writer; column order is part of the format:
//   epoch,mart_loss,mean_value,rel_error,wall_time_s
// rel_error is empty without an oracle; wall_time_s is empty when timing is
// recorded off (so equal-seed runs stay byte-identical).
class HistoryWriter {
 public:
  HistoryWriter(const std::string& path, bool timing);
  void append(const TrainingRecord& rec);

 private:
  std::ofstream out_;
  bool timing_;
};

// Solution curves over one grid segment: s, candidate value, reference and
// its standard error (reference columns empty when no oracle is attached).
void write_curves(const std::string& path, const EvalGrid& grid, int segment,
                  const std::vector<double>& candidate, const std::vector<RefValue>* reference);

void write_metrics(const std::string& path, double rel_error, const TrainingRecord& last,
                   Index epochs);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace martnet
