#pragma once

#include <string>
#include <vector>

#include "martnet/config.hpp"

namespace martnet {

struct CliOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  Index threads = 1;
  std::string checkpoint_path;  // eval only
};

// Exit codes: 0 success, 1 runtime failure (abort, bad checkpoint, failed
// checks), 2 configuration errors.
int cli_train(const CliOptions& opt);
int cli_eval(const CliOptions& opt);
int cli_verify(const CliOptions& opt);

}  // namespace martnet
