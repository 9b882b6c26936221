#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace patchflow {

/// Where command output goes. Either callback may be empty.
struct Sink {
  std::function<void(const std::string&)> out, err;
  void print(const std::string& s) const {
    if (out) out(s);
  }
  void warn(const std::string& s) const {
    if (err) err(s);
  }
};

struct CommandOptions {
  std::string config;  // path or bundled scenario name
  std::string output;  // overrides PATCHFLOW_OUTPUT and the config
  int threads = 0;     // 0 keeps the current setting
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

/// Exit codes: 64 config, 65 unknown kernel, 74 I/O, 70 anything else.
int exit_code_for(ErrorCode code);

/// A readable file is returned as is; otherwise `name`.json is looked up in
/// $PATCHFLOW_SCENARIO_DIR and then in the bundled scenario directory.
std::string resolve_config_path(const std::string& name_or_path);

/// --output, then $PATCHFLOW_OUTPUT, then the config value.
std::string resolve_output_dir(const std::string& flag, const std::string& config_value);

std::string bundled_scenario_dir();

int cmd_simulate(const CommandOptions& opt, const Sink& sink);
int cmd_verify(const CommandOptions& opt, const Sink& sink);
int cmd_kernel_info(const std::string& name, int n, const std::vector<double>& params, const std::string& output,
                    const Sink& sink);
int cmd_report(const std::string& csv, const std::string& output, const Sink& sink);

}  // namespace patchflow
