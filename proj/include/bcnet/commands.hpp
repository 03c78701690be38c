#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bcnet/run_config.hpp"

namespace bcnet {

// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_predict(const RunConfig& cfg, const std::vector<std::string>& images, std::ostream& out,
                std::ostream& log);
int cmd_inspect(const std::string& weights_path, std::ostream& out, std::ostream& log);

struct PreviewOptions {
  std::string image;  // empty: first training image under cfg.data
  std::string out_dir = "augment_preview";
  std::size_t count = 8;
};

int cmd_preview_augment(const RunConfig& cfg, const PreviewOptions& opts, std::ostream& out,
                        std::ostream& log);

/// Full command-line entry point: parses args (flags and an optional
/// --config file of key=value lines) and dispatches. Results go to out,
/// diagnostics and progress to log.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace bcnet
