#pragma once

#include "cli/config.hpp"

#include <nlohmann/json.hpp>

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace needlets::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitResource = 4,
};

/// Maps a library exception onto the documented exit codes.
int exit_code_for(const std::exception& e);

const std::vector<std::string>& command_names();

/// Runs one subcommand: validates `config`, writes its outputs and a
/// manifest.json into `out_dir` (created if missing) and returns the summary
/// block that also goes into the manifest. Progress lines go to `log`.
nlohmann::ordered_json run_command(const std::string& name, const Config& config,
                                   const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace needlets::cli
