#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fbf {

enum ExitStatus { kExitOk = 0, kExitInvalid = 2, kExitNumerical = 3 };

const std::vector<std::string>& command_names();

// Versioned defaults for a command; throws InvalidConfig for unknown commands.
nlohmann::json default_config(const std::string& command);

// Defaults overlaid with `user`; unknown keys and wrong types are rejected.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& user);

// Runs a command with an already resolved config and writes results.csv,
// provenance.json and summary.txt into `out`. Errors propagate as exceptions.
void run_command(const std::string& command, const nlohmann::json& config, const std::filesystem::path& out,
                 std::ostream& log);

// Same, but maps failures onto the exit status and reports them on `log`.
int run(const std::string& command, const nlohmann::json& user_config, const std::filesystem::path& out,
        std::ostream& log);

}  // namespace fbf
