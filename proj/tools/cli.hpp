#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ovnet/common.hpp"

namespace ovnet::cli {

enum class Command { scenario, game, fl, metrics, selftest };

std::string to_string(Command c);
std::optional<Command> command_from_string(const std::string& s);

struct RunConfig {
  Command command = Command::selftest;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  int verbosity = 0;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigCheck {
  nlohmann::json config;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Parses `path` and checks it against the schema of `cmd`. Every violation
/// is reported, not just the first. Throws IoError if the file cannot be read.
ConfigCheck validate_config(const std::string& path, Command cmd);
std::vector<std::string> validate_config_json(const nlohmann::json& j, Command cmd);

struct Artifact {
  std::string name;
  std::string content;
  bool timing = false;  // excluded from the replay digest
};

struct CommandResult {
  std::vector<Artifact> artifacts;
  std::vector<std::string> failures;  // assertion or acceptance failures
  bool ok() const { return failures.empty(); }
};

CommandResult run_command(const RunConfig& rc, const nlohmann::json& config);

/// MANIFEST text: a status line, then one "<sha256>  <name>[  timing]" line per artifact.
std::string manifest_text(const std::vector<Artifact>& artifacts, bool ok, const std::string& error = {});
/// Digest of a MANIFEST's status and non-timing lines.
std::string replay_digest(const std::string& manifest);

/// Writes each artifact atomically, then the MANIFEST.
void write_outputs(const std::string& out_dir, const std::vector<Artifact>& artifacts, bool ok,
                   const std::string& error = {});

/// Exit codes: 0 success, 1 assertion failure, 2 usage or config error.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ovnet::cli
