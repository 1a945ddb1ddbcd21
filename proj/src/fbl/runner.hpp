#pragma once

#include "fbl/config.hpp"

#include <string>
#include <vector>

namespace fbl {

struct CommandResult {
    int exit_code = 0;  // 0 ok, 1 analysis failure, 2 invalid config, 3 verify failure
    Json report;
};

/// Executes one CLI command against the config, writing
/// <outdir>/<command>.report.json plus CSV artifacts. Never throws; errors
/// become structured JSON and a nonzero exit code.
CommandResult run_command(const std::string& command, const RunConfig& cfg,
                          const std::string& outdir);

/// Parses config JSON (with overrides) and runs; config errors map to exit 2.
CommandResult run_command_json(const std::string& command, const std::string& config_json,
                               const std::string& overrides_json, const std::string& outdir);

std::vector<std::string> command_names();

/// Sensible per-model defaults used when a command block is omitted.
Box default_census_box(const CyclicVectorField& model);
Vec default_initial_state(const CyclicVectorField& model);

}  // namespace fbl
