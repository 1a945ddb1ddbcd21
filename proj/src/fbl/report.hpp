#pragma once

#include "fbl/config.hpp"
#include "fbl/model.hpp"

#include <string>

namespace fbl {

/// Deterministic stamp carried by every report: model hash, convention,
/// thresholds, seed, tool version. Wall-clock data lives only in the meta
/// block so that everything outside it is byte-identical across runs.
Json report_stamp(const RunConfig& cfg);

void write_text_file(const std::string& path, const std::string& content);

/// Writes <outdir>/<name>.report.json and returns the full report object.
Json write_report(const std::string& outdir, const std::string& name, const Json& result,
                  const RunConfig& cfg, double wall_seconds);

}  // namespace fbl
