#pragma once

#include <filesystem>

#include "matnet/config.hpp"

namespace matnet {

/// prices -> weekly signals -> four-layer panel under <output>/panel.
void cmd_extract(const RunConfig& cfg);

/// panel + factors -> draws, summary and diagnostics under <output>/estimate.
void cmd_estimate(const RunConfig& cfg);

/// summary + p-values -> analytics tables and index.json under <output>/analysis.
void cmd_analyze(const RunConfig& cfg);

/// Writes synthetic inputs, truth files and a ready-to-run run.ini into `out`.
void cmd_simulate(const SyntheticSpec& spec, const std::filesystem::path& out);

}  // namespace matnet
