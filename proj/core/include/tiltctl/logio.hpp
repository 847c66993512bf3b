#pragma once

#include <string>

#include "tiltctl/sim.hpp"

namespace tiltctl {

/// One row per plant step; column order is documented in the README and is
/// part of the tool contract. Byte-identical output for identical runs.
void write_run_csv(const std::string& path, const RunLog& log);

/// Stable metrics document: the same keys for every scenario kind, null where
/// a metric does not apply.
std::string metrics_json(const RunSummary& summary);
void write_metrics_json(const std::string& path, const RunSummary& summary);

}  // namespace tiltctl
