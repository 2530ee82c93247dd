#pragma once

#include <string>
#include <vector>

namespace octa {

/// Build a comparison table over finished run directories. Segmentation runs
/// get ID/Method/Loss/Metric/Schedule/Aug/ValScore columns, classification
/// runs ID/Method/Pre-training/Mix/ValKappa; cross-validation runs report the
/// fold-mean metric. Each run dir must contain config.echo.cfg plus either
/// checkpoint.meta or summary.txt.
std::string write_report(const std::vector<std::string>& run_dirs);

}  // namespace octa
