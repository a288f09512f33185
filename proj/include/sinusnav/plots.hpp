#pragma once

#include <string>
#include <vector>

#include "sinusnav/experiment.hpp"

namespace sinusnav {

// Writes path_vs_actual.csv, waypoint_rmse.csv and margins.csv into dir.
void emit_plots(const Report& report, const std::vector<TrialLog>& logs, const std::string& dir);

}  // namespace sinusnav
